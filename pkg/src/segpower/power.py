"""Analytic power and sample size for the segmented-regression score test.

Under a broken-line alternative y = X beta + delta (z - psi)_+ + eps the
pseudo-score statistic is Normal with unit variance and mean

    E1 = delta * phibar' (I - A) (z - psi)_+
         / sqrt(sigma^2 * phibar' (I - A) phibar)

where phibar averages the broken-line term over the candidate
changepoints and A is the hat matrix of the null design.  Power is then
a plain Normal tail probability, and sample size inverts it.

The null design always contains an intercept and the linear term in z
(the no-changepoint fit of a segmented model is a straight line in z),
plus any extra covariates supplied by the caller.

Covariates enter as a small specification language -- either a named
quantile function with parameters or an explicit list of values:

    equispaced | normal(mu,sd) | uniform(a,b) | exponential(rate)
               | beta(a,b)     | v1,v2,v3,...

Distributional specs are realized deterministically through their
quantile function on the mid-grid p_i = (i - 0.5)/n, so every power
number here is reproducible (no sampling noise).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import norm

from ._rng import derived_rng
from .errors import (
    ConfigurationError,
    DegenerateCovariateError,
    DimensionError,
    DomainError,
    FlatFitError,
    NonIdentifiableError,
    ParseError,
    RankError,
    SizeError,
    UnreachableTargetError,
)
from .pscore import BROKEN_LINE, DEFAULT_K, _changepoint_grid, candidate_psis, phi

#: Hard cap for the sample-size search.
MAX_SAMPLE_SIZE = 10_000_000

_ALTERNATIVES = ("two-sided", "greater", "less")


# ---------------------------------------------------------------------------
# Covariate specification mini-language
# ---------------------------------------------------------------------------

#: distribution name -> number of parameters
_DISTRIBUTIONS = {"equispaced": 0, "normal": 2, "uniform": 2, "exponential": 1, "beta": 2}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    """Yield (kind, value, position) triples; raise on stray characters."""
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _fmt(x: float) -> str:
    """Shortest exact decimal form: '5' for 5.0, repr otherwise."""
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True)
class CovariateSpec:
    """A parsed covariate specification.

    ``source`` is one of equispaced / normal / uniform / exponential /
    beta / explicit; ``params`` holds the distribution parameters and
    ``values`` the explicit points (exactly one of the two is
    populated, except equispaced which has neither).  ``text`` is the
    canonical form, which re-parses to an equal spec.
    """

    source: str
    params: tuple = ()
    values: tuple = None
    text: str = ""

    @staticmethod
    def equispaced() -> "CovariateSpec":
        return CovariateSpec(source="equispaced", text="equispaced")


def _canonical_text(source: str, params: tuple, values: tuple | None) -> str:
    if source == "equispaced":
        return "equispaced"
    if source == "explicit":
        return ",".join(_fmt(v) for v in values)
    return f"{source}({','.join(_fmt(p) for p in params)})"


def _check_domain(source: str, params: tuple, positions: tuple):
    if source == "normal" and params[1] <= 0:
        raise ParseError("normal sd must be > 0", positions[1])
    if source == "uniform" and params[0] >= params[1]:
        raise ParseError("uniform needs a < b", positions[1])
    if source == "exponential" and params[0] <= 0:
        raise ParseError("exponential rate must be > 0", positions[0])
    if source == "beta" and (params[0] <= 0 or params[1] <= 0):
        bad = 0 if params[0] <= 0 else 1
        raise ParseError("beta shapes must be > 0", positions[bad])


def parse_covariate_spec(text: str) -> CovariateSpec:
    """Parse covariate-specification text.

    Raises
    ------
    ParseError
        Unknown distribution name, wrong parameter count, parameter
        outside its domain, or malformed input -- always with the
        0-based text position of the offending token.
    """
    tokens = _tokenize(text)
    kind, value, pos = tokens[0]

    if kind == "name":
        name = value.lower()
        if name not in _DISTRIBUTIONS:
            raise ParseError(f"unknown distribution {value!r}", pos)
        arity = _DISTRIBUTIONS[name]
        if arity == 0:
            nkind, _, npos = tokens[1]
            if nkind != "end":
                raise ParseError(f"{name} takes no parameters", npos)
            return CovariateSpec(source=name, text=name)
        if tokens[1][0] != "lparen":
            raise ParseError(f"expected '(' after {name}", tokens[1][2])
        params, positions = [], []
        i = 2
        while True:
            tkind, tval, tpos = tokens[i]
            if tkind != "number":
                raise ParseError(
                    f"{name} expects {arity} numeric parameter(s)", tpos
                )
            params.append(float(tval))
            positions.append(tpos)
            i += 1
            tkind, tval, tpos = tokens[i]
            if tkind == "comma":
                i += 1
                continue
            if tkind == "rparen":
                i += 1
                break
            raise ParseError("expected ',' or ')'", tpos)
        if tokens[i][0] != "end":
            raise ParseError("trailing input after ')'", tokens[i][2])
        if len(params) != arity:
            raise ParseError(
                f"{name} expects {arity} parameter(s), got {len(params)}", pos
            )
        params = tuple(params)
        _check_domain(name, params, tuple(positions))
        return CovariateSpec(
            source=name, params=params, text=_canonical_text(name, params, None)
        )

    if kind == "number":
        values = [float(value)]
        i = 1
        while tokens[i][0] == "comma":
            tkind, tval, tpos = tokens[i + 1]
            if tkind != "number":
                raise ParseError("expected a number after ','", tpos)
            values.append(float(tval))
            i += 2
        if tokens[i][0] != "end":
            raise ParseError("expected ',' or end of input", tokens[i][2])
        if len(set(values)) < 3:
            raise ParseError("explicit covariate needs >= 3 distinct values", pos)
        values = tuple(values)
        return CovariateSpec(
            source="explicit",
            values=values,
            text=_canonical_text("explicit", (), values),
        )

    raise ParseError("expected a distribution name or a number list", pos)


def realize_covariate(spec: CovariateSpec, n: int) -> np.ndarray:
    """Deterministic length-n covariate for a spec.

    equispaced gives (1..n)/n; distributional specs evaluate their
    quantile function on the mid-grid p_i = (i - 0.5)/n (ascending);
    explicit specs return their values verbatim (n must match).
    """
    if n < 5:
        raise SizeError(f"need n >= 5, got {n}")
    if spec.source == "explicit":
        if len(spec.values) != n:
            raise DimensionError(
                f"explicit covariate has {len(spec.values)} values, n={n}"
            )
        return np.asarray(spec.values, dtype=float)
    if spec.source == "equispaced":
        return np.arange(1, n + 1) / n
    p = (np.arange(n) + 0.5) / n
    if spec.source == "normal":
        mu, sd = spec.params
        return norm.ppf(p, loc=mu, scale=sd)
    if spec.source == "uniform":
        a, b = spec.params
        return a + p * (b - a)
    if spec.source == "exponential":
        (rate,) = spec.params
        return -np.log1p(-p) / rate
    if spec.source == "beta":
        a, b = spec.params
        return beta_dist.ppf(p, a, b)
    raise ConfigurationError(f"unknown covariate source {spec.source!r}")


def _support_bounds(spec: CovariateSpec):
    """(lo, hi) bounds of the spec's support; None for unbounded."""
    if spec.source == "equispaced":
        return 0.0, 1.0
    if spec.source == "uniform":
        return spec.params
    if spec.source == "exponential":
        return 0.0, None
    if spec.source == "beta":
        return 0.0, 1.0
    if spec.source == "explicit":
        return min(spec.values), max(spec.values)
    return None, None  # normal


# ---------------------------------------------------------------------------
# Power computation
# ---------------------------------------------------------------------------


@dataclass
class PowerRequest:
    """Full parameterization of a power or sample-size computation.

    Exactly one of ``n`` / ``target_power`` must be set.  ``z_spec``
    may be given as specification text; it is parsed on construction.
    """

    psi: float
    delta: float
    sigma: float
    z_spec: CovariateSpec = None
    n: int = None
    target_power: float = None
    alpha: float = 0.01
    alternative: str = "two-sided"
    extra_covariates: np.ndarray = None

    def __post_init__(self):
        if self.z_spec is None:
            self.z_spec = CovariateSpec.equispaced()
        elif isinstance(self.z_spec, str):
            self.z_spec = parse_covariate_spec(self.z_spec)
        if (self.n is None) == (self.target_power is None):
            raise ConfigurationError("set exactly one of n / target_power")
        if self.sigma <= 0:
            raise DomainError("sigma must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must be in (0, 1)")
        if self.target_power is not None and not 0.0 < self.target_power < 1.0:
            raise DomainError("target_power must be in (0, 1)")
        if self.alternative not in _ALTERNATIVES:
            raise DomainError(f"unknown alternative {self.alternative!r}")
        if self.extra_covariates is not None:
            self.extra_covariates = np.atleast_2d(
                np.asarray(self.extra_covariates, dtype=float)
            )


@dataclass
class PowerResult:
    """Analytic power, the mean shift it came from, and the realized z."""

    power: float
    e1: float
    n_used: int
    z_realized: np.ndarray
    ci: tuple = None


def expected_s0(n: int, z, psi: float, delta: float, sigma: float, X, K: int = DEFAULT_K) -> float:
    """Mean of the score statistic under a broken-line alternative.

    ``X`` is the full null design (including intercept and the linear
    z term).  The averaged term uses the broken-line shape with K
    quantile candidates.  Implemented through residual projections, so
    no n x n matrix is formed and large n stays cheap.
    """
    z = np.asarray(z, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != n or z.shape[0] != n:
        raise DimensionError("X and z must have n rows")
    if sigma <= 0:
        raise DomainError("sigma must be > 0")

    hinge = phi(z, psi, BROKEN_LINE)      # validates psi is interior
    psis = candidate_psis(z, K)
    pbar = np.zeros(n)
    for pk in psis:
        pbar += np.maximum(z - pk, 0.0)
    pbar /= psis.shape[0]

    coef, _, rank, _ = np.linalg.lstsq(X, np.column_stack([pbar, hinge]), rcond=None)
    if rank < X.shape[1]:
        raise RankError("null design is rank deficient")
    resid = np.column_stack([pbar, hinge]) - X @ coef
    rb, ru = resid[:, 0], resid[:, 1]
    quad = float(rb @ rb)
    if quad <= 1e-12:
        raise NonIdentifiableError("segmented term lies in the null column space")
    return float(delta * (rb @ ru) / np.sqrt(sigma**2 * quad))


def power_from_e1(e1: float, alpha: float, alternative: str = "two-sided") -> float:
    """Normal-tail power for a unit-variance statistic with mean e1."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must be in (0, 1)")
    if alternative == "two-sided":
        zq = norm.ppf(1.0 - alpha / 2.0)
        return float(norm.cdf(-zq + e1) + norm.cdf(-zq - e1))
    if alternative == "greater":
        return float(norm.cdf(-norm.ppf(1.0 - alpha) + e1))
    if alternative == "less":
        return float(norm.cdf(-norm.ppf(1.0 - alpha) - e1))
    raise DomainError(f"unknown alternative {alternative!r}")


def _null_design(z: np.ndarray, extra: np.ndarray | None) -> np.ndarray:
    cols = [np.ones(z.shape[0]), z]
    if extra is not None:
        if extra.shape[0] != z.shape[0]:
            raise DimensionError("extra covariates must have n rows")
        cols.extend(extra.T)
    return np.column_stack(cols)


def compute_power(req: PowerRequest) -> PowerResult:
    """Analytic power at a fixed sample size."""
    if req.n is None:
        raise ConfigurationError("compute_power needs n; use sample_size for targets")
    z = realize_covariate(req.z_spec, req.n)
    X = _null_design(z, req.extra_covariates)
    e1 = expected_s0(req.n, z, req.psi, req.delta, req.sigma, X)
    return PowerResult(
        power=power_from_e1(e1, req.alpha, req.alternative),
        e1=e1,
        n_used=req.n,
        z_realized=z,
    )


def sample_size(req: PowerRequest) -> int:
    """Smallest n >= 5 whose analytic power reaches the target.

    A doubling bracket is followed by bisection and a final downward
    scan of width 4; the scan absorbs the small non-monotonic ripple
    the quantile grid induces as n changes.
    """
    if req.target_power is None:
        raise ConfigurationError("sample_size needs target_power")
    if req.delta == 0.0:
        raise ConfigurationError("sample size is undefined for delta = 0")
    if req.z_spec.source == "explicit":
        raise ConfigurationError("sample size needs a resizable covariate spec")
    if req.extra_covariates is not None:
        raise ConfigurationError("extra covariates do not resize with n")
    lo_s, hi_s = _support_bounds(req.z_spec)
    if (lo_s is not None and req.psi <= lo_s) or (hi_s is not None and req.psi >= hi_s):
        raise DomainError(
            f"psi={req.psi} lies outside the support of {req.z_spec.text!r}"
        )

    target = req.target_power

    def power_at(n: int) -> float:
        try:
            return compute_power(replace(req, n=n, target_power=None)).power
        except (DomainError, SizeError):
            # psi not yet interior to the realized grid, or n below the
            # K + 2 floor the candidate-psi set needs
            return -np.inf

    hi = 5
    if power_at(hi) < target:
        lo = hi
        while power_at(hi) < target:
            lo, hi = hi, hi * 2
            if hi > MAX_SAMPLE_SIZE:
                raise UnreachableTargetError(
                    f"target power {target} unreachable below n={MAX_SAMPLE_SIZE}"
                )
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if power_at(mid) >= target:
                hi = mid
            else:
                lo = mid
    best = hi
    for m in range(hi - 1, max(hi - 5, 4), -1):
        if power_at(m) >= target:
            best = m
    return best


# ---------------------------------------------------------------------------
# Post-experimental power
# ---------------------------------------------------------------------------


@dataclass
class SegmentedFit:
    """A fitted broken-line model and the (delta, psi) covariance."""

    psi_hat: float
    delta_hat: float
    beta_hat: np.ndarray
    sigma_hat: float
    cov_delta_psi: np.ndarray


def fit_segmented(y, X, z) -> SegmentedFit:
    """Broken-line fit by profiling the changepoint on a grid.

    The changepoint estimate minimizes the RSS of y ~ [X, (z-psi)_+]
    over the interior grid of distinct z values (quantile-thinned to
    200 when larger).  The covariance of (delta_hat, psi_hat) comes
    from one linearization step around psi_hat: regressors
    U = (z - psi)_+ and V = -I(z > psi) give Var(psi_hat) ~=
    Var(gamma_hat)/delta_hat^2 for gamma the V coefficient, and the
    joint covariance maps from the OLS covariance of (delta, gamma) by
    the delta method.
    """
    y = np.asarray(y, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    Xv = X.values if hasattr(X, "values") else np.asarray(X, dtype=float)
    n = y.shape[0]
    if n < 8:
        raise SizeError(f"fit_segmented needs n >= 8, got {n}")
    if Xv.shape[0] != n or z.shape[0] != n:
        raise DimensionError("y, X, z must have equal length")
    if np.ptp(z) == 0.0:
        raise DegenerateCovariateError("segmented covariate is constant")
    p = Xv.shape[1]

    grid = _changepoint_grid(z, 200)
    best_psi, best_rss, best_coef = None, np.inf, None
    for psi in grid:
        aug = np.column_stack([Xv, np.maximum(z - psi, 0.0)])
        coef, *_ = np.linalg.lstsq(aug, y, rcond=None)
        resid = y - aug @ coef
        rss = float(resid @ resid)
        if rss < best_rss - 1e-15:
            best_psi, best_rss, best_coef = float(psi), rss, coef
    if best_psi is None:
        raise DegenerateCovariateError("no admissible changepoint candidate")

    delta_hat = float(best_coef[-1])
    if abs(delta_hat) < 1e-8:
        raise FlatFitError("slope difference ~ 0; changepoint variance undefined")
    sigma_hat = float(np.sqrt(best_rss / (n - p - 1)))

    # One linearization step for the covariance.
    U = np.maximum(z - best_psi, 0.0)
    V = -(z > best_psi).astype(float)
    M = np.column_stack([Xv, U, V])
    Q, R = np.linalg.qr(M)
    resid = y - Q @ (Q.T @ y)
    s2 = float(resid @ resid) / (n - p - 2)
    Rinv = np.linalg.inv(R)
    C = s2 * (Rinv @ Rinv.T)
    block = C[p : p + 2, p : p + 2]
    J = np.array([[1.0, 0.0], [0.0, 1.0 / delta_hat]])
    cov = J @ block @ J.T
    cov = 0.5 * (cov + cov.T)
    return SegmentedFit(
        psi_hat=best_psi,
        delta_hat=delta_hat,
        beta_hat=np.asarray(best_coef[:p]),
        sigma_hat=sigma_hat,
        cov_delta_psi=cov,
    )


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -1e-8 * max(1.0, float(vals.max())):
        raise ConfigurationError("covariance of (delta, psi) is not PSD")
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def posthoc_power(
    fit: SegmentedFit,
    z,
    alpha: float = 0.01,
    alternative: str = "two-sided",
    ci_draws: int = None,
    seed: int = 0,
    X=None,
) -> PowerResult:
    """Power evaluated at a fitted model's estimates.

    With ``ci_draws`` set, (delta*, psi*) pairs are drawn from the
    bivariate Normal centered at the estimates with the fit's
    covariance; psi* draws are clamped into the realized covariate's
    [0.02, 0.98] quantile range, sigma_hat stays fixed, and the 2.5%
    and 97.5% quantiles of the resulting powers form the interval.
    Each draw uses its own RNG stream derived from (seed, draw index),
    so results are independent of any execution order.
    """
    z = np.asarray(z, dtype=float).ravel()
    n = z.shape[0]
    Xv = _null_design(z, None) if X is None else np.asarray(X, dtype=float)

    def power_at(delta: float, psi: float) -> float:
        e1 = expected_s0(n, z, psi, delta, fit.sigma_hat, Xv)
        return power_from_e1(e1, alpha, alternative)

    point_e1 = expected_s0(n, z, fit.psi_hat, fit.delta_hat, fit.sigma_hat, Xv)
    point = power_from_e1(point_e1, alpha, alternative)
    result = PowerResult(power=point, e1=point_e1, n_used=n, z_realized=z)
    if ci_draws is None:
        return result

    L = _psd_factor(np.asarray(fit.cov_delta_psi, dtype=float))
    lo, hi = np.quantile(z, [0.02, 0.98])
    mean = np.array([fit.delta_hat, fit.psi_hat])
    powers = np.empty(ci_draws)
    for i in range(ci_draws):
        e = derived_rng(seed, i).standard_normal(2)
        d_star, p_star = mean + L @ e
        p_star = float(np.clip(p_star, lo, hi))
        powers[i] = power_at(float(d_star), p_star)
    result.ci = (float(np.quantile(powers, 0.025)), float(np.quantile(powers, 0.975)))
    return result
