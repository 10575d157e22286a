"""Pseudo-score test for a changepoint in a (generalized) linear model.

The statistic standardizes the linear form phibar' (I - A) y, where A is
the hat matrix of the fitted null model and phibar averages the segmented
term phi(z, psi) over K candidate changepoints:

    s0 = phibar' (I - A) y / sqrt(sigma^2 * phibar' (I - A) phibar)

Under the null of no changepoint s0 is standard Normal (exactly for
Gaussian responses with known variance, asymptotically otherwise).  Two
segmented-term shapes are supported: a level shift ("jump",
I(z > psi)) and a slope change ("broken-line", (z - psi)_+).

For binomial-logit responses the same construction on the working scale
of the converged IRLS fit reduces to

    s0 = phibar' (y - mu_hat) / sqrt(phibar' W (I - A) phibar)

with W the IRLS weights and A the weighted hat matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import model_core
from .errors import (
    DegenerateCovariateError,
    DegenerateSeriesError,
    DomainError,
    NonIdentifiableError,
    SizeError,
)
from .model_core import BINOMIAL, GAUSSIAN, DesignMatrix, FitOptions

JUMP = "jump"
BROKEN_LINE = "broken-line"
_KINDS = (JUMP, BROKEN_LINE)

ALTERNATIVES = ("two-sided", "greater", "less")

#: Default number of candidate changepoints.
DEFAULT_K = 10


@dataclass(frozen=True)
class SegmentedTermSpec:
    """Candidate changepoints and the shape of the segmented term.

    ``psis`` must be strictly increasing and strictly inside the range
    of ``z``; use :func:`candidate_psis` to build them from quantiles.
    """

    kind: str
    psis: np.ndarray
    K: int
    z: np.ndarray

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown segmented term kind {self.kind!r}")
        z = np.asarray(self.z, dtype=float).ravel()
        psis = np.asarray(self.psis, dtype=float).ravel()
        if self.K < 1 or psis.shape[0] != self.K:
            raise DomainError("K must be >= 1 and match len(psis)")
        if np.any(np.diff(psis) <= 0):
            raise DomainError("psis must be strictly increasing")
        if psis[0] <= z.min() or psis[-1] >= z.max():
            raise DomainError("psis must be strictly inside the range of z")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "psis", psis)


@dataclass
class PScoreResult:
    """Standardized pseudo-score statistic and its p-value."""

    s0: float
    p_value: float
    alternative: str
    dispersion_used: float
    dispersion_source: str    # "supplied" | "null-fit" | "alt-fit"
    phi_bar: np.ndarray
    psi_hat: float = None


def phi(z, psi: float, kind: str) -> np.ndarray:
    """Segmented term phi(z, psi).

    jump        -> I(z > psi)
    broken-line -> (z - psi) I(z > psi)
    """
    z = np.asarray(z, dtype=float).ravel()
    if not z.min() < psi < z.max():
        raise DomainError(
            f"psi={psi} is not strictly inside the z range "
            f"({z.min()}, {z.max()})"
        )
    if kind == JUMP:
        return (z > psi).astype(float)
    if kind == BROKEN_LINE:
        return np.maximum(z - psi, 0.0)
    raise DomainError(f"unknown segmented term kind {kind!r}")


def candidate_psis(z, K: int = DEFAULT_K) -> np.ndarray:
    """K equally spaced quantiles of z at probabilities k/(K+1).

    Quantiles are the usual linear interpolation of order statistics
    (numpy's default, R type 7).  Values are deduplicated and any that
    fall on the boundary of the z range are dropped, so with heavily
    tied covariates fewer than K candidates may be returned.
    """
    z = np.asarray(z, dtype=float).ravel()
    if K < 1:
        raise DomainError("K must be >= 1")
    if z.shape[0] < K + 2:
        raise SizeError(f"need n >= K + 2 (n={z.shape[0]}, K={K})")
    if np.ptp(z) == 0.0:
        raise DegenerateCovariateError("segmented covariate is constant")
    probs = np.arange(1, K + 1) / (K + 1)
    psis = np.unique(np.quantile(z, probs))
    psis = psis[(psis > z.min()) & (psis < z.max())]
    if psis.size == 0:
        raise DegenerateCovariateError("no interior candidate changepoints")
    return psis


def make_term_spec(z, kind: str = JUMP, K: int = DEFAULT_K) -> SegmentedTermSpec:
    """Convenience constructor: quantile candidates for a given z."""
    psis = candidate_psis(z, K)
    return SegmentedTermSpec(kind=kind, psis=psis, K=psis.shape[0], z=np.asarray(z, dtype=float))


def phi_bar(spec: SegmentedTermSpec) -> np.ndarray:
    """Elementwise mean of phi(z, psi_k) over the K candidates."""
    acc = np.zeros(spec.z.shape[0])
    for psi in spec.psis:
        acc += phi(spec.z, psi, spec.kind)
    return acc / spec.K


def _p_value(s0: float, alternative: str) -> float:
    if alternative == "two-sided":
        return float(2.0 * norm.cdf(-abs(s0)))
    if alternative == "greater":
        return float(norm.cdf(-s0))
    if alternative == "less":
        return float(norm.cdf(s0))
    raise DomainError(f"unknown alternative {alternative!r}")


def _alt_fit_dispersion(y, X: DesignMatrix, spec: SegmentedTermSpec) -> float:
    """Residual variance from the best single-psi augmented fit."""
    n, p = X.n, X.p
    best = np.inf
    for psi in spec.psis:
        aug = np.column_stack([X.values, phi(spec.z, psi, spec.kind)])
        beta, *_ = np.linalg.lstsq(aug, y, rcond=None)
        resid = y - aug @ beta
        best = min(best, float(resid @ resid))
    return best / (n - p - 1)


def pscore_statistic(
    y,
    X: DesignMatrix,
    spec: SegmentedTermSpec,
    dispersion: float | None = None,
    alternative: str = "two-sided",
    family: str = GAUSSIAN,
    offset=None,
    opts: FitOptions | None = None,
    dispersion_mode: str = "null-fit",
) -> PScoreResult:
    """Pseudo-score test of "no changepoint" against the segmented term.

    Parameters
    ----------
    dispersion : float, optional
        Known variance sigma^2.  When omitted, it is estimated per
        ``dispersion_mode``: ``"null-fit"`` uses RSS/(n-p) of the null
        model, ``"alt-fit"`` the residual variance of the best
        single-psi augmented fit.  Ignored (fixed 1) for binomial.
    family : str
        ``"gaussian-identity"`` or ``"binomial-logit"``.
    offset : array-like, optional
        Known offset on the linear predictor (binomial family).
    """
    if alternative not in ALTERNATIVES:
        raise DomainError(f"unknown alternative {alternative!r}")
    y = np.asarray(y, dtype=float).ravel()
    pb = phi_bar(spec)

    if family == GAUSSIAN:
        fit = model_core.fit_null_gaussian(y, X)
        resid = y - fit.fitted
        pb_resid = pb - fit.hat @ pb
        quad = float(pb @ pb_resid)
        if quad <= 1e-12:
            raise NonIdentifiableError(
                "averaged segmented term lies in the null column space"
            )
        if dispersion is not None:
            sigma2, source = float(dispersion), "supplied"
        elif dispersion_mode == "alt-fit":
            sigma2, source = _alt_fit_dispersion(y, X, spec), "alt-fit"
        else:
            sigma2, source = fit.dispersion, "null-fit"
        # relative floor: an exact fit leaves only rounding noise in RSS
        if source != "supplied" and sigma2 <= 1e-12 * max(float(y @ y) / y.shape[0], 1.0):
            raise DegenerateSeriesError("zero dispersion: response fits exactly")
        if sigma2 <= 0.0:
            raise DegenerateSeriesError("dispersion must be positive")
        s0 = float(pb @ resid) / np.sqrt(sigma2 * quad)
    elif family == BINOMIAL:
        fit = model_core.fit_null_binomial(y, X, offset=offset, opts=opts)
        w = fit.weights
        pb_resid = pb - fit.hat @ pb
        quad = float(pb @ (w * pb_resid))
        if quad <= 1e-12:
            raise NonIdentifiableError(
                "averaged segmented term lies in the null column space"
            )
        sigma2, source = 1.0, "null-fit"   # binomial dispersion is fixed
        s0 = float(pb @ (y - fit.fitted)) / np.sqrt(quad)
    else:
        raise DomainError(f"unknown family {family!r}")

    return PScoreResult(
        s0=float(s0),
        p_value=_p_value(float(s0), alternative),
        alternative=alternative,
        dispersion_used=float(sigma2),
        dispersion_source=source,
        phi_bar=pb,
    )


def _changepoint_grid(z: np.ndarray, grid_size: int) -> np.ndarray:
    """Interior candidate grid: distinct z values, thinned to quantiles
    when there are more than ``grid_size`` of them."""
    distinct = np.unique(z)
    interior = distinct[(distinct > distinct[0]) & (distinct < distinct[-1])]
    if interior.size == 0:
        raise DegenerateCovariateError("covariate has no interior values")
    if interior.size <= grid_size:
        return interior
    probs = (np.arange(1, grid_size + 1) - 0.5) / grid_size
    grid = np.unique(np.quantile(z, probs))
    return grid[(grid > z.min()) & (grid < z.max())]


def estimate_changepoint(
    y,
    X: DesignMatrix,
    z,
    kind: str = JUMP,
    grid_size: int = 200,
    family: str = GAUSSIAN,
    offset=None,
) -> float:
    """Grid changepoint estimate: the psi maximizing the single-psi
    absolute score statistic (smallest maximizer on ties).

    The grid contains every distinct interior z value, or 200 interior
    quantile points when the covariate has more distinct values than
    that.  Meant to be read after a significant test; significance is
    not enforced here.
    """
    y = np.asarray(y, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if np.ptp(z) == 0.0:
        raise DegenerateCovariateError("segmented covariate is constant")
    grid = _changepoint_grid(z, grid_size)

    if family == GAUSSIAN:
        fit = model_core.fit_null_gaussian(y, X)
        resid = y - fit.fitted
        weights = np.ones_like(y)
    elif family == BINOMIAL:
        fit = model_core.fit_null_binomial(y, X, offset=offset)
        resid = y - fit.fitted
        weights = fit.weights
    else:
        raise DomainError(f"unknown family {family!r}")

    best_psi, best_val = None, -np.inf
    for psi in grid:
        ph = phi(z, psi, kind)
        ph_resid = ph - fit.hat @ ph
        quad = float(ph @ (weights * ph_resid))
        if quad <= 1e-12:
            continue
        val = abs(float(ph @ resid)) / np.sqrt(quad)
        if val > best_val + 1e-15:
            best_psi, best_val = psi, val
    if best_psi is None:
        raise NonIdentifiableError("no admissible changepoint candidate")
    return float(best_psi)
