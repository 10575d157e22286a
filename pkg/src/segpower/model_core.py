"""Regression foundations shared by every test in the package.

Design-matrix construction, ordinary least squares and the binomial-logit
IRLS loop, each returning the fitted null (no-changepoint) model together
with its hat matrix.  All linear solves go through a QR decomposition; the
normal equations are never formed explicitly.

The hat matrix is materialized as a dense n x n array.  Intended sample
sizes are at most a few thousand, so this is cheap and keeps downstream
quadratic forms one matmul away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit

from .errors import (
    BoundaryError,
    ConvergenceError,
    DegreesOfFreedomError,
    DimensionError,
    RankError,
)

# Singular values below RANK_RTOL * s_max mark the design as rank deficient.
RANK_RTOL = 1e-10

GAUSSIAN = "gaussian-identity"
BINOMIAL = "binomial-logit"


@dataclass(frozen=True)
class DesignMatrix:
    """An n x p regression design.

    Parameters
    ----------
    values : ndarray, shape (n, p)
        The design columns.
    column_names : tuple of str
        One label per column.
    has_intercept : bool
        Whether column 0 is a column of ones.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    has_intercept: bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if v.ndim != 2:
            raise DimensionError("design must be a 2-D array")
        if v.shape[1] != len(self.column_names):
            raise DimensionError(
                f"{v.shape[1]} columns but {len(self.column_names)} names"
            )
        if v.shape[1] < 1:
            raise DimensionError("design needs at least one column")
        if self.has_intercept and not np.all(v[:, 0] == 1.0):
            raise DimensionError("has_intercept set but column 0 is not all ones")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass
class FitOptions:
    """Knobs for iterative fitting."""

    max_irls_iter: int = 50
    irls_tol: float = 1e-9     # absolute change in deviance
    theta_clamp: float = 6.0   # used by the binary changepoint tests

    def __post_init__(self):
        if self.max_irls_iter < 1:
            raise ValueError("max_irls_iter must be >= 1")
        if self.irls_tol <= 0:
            raise ValueError("irls_tol must be > 0")


@dataclass
class NullFit:
    """A fitted no-changepoint model.

    Attributes
    ----------
    beta_hat : ndarray, shape (p,)
        Coefficients.
    hat : ndarray, shape (n, n)
        Hat matrix.  For the binomial family this is the weighted
        projection X (X'WX)^-1 X'W, idempotent but not symmetric.
    dispersion : float
        RSS/(n-p) for the Gaussian family, fixed 1.0 for binomial.
    weights : ndarray, shape (n,)
        IRLS working weights mu(1-mu); all ones for Gaussian.
    working_response : ndarray, shape (n,)
        Gaussian: y itself.  Binomial: eta + (y - mu)/w at convergence,
        on the linear-predictor scale including any offset.
    family : str
        ``"gaussian-identity"`` or ``"binomial-logit"``.
    offset : ndarray, shape (n,)
        Known offset on the linear predictor (zeros for Gaussian).
    """

    beta_hat: np.ndarray
    hat: np.ndarray
    dispersion: float
    weights: np.ndarray
    working_response: np.ndarray
    family: str
    offset: np.ndarray
    fitted: np.ndarray = field(repr=False, default=None)


def build_design(covariates, include_intercept: bool = True, n: int | None = None) -> DesignMatrix:
    """Assemble a design matrix from covariate vectors.

    Parameters
    ----------
    covariates : sequence of array-like
        Zero or more length-n covariate vectors.
    include_intercept : bool
        Prepend a column of ones.
    n : int, optional
        Number of rows; required only when `covariates` is empty
        (an intercept-only design has no vector to infer n from).

    Notes
    -----
    Rank is *not* checked here; collinear columns are accepted and
    rejected later by the fitting routines.
    """
    cols = [np.asarray(c, dtype=float).ravel() for c in covariates]
    if cols:
        length = cols[0].shape[0]
        for c in cols[1:]:
            if c.shape[0] != length:
                raise DimensionError("covariate vectors differ in length")
        if n is not None and n != length:
            raise DimensionError(f"n={n} but covariates have length {length}")
    else:
        if n is None:
            raise DimensionError("empty covariate list requires explicit n")
        length = n
    if length < 2:
        raise DimensionError("need at least 2 observations")
    if not cols and not include_intercept:
        raise DimensionError("design needs at least one column")

    names = [f"x{j + 1}" for j in range(len(cols))]
    if include_intercept:
        cols = [np.ones(length)] + cols
        names = ["intercept"] + names
    return DesignMatrix(np.column_stack(cols), names, include_intercept)


def _qr_checked(X: np.ndarray):
    """Economic QR of X after a rank check via singular values."""
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] < RANK_RTOL * s[0]:
        raise RankError(
            f"design is rank deficient (min/max singular value {s[-1]:.3e}/{s[0]:.3e})"
        )
    return np.linalg.qr(X)


def fit_null_gaussian(y, X: DesignMatrix) -> NullFit:
    """Ordinary least squares fit of the null model.

    Returns the coefficient vector, the hat matrix Q Q', and the
    dispersion estimate RSS/(n - p).
    """
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.n, X.p
    if y.shape[0] != n:
        raise DimensionError(f"y has length {y.shape[0]}, design has {n} rows")
    if n <= p:
        raise DegreesOfFreedomError(f"n={n} <= p={p}")

    Q, R = _qr_checked(X.values)
    beta = solve_triangular(R, Q.T @ y)
    hat = Q @ Q.T
    fitted = X.values @ beta
    resid = y - fitted
    dispersion = float(resid @ resid) / (n - p)
    return NullFit(
        beta_hat=beta,
        hat=hat,
        dispersion=dispersion,
        weights=np.ones(n),
        working_response=y.copy(),
        family=GAUSSIAN,
        offset=np.zeros(n),
        fitted=fitted,
    )


def fit_null_binomial(y, X: DesignMatrix, offset=None, opts: FitOptions | None = None) -> NullFit:
    """IRLS fit of a binomial-logit null model with a known offset.

    The loop iterates weighted least squares on the working response
    until the deviance change drops below ``opts.irls_tol``.  Dispersion
    is fixed at 1 (no quasi-likelihood).

    Raises
    ------
    BoundaryError
        All-zero or all-one response with a zero offset: the intercept
        MLE is infinite.
    ConvergenceError
        No convergence within ``opts.max_irls_iter`` iterations, or the
        linear predictor diverged (perfect separation).  The exception
        carries the last coefficient iterate.
    """
    opts = opts or FitOptions()
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.n, X.p
    if y.shape[0] != n:
        raise DimensionError(f"y has length {y.shape[0]}, design has {n} rows")
    if n <= p:
        raise DegreesOfFreedomError(f"n={n} <= p={p}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DimensionError("binomial response must be coded 0/1")
    offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float).ravel()
    if offset.shape[0] != n:
        raise DimensionError("offset length does not match response")
    if not np.all(np.isfinite(offset)):
        raise DimensionError("offset must be finite")
    if np.all(offset == 0.0) and (np.all(y == 0.0) or np.all(y == 1.0)):
        raise BoundaryError("all-0 or all-1 response with zero offset")

    # Standard safe start: shrink the raw response halfway to 1/2.
    mu = (y + 0.5) / 2.0
    eta = np.log(mu / (1.0 - mu))
    beta = np.zeros(p)
    deviance = np.inf
    converged = False
    for _ in range(opts.max_irls_iter):
        w = mu * (1.0 - mu)
        zw = eta + (y - mu) / w - offset
        sw = np.sqrt(w)
        Q, R = _qr_checked(X.values * sw[:, None])
        beta = solve_triangular(R, Q.T @ (zw * sw))
        eta = offset + X.values @ beta
        if np.max(np.abs(eta - offset)) > 30.0:
            raise ConvergenceError(
                "linear predictor diverged (perfect separation?)", last_iterate=beta
            )
        mu = np.clip(expit(eta), 1e-10, 1.0 - 1e-10)
        new_dev = -2.0 * float(np.sum(y * np.log(mu) + (1.0 - y) * np.log(1.0 - mu)))
        if abs(new_dev - deviance) < opts.irls_tol:
            converged = True
            break
        deviance = new_dev
    if not converged:
        raise ConvergenceError(
            f"IRLS did not converge in {opts.max_irls_iter} iterations",
            last_iterate=beta,
        )

    w = mu * (1.0 - mu)
    sw = np.sqrt(w)
    Qw, _ = _qr_checked(X.values * sw[:, None])
    # A = X (X'WX)^-1 X'W  ==  S^-1 Qw Qw' S  with S = diag(sqrt(w))
    hat = (Qw @ Qw.T) * (sw[None, :] / sw[:, None])
    return NullFit(
        beta_hat=beta,
        hat=hat,
        dispersion=1.0,
        weights=w,
        working_response=eta + (y - mu) / w,
        family=BINOMIAL,
        offset=offset,
        fitted=mu,
    )
