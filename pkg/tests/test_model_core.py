"""Tests for the null-model fitting layer."""

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit, logit

from segpower.errors import (
    BoundaryError,
    ConvergenceError,
    DegreesOfFreedomError,
    DimensionError,
    RankError,
)
from segpower.model_core import (
    DesignMatrix,
    build_design,
    fit_null_binomial,
    fit_null_gaussian,
)


# ---------------------------------------------------------------------------
# build_design / DesignMatrix
# ---------------------------------------------------------------------------


class TestBuildDesign:
    def test_intercept_only(self):
        """An empty covariate list with explicit n gives a column of ones."""
        X = build_design([], n=5)
        assert X.values.shape == (5, 1)
        assert np.all(X.values == 1.0)
        assert X.column_names == ("intercept",)
        assert X.has_intercept

    def test_intercept_plus_covariates(self):
        z = np.arange(1, 7) / 6
        X = build_design([z, z**2])
        assert X.values.shape == (6, 3)
        assert X.column_names == ("intercept", "x1", "x2")
        np.testing.assert_allclose(X.values[:, 1], z)

    def test_no_intercept(self):
        z = np.arange(4.0)
        X = build_design([z], include_intercept=False)
        assert X.values.shape == (4, 1)
        assert not X.has_intercept

    def test_mismatched_lengths(self):
        with pytest.raises(DimensionError):
            build_design([np.arange(4.0), np.arange(5.0)])

    def test_empty_without_n(self):
        with pytest.raises(DimensionError):
            build_design([])

    def test_intercept_flag_must_match_column(self):
        with pytest.raises(DimensionError):
            DesignMatrix(
                values=np.arange(8.0).reshape(4, 2),
                column_names=("intercept", "x1"),
                has_intercept=True,
            )


# ---------------------------------------------------------------------------
# Gaussian null fit
# ---------------------------------------------------------------------------


class TestFitNullGaussian:
    def test_intercept_only_hand_oracle(self):
        """beta = mean, RSS and dispersion computed by hand."""
        y = np.array([2.0, 2.1, 1.9, 3.0, 3.1])
        X = build_design([], n=5)
        fit = fit_null_gaussian(y, X)
        # mean = 12.1 / 5 = 2.42; RSS = sum (y - 2.42)^2 = 1.348
        np.testing.assert_allclose(fit.beta_hat, [2.42])
        rss = float((y - fit.fitted) @ (y - fit.fitted))
        assert rss == pytest.approx(1.348, abs=1e-12)
        assert fit.dispersion == pytest.approx(1.348 / 4, abs=1e-12)

    def test_line_fit_matches_polyfit(self):
        rng = np.random.default_rng(5)
        z = np.linspace(0, 1, 20)
        y = 1.0 + 2.0 * z + 0.1 * rng.standard_normal(20)
        fit = fit_null_gaussian(y, build_design([z]))
        b1, b0 = np.polyfit(z, y, 1)
        np.testing.assert_allclose(fit.beta_hat, [b0, b1], rtol=1e-10)

    def test_hat_is_projection(self):
        """The hat matrix is symmetric, idempotent, with trace p."""
        rng = np.random.default_rng(11)
        z = rng.standard_normal(15)
        X = build_design([z, z**2])
        fit = fit_null_gaussian(rng.standard_normal(15), X)
        A = fit.hat
        np.testing.assert_allclose(A, A.T, atol=1e-10)
        np.testing.assert_allclose(A @ A, A, atol=1e-10)
        assert np.trace(A) == pytest.approx(3.0, abs=1e-8)

    def test_hat_annihilates_design(self):
        """(I - A) X = 0: residuals are orthogonal to the column space."""
        z = np.arange(1, 11) / 10
        X = build_design([z])
        fit = fit_null_gaussian(np.sin(z * 5), X)
        np.testing.assert_allclose(
            X.values - fit.hat @ X.values, 0.0, atol=1e-10
        )

    def test_location_equivariance(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(12)
        X = build_design([np.arange(12.0)])
        f0 = fit_null_gaussian(y, X)
        f1 = fit_null_gaussian(y + 7.0, X)
        assert f1.beta_hat[0] == pytest.approx(f0.beta_hat[0] + 7.0, abs=1e-10)
        assert f1.dispersion == pytest.approx(f0.dispersion, abs=1e-10)

    def test_collinear_design_rejected(self):
        z = np.arange(1, 9, dtype=float)
        X = build_design([z, 2 * z])
        with pytest.raises(RankError):
            fit_null_gaussian(np.ones(8), X)

    def test_saturated_design_rejected(self):
        X = build_design([np.array([1.0, 2.0])])
        with pytest.raises(DegreesOfFreedomError):
            fit_null_gaussian(np.array([0.0, 1.0]), X)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            fit_null_gaussian(np.ones(4), build_design([], n=5))


# ---------------------------------------------------------------------------
# Binomial null fit
# ---------------------------------------------------------------------------


class TestFitNullBinomial:
    def test_intercept_only_is_logit_of_mean(self):
        """Closed form: beta = logit(ybar) for the intercept-only model."""
        y = np.array([1, 1, 1, 1, 1, 1, 1, 0, 0, 0], dtype=float)
        fit = fit_null_binomial(y, build_design([], n=10))
        assert fit.beta_hat[0] == pytest.approx(logit(0.7), abs=1e-8)
        assert fit.dispersion == 1.0

    def test_matches_direct_likelihood_maximization(self):
        """IRLS agrees with a derivative-free optimizer on the same likelihood."""
        rng = np.random.default_rng(42)
        x = rng.standard_normal(40)
        y = (rng.random(40) < expit(0.3 + 0.8 * x)).astype(float)
        X = build_design([x])
        fit = fit_null_binomial(y, X)

        def nll(beta):
            eta = X.values @ beta
            return float(np.sum(np.log1p(np.exp(eta)) - y * eta))

        direct = minimize(nll, x0=[0.0, 0.0], method="Nelder-Mead",
                          options={"xatol": 1e-9, "fatol": 1e-12})
        np.testing.assert_allclose(fit.beta_hat, direct.x, atol=1e-5)

    def test_score_equation_holds(self):
        """At the MLE the canonical score X'(y - mu) vanishes."""
        rng = np.random.default_rng(8)
        x = rng.standard_normal(30)
        y = (rng.random(30) < expit(x)).astype(float)
        X = build_design([x])
        fit = fit_null_binomial(y, X)
        score = X.values.T @ (y - fit.fitted)
        np.testing.assert_allclose(score, 0.0, atol=1e-6)

    def test_score_equation_with_offset(self):
        rng = np.random.default_rng(9)
        off = rng.standard_normal(30)
        y = (rng.random(30) < expit(0.5 + off)).astype(float)
        X = build_design([], n=30)
        fit = fit_null_binomial(y, X, offset=off)
        assert float(np.sum(y - fit.fitted)) == pytest.approx(0.0, abs=1e-6)

    def test_weighted_hat_is_projection(self):
        """The weighted hat matrix is idempotent with trace p."""
        rng = np.random.default_rng(13)
        x = rng.standard_normal(25)
        y = (rng.random(25) < expit(0.2 * x)).astype(float)
        fit = fit_null_binomial(y, build_design([x]))
        A = fit.hat
        np.testing.assert_allclose(A @ A, A, atol=1e-8)
        assert np.trace(A) == pytest.approx(2.0, abs=1e-8)

    def test_all_ones_response_is_boundary(self):
        with pytest.raises(BoundaryError):
            fit_null_binomial(np.ones(10), build_design([], n=10))

    def test_separated_data_flagged(self):
        """Perfectly separated data cannot converge to finite coefficients."""
        x = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0, -4.0, 4.0])
        y = (x > 0).astype(float)
        with pytest.raises(ConvergenceError):
            fit_null_binomial(y, build_design([x]))

    def test_non_binary_response_rejected(self):
        with pytest.raises(DimensionError):
            fit_null_binomial(np.array([0.0, 0.5, 1.0, 1.0]), build_design([], n=4))
