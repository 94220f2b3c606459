"""GMM fitting, order selection and variant tests on synthetic ground truth."""

from __future__ import annotations

import numpy as np
import pytest

from adnplan.forecast.gmm import (
    GmmFitError,
    fit_gmm_em,
    fit_variants,
    kfold_select_order,
    pearson_split,
)


def two_component_data(rng, n=2000, sep=6.0):
    means = np.array([[0.0, 0.0], [sep, sep * 0.5]])
    covs = [np.array([[1.0, 0.3], [0.3, 0.8]]), np.array([[0.6, -0.2], [-0.2, 1.2]])]
    comp = rng.random(n) < 0.45
    out = np.empty((n, 2))
    for k in range(2):
        sel = comp == bool(k)
        out[sel] = rng.multivariate_normal(means[k], covs[k], size=int(sel.sum()))
    return out


class TestEmFit:
    def test_recovers_two_component_means(self):
        rng = np.random.default_rng(42)
        x = two_component_data(rng)
        # standardize, as the fitting contract expects
        z = (x - x.mean(0)) / x.std(0)
        model = fit_gmm_em(z, order=2, rng=np.random.default_rng(1))
        truth = np.array([[0.0, 0.0], [6.0, 3.0]])
        truth_z = (truth - x.mean(0)) / x.std(0)
        got = model.means[np.argsort(model.means[:, 0])]
        want = truth_z[np.argsort(truth_z[:, 0])]
        spread = np.abs(want).max()
        assert np.max(np.abs(got - want)) < 0.05 * spread

    def test_order_one_is_sample_moments(self):
        rng = np.random.default_rng(3)
        z = rng.standard_normal((200, 3))
        model = fit_gmm_em(z, order=1, regularization=0.0, rng=rng)
        assert np.allclose(model.means[0], z.mean(0), atol=1e-9)
        assert np.allclose(model.covariances[0], np.cov(z, rowvar=False, bias=True), atol=1e-9)

    def test_order_exceeding_rows_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            fit_gmm_em(np.zeros((5, 2)), order=6)

    def test_loglik_monotone_and_converged(self):
        rng = np.random.default_rng(9)
        z = two_component_data(rng, n=500)
        z = (z - z.mean(0)) / z.std(0)
        # monotonicity is asserted inside the EM loop itself
        model = fit_gmm_em(z, order=3, rng=np.random.default_rng(4))
        assert np.isfinite(model.log_likelihood)
        assert abs(model.weights.sum() - 1.0) < 1e-9
        for cov in model.covariances:
            np.linalg.cholesky(cov)  # SPD after regularization

    def test_sampling_deterministic_under_seed(self):
        rng = np.random.default_rng(5)
        z = two_component_data(rng, n=400)
        model = fit_gmm_em((z - z.mean(0)) / z.std(0), order=2, rng=np.random.default_rng(2))
        a = model.sample(100, np.random.default_rng(77))
        b = model.sample(100, np.random.default_rng(77))
        assert np.array_equal(a, b)


class TestKfoldOrderSelection:
    def test_two_component_selected(self):
        hits = 0
        for trial in range(20):
            rng = np.random.default_rng(100 + trial)
            x = two_component_data(rng, n=600)
            z = (x - x.mean(0)) / x.std(0)
            order = kfold_select_order(z, [1, 2, 3, 4, 5], folds=5, rng=rng)
            hits += order == 2
        assert hits >= 16  # >= 80 %

    def test_single_cluster_selects_one(self):
        rng = np.random.default_rng(8)
        z = rng.standard_normal((500, 2))
        assert kfold_select_order(z, [1, 2, 3], folds=5, rng=rng) == 1

    def test_single_fold_rejected(self):
        with pytest.raises(ValueError, match="folds"):
            kfold_select_order(np.zeros((10, 1)), [1], folds=1, rng=np.random.default_rng(0))


class TestPearsonSplit:
    def test_perfectly_correlated_pair(self):
        t = np.linspace(0, 1, 100)
        x = np.column_stack([t, 2 * t + 1])
        corr, indep = pearson_split(x)
        assert corr == [0, 1] and indep == []

    def test_independent_noise(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((10000, 2))
        corr, indep = pearson_split(x)
        assert corr == [] and indep == [0, 1]

    def test_zero_tolerance_marks_everything_correlated(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((50, 3))
        corr, indep = pearson_split(x, tolerance=0.0)
        assert corr == [0, 1, 2] and indep == []

    def test_single_feature_rejected(self):
        with pytest.raises(ValueError):
            pearson_split(np.zeros((10, 1)))


class TestVariants:
    def test_single_feature_variants_coincide(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((300, 1)) * 2.0 + 5.0
        models = fit_variants(x, orders=[1, 2], folds=3, seed=11)
        lls = [m.log_likelihood(x) for m in models.values()]
        assert max(lls) - min(lls) < 1e-9

    def test_fully_correlated_mixed_equals_multivariate(self):
        rng = np.random.default_rng(6)
        base = rng.standard_normal(800)
        x = np.column_stack([base, 3 * base + 0.01 * rng.standard_normal(800)])
        models = fit_variants(x, orders=[1, 2], folds=3, seed=7)
        assert models["mixed"].blocks == models["multivariate"].blocks
        assert models["mixed"].log_likelihood(x) == pytest.approx(
            models["multivariate"].log_likelihood(x), abs=1e-9
        )

    def test_fully_independent_mixed_equals_univariate(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2000, 2))
        models = fit_variants(x, orders=[1, 2], folds=3, seed=7)
        assert models["mixed"].blocks == models["univariate"].blocks
        assert models["mixed"].log_likelihood(x) == pytest.approx(
            models["univariate"].log_likelihood(x), abs=1e-9
        )

    def test_integer_feature_rounding_on_sample(self):
        rng = np.random.default_rng(12)
        counts = rng.poisson(4.0, size=400).astype(float)
        other = rng.normal(10.0, 2.0, size=400)
        x = np.column_stack([counts, other])
        models = fit_variants(x, orders=[1, 2], folds=3, seed=3, integer_features=frozenset({0}))
        sample = models["univariate"].sample(200, np.random.default_rng(1))
        assert np.all(sample[:, 0] == np.rint(sample[:, 0]))
        assert np.all(sample[:, 0] >= 0)
