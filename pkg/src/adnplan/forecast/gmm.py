"""Gaussian mixture models fitted by expectation-maximization.

Three model variants are supported for multivariate data: a joint mixture
over all features, a product of per-feature univariate mixtures, and a
mixed form that fits a joint mixture on the Pearson-correlated feature
subset and univariate mixtures on the rest.  Component orders are chosen
by k-fold cross-validation against a quantile-matching MAE on data
regenerated from the fitted model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


class GmmFitError(RuntimeError):
    """EM could not produce a usable mixture (degenerate components)."""


@dataclass(frozen=True)
class GaussianMixture:
    """A fitted mixture: weights (K,), means (K, D), covariances (K, D, D)."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: float = np.nan
    n_iter: int = 0

    @property
    def order(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    @property
    def n_parameters(self) -> int:
        k, d = self.order, self.n_features
        return k * (d + d * (d + 1) // 2) + (k - 1)

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lp = _component_log_pdfs(x, self.means, self.covariances)
        lp += np.log(self.weights)[None, :]
        return _logsumexp(lp)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.order, size=n, p=self.weights)
        out = np.empty((n, self.n_features))
        chols = [np.linalg.cholesky(c) for c in self.covariances]
        z = rng.standard_normal((n, self.n_features))
        for k in range(self.order):
            sel = comp == k
            out[sel] = self.means[k] + z[sel] @ chols[k].T
        return out


def _logsumexp(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True)))[:, 0]


def _component_log_pdfs(x, means, covs):
    """(n, K) matrix of per-component Gaussian log densities."""
    n, d = x.shape
    k = means.shape[0]
    out = np.empty((n, k))
    for j in range(k):
        try:
            chol = np.linalg.cholesky(covs[j])
        except np.linalg.LinAlgError as exc:
            raise GmmFitError("covariance not positive definite") from exc
        diff = x - means[j]
        sol = np.linalg.solve(chol, diff.T)
        maha = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, j] = -0.5 * (d * _LOG_2PI + logdet + maha)
    return out


def _kmeanspp_means(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial means across the data."""
    n = x.shape[0]
    means = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((x - m) ** 2, axis=1) for m in means], axis=0
        )
        total = d2.sum()
        if total <= 0:
            means.append(x[rng.integers(n)])
        else:
            means.append(x[rng.choice(n, p=d2 / total)])
    return np.array(means)


def fit_gmm_em(
    features: np.ndarray,
    order: int,
    regularization: float = 1e-6,
    rng: np.random.Generator | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    n_init: int = 3,
) -> GaussianMixture:
    """Fit a GMM of the given order by EM on (already standardized) data.

    The log-likelihood is checked to be non-decreasing every iteration;
    convergence is declared when its relative change drops below `tol`.
    Covariance diagonals get `regularization` times the per-feature data
    variance added to prevent collapse.  `n_init` k-means++-seeded restarts
    guard against poor local optima; the best final likelihood wins.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    n, d = x.shape
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > n:
        raise ValueError(f"order {order} exceeds the {n} available rows")
    rng = rng or np.random.default_rng(0)

    best: GaussianMixture | None = None
    failure: GmmFitError | None = None
    for _ in range(max(1, n_init)):
        try:
            cand = _fit_gmm_once(x, order, regularization, rng, tol, max_iter)
        except GmmFitError as exc:
            failure = exc
            continue
        if best is None or cand.log_likelihood > best.log_likelihood:
            best = cand
    if best is None:
        raise failure or GmmFitError("all EM restarts failed")
    return best


def _fit_gmm_once(x, order, regularization, rng, tol, max_iter) -> GaussianMixture:
    n, d = x.shape
    reg_diag = regularization * np.maximum(np.var(x, axis=0), 0.0) + 1e-12

    means = _kmeanspp_means(x, order, rng)
    base_cov = np.cov(x, rowvar=False).reshape(d, d) + np.diag(reg_diag)
    covs = np.repeat(base_cov[None, :, :], order, axis=0)
    weights = np.full(order, 1.0 / order)

    prev_ll = -np.inf
    ll = prev_ll
    for it in range(1, max_iter + 1):
        log_resp = _component_log_pdfs(x, means, covs) + np.log(weights)[None, :]
        log_norm = _logsumexp(log_resp)
        ll = float(np.sum(log_norm))
        # exact EM is monotone up to round-off; a real decrease means the
        # covariance floor is fighting a collapsing component
        if ll < prev_ll - 1e-6 * max(1.0, abs(prev_ll)):
            raise GmmFitError("log-likelihood decreased: component collapsing")
        if it > 1 and abs(ll - prev_ll) <= tol * max(1.0, abs(prev_ll)):
            break
        prev_ll = ll

        resp = np.exp(log_resp - log_norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-10):
            raise GmmFitError("component weight collapsed to zero")
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        for j in range(order):
            diff = x - means[j]
            covs[j] = (resp[:, j][:, None] * diff).T @ diff / nk[j] + np.diag(reg_diag)
            covs[j] = 0.5 * (covs[j] + covs[j].T)

    return GaussianMixture(
        weights=weights, means=means, covariances=covs, log_likelihood=ll, n_iter=it
    )


def kfold_select_order(
    features: np.ndarray,
    orders: list[int],
    folds: int,
    rng: np.random.Generator,
    regularization: float = 1e-6,
) -> int:
    """Pick the mixture order with the lowest cross-validated MAE.

    For each candidate order the data is split into `folds` groups; the
    model is fitted on the rest and a same-size sample is regenerated from
    it.  The fold error is the per-feature MAE between the sorted test
    and sorted regenerated columns (a quantile-matching distance).

    The regenerated sample is drawn large (16x the fold) and reduced to
    the test fold's plotting positions, so the score measures model misfit
    rather than regeneration noise.  Orders whose mean score lies within
    one standard error of the best are treated as tied, and ties go to the
    smallest order: higher orders nest lower ones, so without this rule
    sampling noise alone would decide among orders that fit equally well.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if folds < 2:
        raise ValueError("cross-validation needs at least 2 folds")
    n = x.shape[0]
    perm = rng.permutation(n)
    parts = np.array_split(perm, folds)

    scores: dict[int, float] = {}
    spreads: dict[int, float] = {}
    for order in sorted(orders):
        fold_errors = []
        for g in range(folds):
            test = x[parts[g]]
            train = x[np.concatenate([parts[h] for h in range(folds) if h != g])]
            if order > train.shape[0]:
                continue
            try:
                model = fit_gmm_em(train, order, regularization, rng=rng)
            except GmmFitError:
                continue
            regen = model.sample(16 * test.shape[0], rng)
            positions = (np.arange(test.shape[0]) + 0.5) / test.shape[0]
            regen_q = np.quantile(regen, positions, axis=0)
            fold_errors.append(float(np.mean(np.abs(np.sort(test, axis=0) - regen_q))))
        if fold_errors:
            scores[order] = float(np.mean(fold_errors))
            spreads[order] = (
                float(np.std(fold_errors, ddof=1)) / np.sqrt(len(fold_errors))
                if len(fold_errors) > 1
                else 0.0
            )
    if not scores:
        raise GmmFitError("every candidate order produced degenerate fits")
    best = min(scores, key=lambda k: (scores[k], k))
    threshold = scores[best] + spreads[best]
    return min(k for k, s in scores.items() if s <= threshold)


def pearson_split(
    features: np.ndarray, tolerance: float = 0.5
) -> tuple[list[int], list[int]]:
    """Partition feature indices into (correlated, independent) subsets.

    A feature is correlated when |PLCC| with at least one other feature
    reaches the tolerance.  NaN correlations (constant columns) count as
    zero.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    d = x.shape[1]
    if d < 2:
        raise ValueError("pearson split needs at least 2 features")
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(x, rowvar=False)
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, 0.0)
    correlated = [m for m in range(d) if np.max(np.abs(corr[m])) >= tolerance]
    independent = [m for m in range(d) if m not in correlated]
    return correlated, independent


# --- variant models --------------------------------------------------------

VARIANTS = ("multivariate", "univariate", "mixed")


@dataclass(frozen=True)
class GmmModel:
    """A (possibly block-structured) GMM over raw, unscaled features.

    Features are standardized internally; `blocks` lists the feature index
    groups, each modeled by its own mixture (independent across blocks).
    Integer-valued features are rounded on sampling.
    """

    variant: str
    blocks: tuple[tuple[int, ...], ...]
    mixtures: tuple[GaussianMixture, ...]
    scale_mean: np.ndarray
    scale_std: np.ndarray
    integer_features: frozenset[int] = frozenset()
    feature_names: tuple[str, ...] = ()

    @property
    def n_features(self) -> int:
        return self.scale_mean.shape[0]

    @property
    def n_parameters(self) -> int:
        return sum(m.n_parameters for m in self.mixtures)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(m.order for m in self.mixtures)

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.scale_mean) / self.scale_std

    def log_likelihood(self, features: np.ndarray) -> float:
        z = self._standardize(np.atleast_2d(np.asarray(features, dtype=float)))
        total = 0.0
        for block, mix in zip(self.blocks, self.mixtures):
            total += float(np.sum(mix.log_pdf(z[:, list(block)])))
        # change of variables back to raw scale
        total -= z.shape[0] * float(np.sum(np.log(self.scale_std)))
        return total

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = np.empty((n, self.n_features))
        for block, mix in zip(self.blocks, self.mixtures):
            z[:, list(block)] = mix.sample(n, rng)
        x = z * self.scale_std + self.scale_mean
        for m in self.integer_features:
            x[:, m] = np.maximum(np.rint(x[:, m]), 0.0)
        return x


def _block_rng(base_seed: int, block: tuple[int, ...]) -> np.random.Generator:
    # identical blocks get identical streams, so structurally equal variants
    # (e.g. mixed == multivariate on fully correlated data) fit identically
    return np.random.default_rng(np.random.SeedSequence((base_seed, 77, *block)))


def fit_variants(
    features: np.ndarray,
    orders: list[int] | None = None,
    folds: int = 5,
    seed: int = 0,
    tolerance: float = 0.5,
    regularization: float = 1e-6,
    integer_features: frozenset[int] = frozenset(),
    feature_names: tuple[str, ...] = (),
) -> dict[str, GmmModel]:
    """Fit the multivariate, univariate and mixed GMM variants.

    Every block's order is selected by k-fold cross-validation before the
    final fit on the full data.  With a single feature all three variants
    coincide.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    n, d = x.shape
    orders = list(orders) if orders is not None else list(range(1, 9))
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    z = (x - mean) / std

    def fit_block(block: tuple[int, ...]) -> GaussianMixture:
        rng = _block_rng(seed, block)
        sub = z[:, list(block)]
        usable = [k for k in orders if k <= n]
        order = kfold_select_order(sub, usable, folds, rng, regularization)
        return fit_gmm_em(sub, order, regularization, rng=rng)

    def build(variant: str, blocks: list[tuple[int, ...]]) -> GmmModel:
        return GmmModel(
            variant=variant,
            blocks=tuple(blocks),
            mixtures=tuple(fit_block(b) for b in blocks),
            scale_mean=mean,
            scale_std=std,
            integer_features=integer_features,
            feature_names=feature_names,
        )

    joint = [tuple(range(d))]
    singles = [(m,) for m in range(d)]
    if d == 1:
        mixed_blocks = joint
    else:
        # a correlated subset is empty or has >= 2 members by construction
        correlated, independent = pearson_split(x, tolerance)
        mixed_blocks = ([tuple(correlated)] if correlated else []) + [
            (m,) for m in independent
        ]
    return {
        "multivariate": build("multivariate", joint),
        "univariate": build("univariate", singles),
        "mixed": build("mixed", mixed_blocks),
    }
