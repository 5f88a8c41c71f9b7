"""Univariate Gaussian-mixture algebra.

Mixtures are the uncertainty currency of the package: forecast errors are
fitted as mixtures, linear combinations of independent mixtures propagate
them through the network sensitivity, and moment-preserving reduction
keeps component counts bounded.

Conventions: weights are strictly positive and sum to one; standard
deviations carry a floor of STD_FLOOR so CDF inversion stays well posed
even for degenerate data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, logsumexp

STD_FLOOR = 1e-6
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_1d(np.asarray(self.means, dtype=float))
        sd = np.atleast_1d(np.asarray(self.stds, dtype=float))
        if not (w.shape == mu.shape == sd.shape) or w.ndim != 1 or w.size < 1:
            raise ValueError("weights/means/stds must be equal-length 1-D arrays")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
        if np.any(sd <= 0):
            raise ValueError("stds must be strictly positive")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sd)):
            raise ValueError("mixture parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", sd)

    @property
    def k(self) -> int:
        return self.weights.size

    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def var(self) -> float:
        m = self.mean()
        second = np.dot(self.weights, self.stds ** 2 + self.means ** 2)
        return float(second - m * m)

    def std(self) -> float:
        return math.sqrt(max(self.var(), 0.0))

    def to_dict(self) -> dict:
        return {
            "components": [
                {"w": float(w), "mu": float(m), "sigma": float(s)}
                for w, m, s in zip(self.weights, self.means, self.stds)
            ]
        }

    @staticmethod
    def from_dict(doc: dict) -> "GaussianMixture":
        comp = doc["components"]
        return GaussianMixture(
            weights=np.array([c["w"] for c in comp]),
            means=np.array([c["mu"] for c in comp]),
            stds=np.array([c["sigma"] for c in comp]),
        )

    @staticmethod
    def single(mean: float, std: float) -> "GaussianMixture":
        return GaussianMixture(np.array([1.0]), np.array([mean]),
                               np.array([max(std, STD_FLOOR)]))

    @staticmethod
    def point_mass(value: float) -> "GaussianMixture":
        return GaussianMixture.single(value, STD_FLOOR)


def gmm_pdf(g: GaussianMixture, x) -> np.ndarray | float:
    x_arr = np.asarray(x, dtype=float)
    z = (x_arr[..., None] - g.means) / g.stds
    dens = (g.weights * _INV_SQRT_2PI / g.stds) * np.exp(-0.5 * z * z)
    out = dens.sum(axis=-1)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def gmm_cdf(g: GaussianMixture, x) -> np.ndarray | float:
    x_arr = np.asarray(x, dtype=float)
    z = (x_arr[..., None] - g.means) / (g.stds * _SQRT2)
    out = (g.weights * 0.5 * (1.0 + erf(z))).sum(axis=-1)
    return float(out) if np.isscalar(x) or out.ndim == 0 else out


def gmm_quantile(g: GaussianMixture, q: float) -> float:
    """Invert the CDF by bracketing bisection on the monotone CDF."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"quantile level must be in (0, 1), got {q}")
    span = float(np.max(g.stds))
    lo = float(np.min(g.means) - 10.0 * span)
    hi = float(np.max(g.means) + 10.0 * span)
    while gmm_cdf(g, lo) > q:
        lo -= 10.0 * span
    while gmm_cdf(g, hi) < q:
        hi += 10.0 * span
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        c = gmm_cdf(g, mid)
        if abs(c - q) <= 1e-12:
            return mid
        if c < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def gmm_shift(g: GaussianMixture, c: float) -> GaussianMixture:
    return GaussianMixture(g.weights.copy(), g.means + c, g.stds.copy())


def gmm_scale(g: GaussianMixture, c: float) -> GaussianMixture:
    """Distribution of c*X; weights unchanged, stds scaled by |c|."""
    if c == 0.0:
        return GaussianMixture.point_mass(0.0)
    return GaussianMixture(g.weights.copy(), g.means * c,
                           np.maximum(np.abs(c) * g.stds, STD_FLOOR))


def gmm_linear_combination(
    gmms: list[GaussianMixture],
    coeffs: list[float],
    max_components: int = 1_000_000,
) -> GaussianMixture:
    """Exact mixture of sum_s c_s X_s for independent mixture-distributed X_s.

    The output enumerates every component index tuple: weights multiply,
    means combine linearly, variances combine with squared coefficients.
    """
    if len(gmms) != len(coeffs):
        raise ValueError("gmms and coeffs must have equal length")
    if not gmms:
        raise ValueError("need at least one input mixture")
    total = 1
    for g in gmms:
        total *= g.k
        if total > max_components:
            raise ValueError(
                f"component product {total}+ exceeds cap {max_components}; "
                "reduce inputs first"
            )
    w = np.array([1.0])
    mu = np.array([0.0])
    var = np.array([0.0])
    for g, c in zip(gmms, coeffs):
        w = (w[:, None] * g.weights[None, :]).ravel()
        mu = (mu[:, None] + c * g.means[None, :]).ravel()
        var = (var[:, None] + (c * g.stds[None, :]) ** 2).ravel()
    w = w / w.sum()  # renormalize accumulated rounding
    return GaussianMixture(w, mu, np.maximum(np.sqrt(var), STD_FLOOR))


def _merge_score(w1, mu1, sd1, w2, mu2, sd2):
    return (w1 * w2) / (w1 + w2) * ((mu1 - mu2) ** 2 + (sd1 - sd2) ** 2)


def gmm_reduce(g: GaussianMixture, k_target: int) -> GaussianMixture:
    """Moment-preserving pairwise merge down to k_target components.

    Each step merges the pair with the smallest weighted mean/std
    dissimilarity; the merged component matches the pair's weight, mean,
    and second moment exactly, so the overall mixture mean and variance
    are invariant throughout.
    """
    if k_target < 1:
        raise ValueError("k_target must be >= 1")
    if g.k <= k_target:
        return g
    w = g.weights.copy()
    mu = g.means.copy()
    var = g.stds.astype(float) ** 2
    alive = np.ones(w.size, dtype=bool)

    sd = np.sqrt(var)
    score = _merge_score(w[:, None], mu[:, None], sd[:, None],
                         w[None, :], mu[None, :], sd[None, :])
    np.fill_diagonal(score, np.inf)

    n_alive = w.size
    while n_alive > k_target:
        idx = np.argmin(score)
        i, j = divmod(int(idx), score.shape[1])
        wi, wj = w[i], w[j]
        wm = wi + wj
        mum = (wi * mu[i] + wj * mu[j]) / wm
        second = (wi * (var[i] + mu[i] ** 2) + wj * (var[j] + mu[j] ** 2)) / wm
        w[i], mu[i], var[i] = wm, mum, second - mum * mum
        alive[j] = False
        n_alive -= 1
        score[j, :] = np.inf
        score[:, j] = np.inf
        # refresh scores against the merged component
        sd_i = math.sqrt(max(var[i], 0.0))
        live = np.where(alive)[0]
        live = live[live != i]
        s = _merge_score(w[i], mu[i], sd_i, w[live], mu[live], np.sqrt(var[live]))
        score[i, live] = s
        score[live, i] = s
    keep = np.where(alive)[0]
    order = keep[np.argsort(mu[keep])]
    return GaussianMixture(
        w[order] / w[order].sum(),
        mu[order],
        np.maximum(np.sqrt(np.maximum(var[order], 0.0)), STD_FLOOR),
    )


def gmm_sample(g: GaussianMixture, n: int,
               seed: int | np.random.SeedSequence) -> np.ndarray:
    """Seeded sampling with a per-sample stream so prefixes are stable:
    the first k draws agree for any two calls sharing a seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    child_u, child_z = [np.random.default_rng(s) for s in ss.spawn(2)]
    cum = np.cumsum(g.weights)
    cum[-1] = 1.0
    comps = np.searchsorted(cum, child_u.random(n), side="right")
    comps = np.minimum(comps, g.k - 1)
    z = child_z.standard_normal(n)
    return g.means[comps] + g.stds[comps] * z


def _kmeanspp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(x.size)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        tot = d2.sum()
        if tot <= 0:
            centers.append(x[rng.integers(x.size)])
            continue
        centers.append(x[np.searchsorted(np.cumsum(d2 / tot), rng.random())])
    return np.array(centers)


def fit_gmm_em(
    samples,
    k: int,
    tol: float = 1e-8,
    max_iter: int = 200,
    seed: int = 0,
) -> tuple[GaussianMixture, list[float]]:
    """EM fit of a k-component mixture; returns (mixture, loglik trace).

    The trace records the mean log-likelihood per EM iteration and is
    non-decreasing up to the variance floor. Initialization is
    k-means++-style seeding on the samples, deterministic under seed.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    if k < 1:
        raise ValueError("k must be >= 1")
    if x.size < k:
        raise ValueError(f"need at least k={k} samples, got {x.size}")
    rng = np.random.default_rng(seed)

    mu = np.sort(_kmeanspp_centers(x, k, rng))
    overall_sd = max(float(np.std(x)), STD_FLOOR)
    sd = np.full(k, overall_sd if k == 1 else overall_sd / math.sqrt(k))
    sd = np.maximum(sd, STD_FLOOR)
    w = np.full(k, 1.0 / k)

    trace: list[float] = []
    prev = -np.inf
    for _ in range(max_iter):
        # E step in log space
        log_comp = (
            np.log(w)[None, :]
            - np.log(sd)[None, :]
            - 0.5 * math.log(2 * math.pi)
            - 0.5 * ((x[:, None] - mu[None, :]) / sd[None, :]) ** 2
        )
        log_norm = logsumexp(log_comp, axis=1)
        ll = float(np.mean(log_norm))
        trace.append(ll)
        resp = np.exp(log_comp - log_norm[:, None])
        # M step
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        w = nk / x.size
        mu = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / nk
        sd = np.maximum(np.sqrt(var), STD_FLOOR)
        if abs(ll - prev) < tol:
            break
        prev = ll

    order = np.argsort(mu)
    keep = w[order] > 1e-12
    w, mu, sd = w[order][keep], mu[order][keep], sd[order][keep]
    return GaussianMixture(w / w.sum(), mu, sd), trace


def gmm_loglik(g: GaussianMixture, samples) -> float:
    """Mean log-likelihood of samples under the mixture."""
    x = np.asarray(samples, dtype=float).ravel()
    log_comp = (
        np.log(g.weights)[None, :]
        - np.log(g.stds)[None, :]
        - 0.5 * math.log(2 * math.pi)
        - 0.5 * ((x[:, None] - g.means[None, :]) / g.stds[None, :]) ** 2
    )
    return float(np.mean(logsumexp(log_comp, axis=1)))


def fit_gmm_bic(
    samples,
    k_max: int = 5,
    tol: float = 1e-8,
    max_iter: int = 200,
    seed: int = 0,
) -> GaussianMixture:
    """Fit k = 1..k_max by EM and keep the lowest-BIC model."""
    x = np.asarray(samples, dtype=float).ravel()
    best, best_bic = None, np.inf
    for k in range(1, min(k_max, x.size) + 1):
        g, trace = fit_gmm_em(x, k, tol=tol, max_iter=max_iter, seed=seed)
        n_params = 3 * k - 1
        bic = -2.0 * trace[-1] * x.size + n_params * math.log(x.size)
        if bic < best_bic:
            best, best_bic = g, bic
    return best
