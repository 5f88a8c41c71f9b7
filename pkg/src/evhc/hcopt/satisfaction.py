"""Expected served demand under a curtailment cap, its piecewise-linear
surrogate, and the quantile bound that enforces a satisfaction level."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from ..mixtures import GaussianMixture, gmm_quantile

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def expected_satisfaction(g: GaussianMixture, pbar: float) -> float:
    """integral_0^pbar p * pdf(p) dp, closed form per Gaussian component.

    Per component: mu (Phi(b) - Phi(a)) - sigma (phi(b) - phi(a)) with
    standardized bounds a = -mu/sigma, b = (pbar - mu)/sigma.
    """
    if pbar < 0:
        raise ValueError("pbar must be nonnegative")
    if pbar == 0.0:
        return 0.0
    total = 0.0
    for w, mu, sd in zip(g.weights, g.means, g.stds):
        a = (0.0 - mu) / sd
        b = (pbar - mu) / sd
        phi_a = _INV_SQRT_2PI * math.exp(-0.5 * a * a)
        phi_b = _INV_SQRT_2PI * math.exp(-0.5 * b * b)
        cdf_a = 0.5 * (1.0 + erf(a / _SQRT2))
        cdf_b = 0.5 * (1.0 + erf(b / _SQRT2))
        total += w * (mu * (cdf_b - cdf_a) - sd * (phi_b - phi_a))
    return float(total)


@dataclass(frozen=True)
class PiecewiseLinear:
    breakpoints: np.ndarray  # p_1 < ... < p_{n+1}
    values: np.ndarray  # f(p_k)
    max_mid_error: float  # max |chord - exact| at segment midpoints

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.size != vals.size or bp.size < 2:
            raise ValueError("need matching breakpoints/values, >= 2 points")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("values must be nondecreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def n_segments(self) -> int:
        return self.breakpoints.size - 1

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def intercepts(self) -> np.ndarray:
        return self.values[:-1] - self.slopes * self.breakpoints[:-1]

    def __call__(self, p: float) -> float:
        bp = self.breakpoints
        if p <= bp[0]:
            return float(self.values[0])
        if p >= bp[-1]:
            return float(self.values[-1])
        k = int(np.searchsorted(bp, p, side="right")) - 1
        return float(self.slopes[k] * p + self.intercepts[k])


def build_pwl(g: GaussianMixture, n: int = 20,
              upper_quantile: float = 0.999) -> PiecewiseLinear:
    """Uniform-breakpoint surrogate of expected_satisfaction on
    [0, quantile(g, upper_quantile)]."""
    if n < 1:
        raise ValueError("need at least one segment")
    hi = max(gmm_quantile(g, upper_quantile), 1e-9)
    bp = np.linspace(0.0, hi, n + 1)
    vals = np.array([expected_satisfaction(g, p) for p in bp])
    vals = np.maximum.accumulate(vals)  # guard rounding-level dips
    mids = 0.5 * (bp[:-1] + bp[1:])
    chord = 0.5 * (vals[:-1] + vals[1:])
    exact = np.array([expected_satisfaction(g, p) for p in mids])
    return PiecewiseLinear(
        breakpoints=bp, values=vals,
        max_mid_error=float(np.max(np.abs(chord - exact))),
    )


def chance_bound(g: GaussianMixture, epsilon: float) -> float:
    """Smallest cap satisfying P(demand <= cap) >= 1 - epsilon."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    return float(gmm_quantile(g, 1.0 - epsilon))
