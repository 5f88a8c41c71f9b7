"""Independent oracles used across the test suite.

Everything here is deliberately written against the raw math (complex
sweeps, dense polynomial expansion, quadrature, brute-force search) so it
shares no code path with the implementations it checks.
"""
from __future__ import annotations

import numpy as np


def sweep_power_flow(net, p_inj, q_inj, tol=1e-12, max_iter=200):
    """Backward/forward sweep for radial networks (complex arithmetic).

    Backward pass accumulates branch currents from the leaves assuming the
    current voltage profile; forward pass re-propagates voltages from the
    slack. Returns (v_complex per bus) or raises RuntimeError.
    """
    n = net.n_bus
    slack = net.slack - 1
    s_inj = np.asarray(p_inj, float) + 1j * np.asarray(q_inj, float)
    parent = {}
    zline = {}
    for ln in net.lines:
        parent[ln.to_bus - 1] = ln.from_bus - 1
        zline[ln.to_bus - 1] = ln.r + 1j * ln.x
    # depth-sorted bus order (children after parents)
    order = []
    todo = [slack]
    kids = {b: [] for b in range(n)}
    for c, p in parent.items():
        kids[p].append(c)
    while todo:
        b = todo.pop()
        order.append(b)
        todo.extend(kids[b])

    v = np.full(n, complex(net.v_slack))
    for _ in range(max_iter):
        # backward: branch current into each bus = load current + children's
        i_draw = np.conj(-s_inj / v)  # consumption current
        i_branch = np.zeros(n, dtype=complex)
        for b in reversed(order):
            if b == slack:
                continue
            i_branch[b] = i_draw[b] + sum(i_branch[c] for c in kids[b])
        # forward: propagate voltage drops
        v_new = v.copy()
        v_new[slack] = net.v_slack
        for b in order:
            if b == slack:
                continue
            v_new[b] = v_new[parent[b]] - zline[b] * i_branch[b]
        if np.max(np.abs(v_new - v)) < tol:
            return v_new
        v = v_new
    raise RuntimeError("sweep did not converge")


def normal_cdf(x, mu=0.0, sigma=1.0):
    from math import erf, sqrt
    return 0.5 * (1.0 + erf((x - mu) / (sigma * sqrt(2.0))))


def mixture_cdf_numeric(weights, means, stds, x):
    return sum(
        w * normal_cdf(x, m, s) for w, m, s in zip(weights, means, stds)
    )


def ks_distance(sorted_samples: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and a CDF."""
    n = len(sorted_samples)
    f = np.asarray([cdf(x) for x in sorted_samples])
    lo = np.max(np.abs(f - np.arange(0, n) / n))
    hi = np.max(np.abs(f - np.arange(1, n + 1) / n))
    return float(max(lo, hi))


def chebyshev_matrices(l_tilde: np.ndarray, k: int) -> list[np.ndarray]:
    """Explicit dense T_k(L~) matrices via the three-term recurrence."""
    n = l_tilde.shape[0]
    mats = [np.eye(n)]
    if k > 1:
        mats.append(l_tilde.copy())
    while len(mats) < k:
        mats.append(2 * l_tilde @ mats[-1] - mats[-2])
    return mats[:k]


def trapezoid_cdf(pdf, lo, x, n=200001):
    """CDF at x by trapezoid integration of a pdf callable on [lo, x]."""
    grid = np.linspace(lo, x, n)
    vals = pdf(grid)
    return float(np.trapezoid(vals, grid))
