"""Independent checks on a hosting-capacity solution.

The verifier never trusts the optimizer: it re-solves the exact nonlinear
power flow at the accommodated caps, re-evaluates branch-flow residuals,
measures per-line cone gaps, Monte-Carlo-checks the satisfaction
probabilities, and recomputes the objective from the closed form instead
of the piecewise surrogate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid.distflow import DistFlowState, distflow_residual
from ..grid.network import DistributionNetwork
from ..grid.powerflow import (
    PowerFlowDivergence,
    base_injections,
    solve_power_flow,
)
from ..mixtures import GaussianMixture, gmm_sample
from .bnb import HCSolution
from .satisfaction import expected_satisfaction


@dataclass(frozen=True)
class VerificationReport:
    voltage_ok: bool
    min_voltage: float
    v_limit: float
    distflow_ok: bool
    max_distflow_residual: float
    soc_gap_max: float
    chance_ok: bool
    chance_frequency: dict[int, float]
    objective_pwl: float
    objective_exact: float
    objective_rel_diff: float
    power_flow_converged: bool

    @property
    def all_ok(self) -> bool:
        return (self.power_flow_converged and self.voltage_ok
                and self.distflow_ok and self.chance_ok)


def verify_solution(
    net: DistributionNetwork,
    sol: HCSolution,
    station_gmms: dict[int, GaussianMixture],
    epsilons: dict[int, float] | float,
    v_min: float | None = None,
    mc_samples: int = 10_000,
    seed: int = 2024,
) -> VerificationReport:
    v_limit = net.v_min if v_min is None else v_min

    def eps_of(sid: int) -> float:
        return epsilons[sid] if isinstance(epsilons, dict) else epsilons

    p, q = base_injections(net, sol.p_bar)
    converged = True
    try:
        op = solve_power_flow(net, p, q)
    except PowerFlowDivergence:
        converged = False
        op = None

    if converged:
        nonslack = [b.id - 1 for b in net.buses if b.id != net.slack]
        min_v = float(np.min(op.v_mag[nonslack]))
        voltage_ok = min_v >= v_limit - 1e-6
        draws = {bus + 1: -p[bus] for bus in range(net.n_bus)}
        state = DistFlowState(
            v_sq=op.v_mag ** 2,
            i_sq=op.line_i ** 2,
            p_flow=op.line_p,
            q_flow=op.line_q,
            p_draw=np.array([draws[b.id] for b in net.buses]),
            q_draw=-q,
        )
        res = distflow_residual(net, state)
        max_res = res.max_abs()
        distflow_ok = max_res < 1e-6
    else:
        min_v, voltage_ok = float("nan"), False
        max_res, distflow_ok = float("nan"), False

    freq: dict[int, float] = {}
    chance_ok = True
    for sid, g in station_gmms.items():
        cap = sol.p_bar.get(sid)
        if cap is None:
            continue
        samples = gmm_sample(g, mc_samples, seed=seed + sid)
        f = float(np.mean(samples <= cap))
        freq[sid] = f
        if f < 1.0 - eps_of(sid) - 0.01:
            chance_ok = False

    exact = sum(
        expected_satisfaction(station_gmms[sid], cap)
        for sid, cap in sol.p_bar.items()
        if sid in station_gmms
    )
    rel = abs(exact - sol.objective_pwl) / max(abs(exact), 1e-12)

    return VerificationReport(
        voltage_ok=voltage_ok,
        min_voltage=min_v,
        v_limit=v_limit,
        distflow_ok=distflow_ok,
        max_distflow_residual=max_res,
        soc_gap_max=float(np.max(sol.soc_gap)),
        chance_ok=chance_ok,
        chance_frequency=freq,
        objective_pwl=sol.objective_pwl,
        objective_exact=float(exact),
        objective_rel_diff=float(rel),
        power_flow_converged=converged,
    )
