"""Hosting-capacity optimization models over the branch-flow network.

Both the real-time problem (expected-satisfaction objective, quantile
floors, SOS2-encoded piecewise objective, binaries) and the long-term
baseline (plain capacity maximization, pure SOCP) share the same network
rows: squared-voltage drop, active/reactive balance with loss terms, and
one second-order cone per line standing in for V^2 I^2 = P^2 + Q^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grid.network import DistributionNetwork
from ..mixtures import GaussianMixture
from .conic import ConicModel, SocBlock
from .satisfaction import PiecewiseLinear, build_pwl, chance_bound


class BuildInfeasible(ValueError):
    """The model is provably infeasible before any solve."""


@dataclass
class HCProblem:
    net: DistributionNetwork
    station_gmms: dict[int, GaussianMixture]  # physical per-unit demand
    epsilon: dict[int, float] | float = 0.2
    n_segments: int = 20
    v_min: float | None = None  # defaults to the network bound
    v_max: float | None = None
    pwl_quantile: float = 0.999
    gap_tol: float = 1e-4
    node_limit: int = 100_000

    def eps_of(self, sid: int) -> float:
        eps = self.epsilon[sid] if isinstance(self.epsilon, dict) else self.epsilon
        if not (0.0 < eps < 1.0):
            raise ValueError(f"epsilon for station {sid} must be in (0,1)")
        return float(eps)

    @property
    def bounds(self) -> tuple[float, float]:
        lo = self.net.v_min if self.v_min is None else self.v_min
        hi = self.net.v_max if self.v_max is None else self.v_max
        return lo, hi


@dataclass
class VarMap:
    v_sq: dict[int, int]  # bus -> var
    i_sq: dict[int, int]  # line index -> var
    p_flow: dict[int, int]
    q_flow: dict[int, int]
    p_bar: dict[int, int]  # station -> var
    w: dict[int, list[int]] = field(default_factory=dict)
    z: dict[int, list[int]] = field(default_factory=dict)
    pwl: dict[int, PiecewiseLinear] = field(default_factory=dict)
    floors: dict[int, float] = field(default_factory=dict)


def encode_sos2(model: ConicModel, pwl: PiecewiseLinear, p_var: int,
                tag: str = "") -> tuple[list[int], list[int]]:
    """Append the SOS2 fragment tying p_var to the PWL surrogate.

    Adds nonnegative interpolation weights w_1..w_{n+1} (objective carries
    f(p_k)), binary segment selectors z_1..z_n, the reconstruction row
    p = sum w_k p_k, the two normalization rows, and the adjacency rows
    that allow only weights next to the chosen segment.
    """
    n_seg = pwl.n_segments
    wv = [
        model.add_var(lb=0.0, obj=float(pwl.values[k]), name=f"w[{tag},{k}]")
        for k in range(n_seg + 1)
    ]
    zv = [
        model.add_var(lb=0.0, ub=1.0, name=f"z[{tag},{k}]", binary=True)
        for k in range(n_seg)
    ]
    model.add_eq({p_var: 1.0,
                  **{wk: -float(pk) for wk, pk in zip(wv, pwl.breakpoints)}},
                 0.0)
    model.add_eq({wk: 1.0 for wk in wv}, 1.0)
    model.add_eq({zk: 1.0 for zk in zv}, 1.0)
    model.add_ub({wv[0]: 1.0, zv[0]: -1.0}, 0.0)
    model.add_ub({wv[-1]: 1.0, zv[-1]: -1.0}, 0.0)
    for k in range(1, n_seg):
        model.add_ub({wv[k]: 1.0, zv[k - 1]: -1.0, zv[k]: -1.0}, 0.0)
    return wv, zv


def _network_vars(model: ConicModel, net: DistributionNetwork,
                  sids: list[int]) -> VarMap:
    vm = VarMap(
        v_sq={b.id: model.add_var(name=f"Vsq[{b.id}]") for b in net.buses},
        i_sq={}, p_flow={}, q_flow={},
        p_bar={},
    )
    for li, ln in enumerate(net.lines):
        lbl = f"{ln.from_bus}-{ln.to_bus}"
        vm.i_sq[li] = model.add_var(lb=0.0, ub=ln.i_max ** 2, name=f"Isq[{lbl}]")
        vm.p_flow[li] = model.add_var(name=f"P[{lbl}]")
        vm.q_flow[li] = model.add_var(name=f"Q[{lbl}]")
    for sid in sids:
        vm.p_bar[sid] = model.add_var(name=f"Pbar[{sid}]")
    return vm


def _network_rows(model: ConicModel, net: DistributionNetwork, vm: VarMap,
                  v_lo: float, v_hi: float) -> None:
    slack = net.slack
    model.lb[vm.v_sq[slack]] = model.ub[vm.v_sq[slack]] = net.v_slack ** 2
    for bus in net.buses:
        if bus.id != slack:
            model.lb[vm.v_sq[bus.id]] = v_lo ** 2
            model.ub[vm.v_sq[bus.id]] = v_hi ** 2

    for li, ln in enumerate(net.lines):
        # squared-voltage drop along the line
        model.add_eq({
            vm.v_sq[ln.to_bus]: 1.0,
            vm.v_sq[ln.from_bus]: -1.0,
            vm.p_flow[li]: 2.0 * ln.r,
            vm.q_flow[li]: 2.0 * ln.x,
            vm.i_sq[li]: -(ln.r ** 2 + ln.x ** 2),
        }, 0.0)
        # flow-current cone: ||(2P, 2Q, V_i - I)|| <= V_i + I
        model.soc_blocks.append(SocBlock(
            g_rows=[
                ({vm.p_flow[li]: 2.0}, 0.0),
                ({vm.q_flow[li]: 2.0}, 0.0),
                ({vm.v_sq[ln.from_bus]: 1.0, vm.i_sq[li]: -1.0}, 0.0),
            ],
            h={vm.v_sq[ln.from_bus]: 1.0, vm.i_sq[li]: 1.0},
            k=0.0,
            label=f"line{ln.from_bus}-{ln.to_bus}",
        ))

    in_lines: dict[int, list[int]] = {}
    out_lines: dict[int, list[int]] = {}
    for li, ln in enumerate(net.lines):
        in_lines.setdefault(ln.to_bus, []).append(li)
        out_lines.setdefault(ln.from_bus, []).append(li)
    station_of_bus = {bus: sid for sid, bus in net.station_buses.items()}
    for bus in net.buses:
        if bus.id == slack:
            continue
        # active balance: inflow - loss - outflow = load + accommodated EV
        coeffs: dict[int, float] = {}
        for li in in_lines.get(bus.id, []):
            coeffs[vm.p_flow[li]] = coeffs.get(vm.p_flow[li], 0.0) + 1.0
            coeffs[vm.i_sq[li]] = coeffs.get(vm.i_sq[li], 0.0) - net.lines[li].r
        for li in out_lines.get(bus.id, []):
            coeffs[vm.p_flow[li]] = coeffs.get(vm.p_flow[li], 0.0) - 1.0
        sid = station_of_bus.get(bus.id)
        if sid is not None and sid in vm.p_bar:
            coeffs[vm.p_bar[sid]] = -1.0
        model.add_eq(coeffs, bus.p_load)
        # reactive balance (EV demand is active-only)
        coeffs = {}
        for li in in_lines.get(bus.id, []):
            coeffs[vm.q_flow[li]] = coeffs.get(vm.q_flow[li], 0.0) + 1.0
            coeffs[vm.i_sq[li]] = coeffs.get(vm.i_sq[li], 0.0) - net.lines[li].x
        for li in out_lines.get(bus.id, []):
            coeffs[vm.q_flow[li]] = coeffs.get(vm.q_flow[li], 0.0) - 1.0
        model.add_eq(coeffs, bus.q_load)


def build_misocp(problem: HCProblem) -> tuple[ConicModel, VarMap]:
    """Real-time model: maximize total expected satisfied demand subject to
    branch-flow physics, voltage bounds, quantile floors, and the SOS2
    encoding of each station's satisfaction curve.

    Raises BuildInfeasible when a station's floor already exceeds its PWL
    domain (detectable before any solve).
    """
    net = problem.net
    sids = sorted(problem.station_gmms)
    if set(sids) - set(net.station_buses):
        raise ValueError("demand mixture for a station the network lacks")
    if problem.n_segments < 1:
        raise ValueError("need at least one segment")

    model = ConicModel()
    vm = _network_vars(model, net, sids)
    v_lo, v_hi = problem.bounds
    _network_rows(model, net, vm, v_lo, v_hi)

    for sid in sids:
        g = problem.station_gmms[sid]
        pwl = build_pwl(g, problem.n_segments, problem.pwl_quantile)
        floor = chance_bound(g, problem.eps_of(sid))
        if floor > pwl.breakpoints[-1] + 1e-12:
            raise BuildInfeasible(
                f"station {sid}: satisfaction floor {floor:.6f} exceeds the "
                f"PWL domain end {pwl.breakpoints[-1]:.6f}; "
                "lower epsilon or extend pwl_quantile"
            )
        vm.pwl[sid] = pwl
        vm.floors[sid] = floor
        model.lb[vm.p_bar[sid]] = max(floor, 0.0)
        model.ub[vm.p_bar[sid]] = float(pwl.breakpoints[-1])
        vm.w[sid], vm.z[sid] = encode_sos2(model, pwl, vm.p_bar[sid], str(sid))

    model.validate()
    return model, vm


def build_long_term(
    net: DistributionNetwork,
    demands: dict[int, float],
    caps: dict[int, float],
    v_min: float | None = None,
    v_max: float | None = None,
) -> tuple[ConicModel, VarMap]:
    """Long-term baseline: maximize total accommodated scalar demand under
    the same network rows; no floors, no PWL, no binaries."""
    sids = sorted(demands)
    model = ConicModel()
    vm = _network_vars(model, net, sids)
    v_lo = net.v_min if v_min is None else v_min
    v_hi = net.v_max if v_max is None else v_max
    _network_rows(model, net, vm, v_lo, v_hi)
    for sid in sids:
        if demands[sid] < 0:
            raise ValueError("scalar demands must be nonnegative")
        model.lb[vm.p_bar[sid]] = 0.0
        model.ub[vm.p_bar[sid]] = float(caps[sid])
        model.objective[vm.p_bar[sid]] = 1.0
    model.validate()
    return model, vm
