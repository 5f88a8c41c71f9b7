"""Branch-flow (DistFlow) residual evaluation in squared variables.

A DistFlow assignment works with squared voltage magnitudes v_sq, squared
line currents i_sq, sending-end flows, and per-bus draws (positive =
consumption). Residuals come back split by constraint family so callers
can see which physics a candidate point violates:

    voltage_drop:   v_sq[j] - v_sq[i] + 2(r p + x q) - (r^2 + x^2) i_sq
    p_balance:      p_draw[j] - (p_in - r i_sq_in - sum p_out)
    q_balance:      q_draw[j] - (q_in - x i_sq_in - sum q_out)
    flow_current:   v_sq[i] * i_sq - (p^2 + q^2)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DistributionNetwork
from .powerflow import OperatingPoint


@dataclass(frozen=True)
class DistFlowState:
    v_sq: np.ndarray  # per bus
    i_sq: np.ndarray  # per line
    p_flow: np.ndarray  # sending-end, per line
    q_flow: np.ndarray
    p_draw: np.ndarray  # per bus, positive = consumption
    q_draw: np.ndarray


@dataclass(frozen=True)
class DistFlowResiduals:
    voltage_drop: np.ndarray  # per line
    p_balance: np.ndarray  # per non-slack bus, ordered by bus id
    q_balance: np.ndarray
    flow_current: np.ndarray  # per line

    def max_abs(self) -> float:
        return max(
            float(np.max(np.abs(a))) if a.size else 0.0
            for a in (self.voltage_drop, self.p_balance, self.q_balance,
                      self.flow_current)
        )


def distflow_residual(
    net: DistributionNetwork, state: DistFlowState
) -> DistFlowResiduals:
    n, m = net.n_bus, net.n_line
    if state.v_sq.shape != (n,) or state.i_sq.shape != (m,):
        raise ValueError("state dimensions do not match network")
    r = np.array([ln.r for ln in net.lines])
    x = np.array([ln.x for ln in net.lines])
    frm = np.array([ln.from_bus - 1 for ln in net.lines])
    to = np.array([ln.to_bus - 1 for ln in net.lines])

    vdrop = (
        state.v_sq[to] - state.v_sq[frm]
        + 2 * (r * state.p_flow + x * state.q_flow)
        - (r ** 2 + x ** 2) * state.i_sq
    )
    flow_cur = state.v_sq[frm] * state.i_sq - (
        state.p_flow ** 2 + state.q_flow ** 2
    )

    pbal, qbal = [], []
    for j in range(n):
        if j == net.slack - 1:
            continue
        inflow = np.where(to == j)[0]
        out = np.where(frm == j)[0]
        p_in = float(np.sum(state.p_flow[inflow] - r[inflow] * state.i_sq[inflow]))
        q_in = float(np.sum(state.q_flow[inflow] - x[inflow] * state.i_sq[inflow]))
        pbal.append(state.p_draw[j] - (p_in - np.sum(state.p_flow[out])))
        qbal.append(state.q_draw[j] - (q_in - np.sum(state.q_flow[out])))

    return DistFlowResiduals(
        voltage_drop=vdrop,
        p_balance=np.array(pbal),
        q_balance=np.array(qbal),
        flow_current=flow_cur,
    )


def state_from_operating_point(
    net: DistributionNetwork, op: OperatingPoint
) -> DistFlowState:
    """Re-express a converged polar solution in DistFlow variables."""
    return DistFlowState(
        v_sq=op.v_mag ** 2,
        i_sq=op.line_i ** 2,
        p_flow=op.line_p,
        q_flow=op.line_q,
        p_draw=-op.p_inj,
        q_draw=-op.q_inj,
    )
