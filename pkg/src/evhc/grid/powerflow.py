"""Nonlinear power flow and its first-order sensitivity.

The solver runs Newton iterations on the polar power-flow equations

    w_calc(theta, v) - w_inj = 0

with the slack bus held at (v_slack, 0). Injections are per-unit and
positive for generation, so a pure load bus carries a negative injection.

The sensitivity matrix maps injection disturbances to state variations,
Delta_x = S Delta_w, where S is the inverse of the polar Jacobian at the
operating point. Voltage-magnitude rows are the default export; angle rows
stay available on the full matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import DistributionNetwork


class PowerFlowDivergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"power flow did not converge in {iterations} iterations "
            f"(last residual {residual:.3e} p.u.)"
        )
        self.iterations = iterations
        self.residual = residual


class SingularJacobian(RuntimeError):
    pass


@dataclass(frozen=True)
class OperatingPoint:
    v_mag: np.ndarray  # per bus
    v_ang: np.ndarray  # per bus, radians
    line_p: np.ndarray  # sending-end active flow per line
    line_q: np.ndarray  # sending-end reactive flow per line
    line_i: np.ndarray  # current magnitude per line
    p_inj: np.ndarray  # injections the solve was run with
    q_inj: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class SensitivityMatrix:
    """Voltage-magnitude sensitivity to non-slack P/Q injections.

    entries[i, j] = d(v_mag of v_rows[i]) / d(injection of w_cols[j]);
    w_cols lists (bus, "p") pairs for all non-slack buses followed by
    (bus, "q") pairs. `full` is the complete inverse Jacobian including
    angle rows, `jacobian` the polar Jacobian it inverts.
    """
    entries: np.ndarray
    v_rows: tuple[int, ...]
    w_cols: tuple[tuple[int, str], ...]
    full: np.ndarray
    jacobian: np.ndarray

    def row_of_bus(self, bus_id: int) -> np.ndarray:
        return self.entries[self.v_rows.index(bus_id)]

    def p_column_of_bus(self, bus_id: int) -> int:
        return self.w_cols.index((bus_id, "p"))


def ybus(net: DistributionNetwork) -> np.ndarray:
    n = net.n_bus
    y = np.zeros((n, n), dtype=complex)
    for ln in net.lines:
        f, t = ln.from_bus - 1, ln.to_bus - 1
        ys = 1.0 / (ln.r + 1j * ln.x)
        y[f, f] += ys
        y[t, t] += ys
        y[f, t] -= ys
        y[t, f] -= ys
    return y


def base_injections(
    net: DistributionNetwork, station_p: dict[int, float] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Injections for the base loads plus optional per-station EV demand.

    station_p maps station id -> active demand (per-unit, positive =
    consumption). EV demand touches only the active balance.
    """
    p = np.array([-b.p_load for b in net.buses])
    q = np.array([-b.q_load for b in net.buses])
    if station_p:
        bus_of = net.station_buses
        for sid, dem in station_p.items():
            p[bus_of[sid] - 1] -= dem
    return p, q


def _dS_dx(y: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ibus = y @ v
    vnorm = v / np.abs(v)
    # diagonal products written as broadcasts: diag(a) @ M = a[:,None]*M,
    # M @ diag(a) = M*a[None,:]
    ds_dvm = v[:, None] * np.conj(y * vnorm[None, :])
    ds_dvm[np.diag_indices_from(ds_dvm)] += np.conj(ibus) * vnorm
    yv = y * v[None, :]
    yv[np.diag_indices_from(yv)] -= ibus
    ds_dva = -1j * v[:, None] * np.conj(yv)
    return ds_dva, ds_dvm


def _jacobian(y: np.ndarray, v: np.ndarray, pq: np.ndarray) -> np.ndarray:
    ds_dva, ds_dvm = _dS_dx(y, v)
    j11 = ds_dva[np.ix_(pq, pq)].real
    j12 = ds_dvm[np.ix_(pq, pq)].real
    j21 = ds_dva[np.ix_(pq, pq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def _flows(net: DistributionNetwork, v: np.ndarray):
    f = np.array([ln.from_bus - 1 for ln in net.lines])
    t = np.array([ln.to_bus - 1 for ln in net.lines])
    z = np.array([ln.r + 1j * ln.x for ln in net.lines])
    i_line = (v[f] - v[t]) / z
    s_send = v[f] * np.conj(i_line)
    return s_send.real, s_send.imag, np.abs(i_line)


def solve_power_flow(
    net: DistributionNetwork,
    p_inj: np.ndarray,
    q_inj: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 50,
    x0: tuple[np.ndarray, np.ndarray] | None = None,
) -> OperatingPoint:
    """Newton solve; flat start unless x0=(v_mag, v_ang) warm start given.

    Converged means the injection residual at all non-slack buses is below
    tol (inf-norm, per-unit). Raises PowerFlowDivergence otherwise.
    """
    p_inj = np.asarray(p_inj, dtype=float)
    q_inj = np.asarray(q_inj, dtype=float)
    if not (np.all(np.isfinite(p_inj)) and np.all(np.isfinite(q_inj))):
        raise ValueError("injections must be finite")
    n = net.n_bus
    slack = net.slack - 1
    pq = np.array([i for i in range(n) if i != slack])
    y = ybus(net)

    if x0 is None:
        vm = np.full(n, net.v_slack)
        va = np.zeros(n)
    else:
        vm, va = x0[0].copy(), x0[1].copy()
    vm[slack] = net.v_slack
    va[slack] = 0.0

    s_spec = p_inj + 1j * q_inj
    residual = np.inf
    for it in range(max_iter + 1):
        v = vm * np.exp(1j * va)
        mis = v * np.conj(y @ v) - s_spec
        fvec = np.concatenate([mis[pq].real, mis[pq].imag])
        residual = float(np.max(np.abs(fvec))) if fvec.size else 0.0
        if residual < tol:
            lp, lq, li = _flows(net, v)
            return OperatingPoint(
                v_mag=vm.copy(), v_ang=va.copy(),
                line_p=lp, line_q=lq, line_i=li,
                p_inj=p_inj.copy(), q_inj=q_inj.copy(),
                residual=residual, iterations=it,
            )
        if it == max_iter:
            break
        jac = _jacobian(y, v, pq)
        try:
            dx = np.linalg.solve(jac, fvec)
        except np.linalg.LinAlgError:
            raise PowerFlowDivergence(it, residual)
        if not np.all(np.isfinite(dx)):
            raise PowerFlowDivergence(it, residual)
        k = len(pq)
        va[pq] -= dx[:k]
        vm[pq] -= dx[k:]
        if np.any(vm <= 0):
            raise PowerFlowDivergence(it + 1, residual)
    raise PowerFlowDivergence(max_iter, residual)


def compute_sensitivity(
    net: DistributionNetwork, op: OperatingPoint
) -> SensitivityMatrix:
    """Inverse polar Jacobian at `op`, voltage-magnitude rows exported.

    Raises SingularJacobian naming the deficient pivot when the Jacobian
    cannot be factorized.
    """
    n = net.n_bus
    slack = net.slack - 1
    pq = np.array([i for i in range(n) if i != slack])
    v = op.v_mag * np.exp(1j * op.v_ang)
    jac = _jacobian(ybus(net), v, pq)
    k = len(pq)

    lu, piv = scipy.linalg.lu_factor(jac, check_finite=True)
    diag = np.abs(np.diag(lu))
    bad = np.where(diag < 1e-12 * max(1.0, diag.max()))[0]
    if bad.size:
        j = int(bad[0])
        kind = "angle" if j < k else "v_mag"
        bus = int(pq[j % k]) + 1
        raise SingularJacobian(
            f"singular power-flow Jacobian: deficient pivot at state "
            f"({kind}, bus {bus})"
        )
    full = scipy.linalg.lu_solve((lu, piv), np.eye(2 * k))

    v_rows = tuple(int(i) + 1 for i in pq)
    w_cols = tuple((int(i) + 1, "p") for i in pq) + tuple(
        (int(i) + 1, "q") for i in pq
    )
    return SensitivityMatrix(
        entries=full[k:, :], v_rows=v_rows, w_cols=w_cols,
        full=full, jacobian=jac,
    )
