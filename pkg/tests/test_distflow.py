import numpy as np

from evhc.grid import (
    base_injections,
    distflow_residual,
    ieee33,
    solve_power_flow,
    state_from_operating_point,
)
from evhc.grid.distflow import DistFlowState


def test_converged_solution_satisfies_distflow():
    net = ieee33()
    p, q = base_injections(net)
    op = solve_power_flow(net, p, q, tol=1e-12)
    res = distflow_residual(net, state_from_operating_point(net, op))
    assert res.max_abs() < 1e-6


def test_trivial_zero_point():
    net = ieee33()
    state = DistFlowState(
        v_sq=np.full(33, net.v_slack ** 2),
        i_sq=np.zeros(32),
        p_flow=np.zeros(32),
        q_flow=np.zeros(32),
        p_draw=np.zeros(33),
        q_draw=np.zeros(33),
    )
    res = distflow_residual(net, state)
    assert res.max_abs() == 0.0


def test_flat_voltage_nonzero_load_unbalanced():
    net = ieee33()
    p_draw = np.array([b.p_load for b in net.buses])
    state = DistFlowState(
        v_sq=np.ones(33),
        i_sq=np.zeros(32),
        p_flow=np.zeros(32),
        q_flow=np.zeros(32),
        p_draw=p_draw,
        q_draw=np.zeros(33),
    )
    res = distflow_residual(net, state)
    # active-balance residual equals the load value bus by bus
    nonslack = [b for b in net.buses if b.id != net.slack]
    assert np.allclose(res.p_balance, [b.p_load for b in nonslack])
    assert np.allclose(res.voltage_drop, 0.0)
    assert np.allclose(res.flow_current, 0.0)
