import numpy as np
import pytest

from g2flow import families as fam
from g2flow import flow as fl
from g2flow import g2algebra as ga
from g2flow.errors import BlowUp, HorizonExceeded
from g2flow.geometry import GridSpec
from g2flow.taylorcheck import constant_curvature_sample
from g2flow.torsion import G2State


def test_flat_is_stationary():
    sp = GridSpec(7, 1, 16)
    phi, series = fl.run(fam.flat_phi(sp), fl.FlowConfig(sp, dt=1e-2, t_end=0.1))
    assert np.max(np.abs(phi - fam.flat_phi(sp))) < 1e-14
    assert series.step[-1] == 10
    assert np.allclose(series.volume, series.volume[0], rtol=0, atol=1e-12)


def test_short_run_monitors():
    sp = GridSpec(7, 1, 16)
    cfg = fl.FlowConfig(sp, dt=1e-3, t_end=5e-3, monitor_stride=2, residuals=("bianchi", "scalar"))
    phi, series = fl.run(fam.frame_phi(sp, 0.05, 0), cfg)
    assert series.step == [0, 2, 4, 5]
    assert series.columns()[-2:] == ["res_bianchi", "res_scalar"]
    assert np.all(np.diff(series.volume) <= 1e-12)
    assert np.all(np.diff(series.t) > 0)
    assert len(list(series.rows())) == 4


def test_flow_config_validation():
    sp = GridSpec(7, 1, 16)
    with pytest.raises(ValueError):
        fl.FlowConfig(sp, dt=0.0)
    with pytest.raises(ValueError):
        fl.FlowConfig(sp, integrator="RK45")
    with pytest.raises(ValueError):
        fl.FlowConfig(sp, residuals=("nope",))


def test_blowup_abort_keeps_series():
    sp = GridSpec(7, 1, 16)
    cfg = fl.FlowConfig(sp, dt=1e-3, t_end=1e-2, lambda_abort=1e-6)
    with pytest.raises(BlowUp) as info:
        fl.run(fam.frame_phi(sp, 0.05, 0), cfg)
    assert info.value.t == 0.0


def test_guard_halves_step():
    sp = GridSpec(7, 1, 16)
    phi0 = fam.frame_phi(sp, 0.3, 1)
    lam = fl.lambda_monitor(G2State(phi0, sp))
    cfg = fl.FlowConfig(sp, dt=1.0, t_end=1e-4, guard=0.1, max_halvings=30)
    _, series = fl.run(phi0, cfg)
    assert series.dt_used[0] * lam <= 0.1
    cfg = fl.FlowConfig(sp, dt=1.0, t_end=1e-4, guard=0.1, max_halvings=1)
    with pytest.raises(BlowUp):
        fl.run(phi0, cfg)


def test_velocity_splits_into_h_and_divT():
    sp = GridSpec(7, 1, 16)
    (h, X), (h_exp, X_exp) = fl.velocity_decomposition(fam.frame_phi(sp, 0.05, 0), sp)
    assert np.max(np.abs(h - h_exp)) < 1e-10
    assert np.max(np.abs(X - X_exp)) < 1e-10


def test_nearly_g2_rate_from_velocity_formula():
    # T = c g with nabla T = 0 forces Rm = c^2 (round), so Ric = 6 c^2 g
    c = 0.7
    s = constant_curvature_sample(7, c * c)
    T = c * np.eye(7)
    h = -s.Ric + 3 * T.T @ T - np.sum(T * T) * np.eye(7)
    vel = ga.diamond(h, ga.PHI0, 3)
    assert np.allclose(vel, fl.nearly_g2_rate(c, 1.0) * ga.PHI0, atol=1e-13)
    # the algebraic Bianchi relation holds for this pair
    lhs = np.einsum("ia,jb,abq->ijq", T, T, ga.PHI0) + 0.5 * np.einsum("ijab,abq->ijq", s.Rm, ga.PHI0)
    assert np.max(np.abs(lhs)) < 1e-14


def test_nearly_g2_ode_and_horizon():
    rows = fl.nearly_g2_ode(1.0, 1e-4, 0.045)
    assert np.max(np.abs(rows[:, 1] - rows[:, 2])) < 1e-8
    assert abs(fl.nearly_g2_horizon(1.0, 1e-4) - 0.05) <= 1e-4
    with pytest.raises(HorizonExceeded):
        fl.nearly_g2_ode(1.0, 1e-4, 0.05)


def test_evolution_residual_small_on_spectral_grid():
    sp = GridSpec(7, 1, 16, "spectral")
    phi = fam.frame_phi(sp, 0.05, 0)
    cfg = fl.FlowConfig(sp, dt=1e-4)
    for q in ("metric", "inverse_metric", "volume"):
        assert fl.evolution_consistency(q, phi, cfg) < 1e-6
    with pytest.raises(ValueError):
        fl.evolution_consistency("pressure", phi, cfg)


def test_euler_is_first_order():
    sp = GridSpec(7, 1, 16)
    phi0 = fam.frame_phi(sp, 0.05, 0)
    ref = fl.step(fl.step(phi0, sp, 1e-3), sp, 1e-3)
    e1 = np.max(np.abs(fl.step(phi0, sp, 2e-3, "Euler") - ref))
    e2 = np.max(np.abs(fl.step(fl.step(phi0, sp, 1e-3, "Euler"), sp, 1e-3, "Euler") - ref))
    assert 1.7 < e1 / e2 < 2.3
