import numpy as np
import pytest

from g2flow import families as fam
from g2flow.errors import NonPositiveDefinite
from g2flow.geometry import (
    GridSpec,
    curvature,
    divergence,
    gradient,
    integrate,
    partial_array,
    ricci_identity_residual,
)


def _order(errs):
    return np.polyfit(np.log([16, 32, 64]), np.log(errs), 1)[0] * -1


@pytest.mark.parametrize("scheme", ["central-4th", "spectral"])
def test_derivative_of_sine(scheme):
    errs = []
    for N in (16, 32, 64):
        sp = GridSpec(7, 1, N, scheme)
        x = sp.coords()[:, 0]
        errs.append(np.max(np.abs(partial_array(np.sin(2 * x), sp, 0) - 2 * np.cos(2 * x))))
    if scheme == "spectral":
        assert max(errs) < 1e-12
    else:
        assert abs(_order(errs) - 4.0) < 0.3


def test_inactive_direction_is_zero():
    sp = GridSpec(7, 1, 16)
    f = np.sin(sp.coords()[:, 0])
    assert np.all(partial_array(f, sp, 3) == 0)
    assert np.all(gradient(f, sp)[:, 1:] == 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(7, 1, 15)
    with pytest.raises(ValueError):
        GridSpec(6, 1, 16)
    with pytest.raises(ValueError):
        GridSpec(7, 4, 16)


def test_flat_metric_has_no_curvature():
    sp = GridSpec(7, 2, 16)
    g = np.broadcast_to(np.eye(7), (sp.npts, 7, 7)).copy()
    b = curvature(g, sp)
    assert np.max(np.abs(b.Rm)) == 0.0


def test_non_positive_metric_rejected():
    sp = GridSpec(7, 1, 16)
    g = np.broadcast_to(np.eye(7), (sp.npts, 7, 7)).copy()
    g[3, 2, 2] = -1.0
    with pytest.raises(NonPositiveDefinite):
        curvature(g, sp)


def test_warped_ricci_matches_closed_form():
    a = 0.1
    errs = []
    for N in (16, 32, 64):
        sp = GridSpec(7, 1, N)
        x = sp.coords()[:, 0]
        f = 1 + a * np.sin(x)
        fpp = -a * np.sin(x)
        b = curvature(fam.warped_metric(sp, a), sp)
        exact = np.zeros_like(b.Ric)
        exact[:, 0, 0] = -fpp / f
        exact[:, 1, 1] = -f * fpp
        errs.append(np.max(np.abs(b.Ric - exact)))
        # R = -2 f''/f, positive where the circle is shrinking
        assert np.allclose(np.sign(b.R[np.abs(fpp) > 0.05]), np.sign(-fpp[np.abs(fpp) > 0.05]))
    assert abs(_order(errs) - 4.0) < 0.3


def test_curvature_symmetries():
    sp = GridSpec(7, 1, 32)
    phi = fam.frame_phi(sp, 0.05, 0)
    from g2flow.torsion import G2State

    Rm = G2State(phi, sp).curv.Rm
    assert np.max(np.abs(Rm + Rm.transpose(0, 2, 1, 3, 4))) < 1e-12
    assert np.max(np.abs(Rm + Rm.transpose(0, 1, 2, 4, 3))) < 1e-3


def test_ricci_identity_converges():
    errs = []
    for N in (16, 32, 64):
        sp = GridSpec(7, 1, N)
        from g2flow.torsion import G2State

        b = G2State(fam.frame_phi(sp, 0.05, 0), sp).curv
        errs.append(ricci_identity_residual(fam.smooth_field(sp, 2, seed=3), b))
    assert abs(_order(errs) - 4.0) < 0.3


def test_divergence_integrates_to_zero():
    sp = GridSpec(7, 1, 32, "spectral")
    g = fam.warped_metric(sp, 0.2)
    b = curvature(g, sp)
    V = fam.smooth_field(sp, 1, seed=1)
    vol = np.sqrt(np.linalg.det(g))
    assert abs(integrate(divergence(V, b), vol, sp)) < 1e-10
