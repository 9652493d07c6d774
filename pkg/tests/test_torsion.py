import numpy as np
import pytest

from g2flow import families as fam
from g2flow import g2algebra as ga
from g2flow.errors import NotCoclosed
from g2flow.geometry import GridSpec
from g2flow.torsion import (
    G2State,
    bianchi_residual,
    coclosed_divergence_check,
    laplacian_identity_residual,
    nabla_phi_residual,
    scalar_identity_residual,
    scalar_integral_identity,
)


@pytest.fixture(scope="module")
def frame_state():
    sp = GridSpec(7, 1, 32)
    return G2State(fam.frame_phi(sp, 0.05, 0), sp)


def test_flat_has_no_torsion():
    sp = GridSpec(7, 2, 16)
    s = G2State(fam.flat_phi(sp, 2.0), sp)
    assert np.max(np.abs(s.T)) < 1e-15
    assert np.max(np.abs(s.velocity)) < 1e-14


def test_torsion_pieces_add_up(frame_state):
    tb = frame_state.torsion
    g = frame_state.g
    total = tb.T1[:, None, None] * g + tb.T27 + tb.T7 + tb.T14
    assert np.max(np.abs(total - tb.T)) < 1e-12
    n = tb.norms
    assert np.allclose(n["T1"] + n["T27"] + n["T7"] + n["T14"], n["T"], atol=1e-14)


def test_identities_small_on_frame_family(frame_state):
    assert nabla_phi_residual(frame_state) < 1e-4
    assert bianchi_residual(frame_state) < 1e-4
    assert scalar_identity_residual(frame_state) < 1e-4
    assert laplacian_identity_residual(frame_state) < 1e-3


def test_scalar_integral_identity():
    sp = GridSpec(7, 1, 32, "spectral")
    s = G2State(fam.frame_phi(sp, 0.05, 0), sp)
    lhs, rhs = scalar_integral_identity(s)
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))


def test_rescaling_leaves_torsion_tensor_scaled():
    sp = GridSpec(7, 1, 16)
    phi = fam.frame_phi(sp, 0.05, 0)
    a, b = G2State(phi, sp), G2State(8.0 * phi, sp)
    # lower-index T scales like the metric, frame components like 1/length
    assert np.max(np.abs(b.T - 2.0 * a.T)) < 1e-12
    assert np.max(np.abs(b.T_f - 0.5 * a.T_f)) < 1e-12


def test_coclosed_gate():
    sp = GridSpec(7, 1, 16)
    with pytest.raises(NotCoclosed):
        coclosed_divergence_check(G2State(fam.frame_phi(sp, 0.05, 0), sp))
    assert coclosed_divergence_check(G2State(fam.flat_phi(sp), sp)) == 0.0


def test_frame_components_of_pulled_back_phi(frame_state):
    # the Cholesky frame differs from e(x) by a G2 rotation only up to O(epsilon),
    # but phi_f must still be a positive 3-form with the flat metric
    pw = ga.pointwise_g2(frame_state.phi_f)
    assert np.allclose(pw.g, np.eye(7), atol=1e-12)
    assert frame_state.pw.pairing_residual() < 1e-12
