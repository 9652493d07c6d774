import numpy as np
import pytest

from g2flow import _kernels
from g2flow import g2algebra as ga
from g2flow.errors import DegenerateForm
from g2flow.families import phi_from_frame


def test_phi0_exact_identities():
    assert ga.phiphi_residual() == 0.0
    assert ga.phipsi_residual() == 0.0
    assert np.array_equal(ga.diamond(np.eye(7), ga.PHI0, 3), 3 * ga.PHI0)
    assert ga.form_norm2(ga.PHI0, 3) == 7.0
    assert ga.form_norm2(ga.PSI0, 4) == 7.0


def test_psi_is_flat_star_of_phi():
    assert np.array_equal(ga.PSI0, -_kernels.flat_star(ga.PHI0, 7, 3))


def test_metric_of_phi0_is_identity():
    pw = ga.pointwise_g2(ga.PHI0)
    assert np.allclose(pw.g, np.eye(7), atol=1e-14)
    assert np.allclose(pw.psi, ga.PSI0, atol=1e-14)


def test_scaling_of_metric():
    pw = ga.pointwise_g2(8.0 * ga.PHI0)
    assert np.allclose(pw.g, 4.0 * np.eye(7), atol=1e-12)


def test_frame_pullback_metric():
    rng = np.random.default_rng(4)
    e = np.eye(7) + 0.2 * rng.standard_normal((3, 7, 7))
    phi = phi_from_frame(e)
    pw = ga.pointwise_g2(phi)
    assert np.allclose(pw.g, np.einsum("nia,nja->nij", e, e), atol=1e-12)
    assert pw.pairing_residual() < 1e-12


def test_degenerate_form_rejected():
    phi = np.zeros((7, 7, 7))
    with pytest.raises(DegenerateForm):
        ga.pointwise_g2(phi)


def test_diamond_kernel():
    assert ga.diamond_rank(ga.PHI0, 3) == (35, 14)


def test_two_form_split():
    rng = np.random.default_rng(5)
    beta = rng.standard_normal((7, 7))
    beta = beta - beta.T
    b7, b14 = ga.project_2form(beta, ga.PSI0, 7)
    assert np.allclose(b7 + b14, beta, atol=1e-13)
    # Omega^2_14 is the kernel of beta -> beta_ij phi_ijk
    assert np.allclose(ga.vt_vector(b14, ga.PHI0), 0, atol=1e-13)
    assert abs(np.sum(b7 * b14)) < 1e-12


def test_three_form_decomposition_round_trip():
    rng = np.random.default_rng(6)
    h = rng.standard_normal((7, 7))
    h = h + h.T
    X = rng.standard_normal(7)
    sigma = ga.diamond(h, ga.PHI0, 3) + ga.interior(X, ga.PSI0, 4)
    h2, X2 = ga.solve_3form(sigma, ga.PHI0, ga.PSI0)
    assert np.allclose(h2, h, atol=1e-11)
    assert np.allclose(X2, X, atol=1e-11)
