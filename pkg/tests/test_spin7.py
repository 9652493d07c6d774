import numpy as np
import pytest

from g2flow import families as fam
from g2flow import g2algebra as ga
from g2flow import spin7 as s7
from g2flow.geometry import GridSpec
from g2flow.taylorcheck import random_curvature


def test_Phi0_algebra():
    assert ga.form_norm2(s7.PHI0_8, 4) == 14.0
    assert s7.self_duality_residual() == 0.0
    assert s7.diamond_rank() == (43, 21)
    assert np.array_equal(ga.diamond(np.eye(8), s7.PHI0_8, 4), 4 * s7.PHI0_8)


def test_project7_is_a_projection():
    rng = np.random.default_rng(0)
    b = rng.standard_normal((8, 8))
    p = s7.project7(b)
    assert np.allclose(s7.project7(p), p, atol=1e-14)
    # Omega^2_7 is the -3 eigenspace of beta -> (1/2) beta Phi
    assert np.allclose(0.5 * np.einsum("cd,cdab->ab", p, s7.PHI0_8), -3 * p, atol=1e-13)
    # it has rank 7
    basis = np.array([s7.project7(E).ravel() for E in np.eye(64).reshape(64, 8, 8)])
    assert np.linalg.matrix_rank(basis, tol=1e-10) == 7


def test_rm_contraction_vanishes_on_algebraic_tensors():
    rng = np.random.default_rng(1)
    for _ in range(20):
        Rm = random_curvature(rng, 8)
        assert np.max(np.abs(s7.rm_contraction(Rm))) < 1e-12


def test_flat_spin7():
    sp = GridSpec(8, 1, 16)
    e = np.broadcast_to(np.eye(8), (sp.npts, 8, 8)).copy()
    st = s7.Spin7State(e, sp)
    assert np.max(np.abs(st.T)) == 0.0
    assert np.max(np.abs(s7.velocity_spin7(st))) == 0.0


def test_identities_converge_on_frame_family():
    res = []
    for N in (16, 32):
        sp = GridSpec(8, 1, N)
        st = s7.Spin7State(fam.frame_field(sp, 0.05, 0), sp)
        res.append(s7.spin7_identity_residuals(st))
    for k in ("reconstruction", "bianchi", "ricci", "scalar"):
        assert 3.5 < np.log2(res[0][k] / res[1][k]) < 4.5, k


def test_velocity_scaling():
    sp = GridSpec(8, 1, 16)
    e = fam.frame_field(sp, 0.05, 2)
    v1 = s7.Spin7State(e, sp).velocity
    v2 = s7.Spin7State(2.0 * e, sp).velocity
    # Phi scales by 16, the velocity by 4
    assert np.max(np.abs(v2 - 4.0 * v1)) < 1e-10 * np.max(np.abs(v1))


def test_hodge_star_involution():
    rng = np.random.default_rng(3)
    w = rng.standard_normal((8,) * 4)
    from g2flow.tensor import DenseTensor, antisymmetrize

    w = antisymmetrize(DenseTensor(w)).components
    assert np.allclose(s7.hodge_star8(s7.hodge_star8(w)), w, atol=1e-13)
