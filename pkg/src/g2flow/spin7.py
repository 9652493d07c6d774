"""Spin(7)-structures on dimension 8: algebra, torsion, identities, velocity.

Spin(7)-structures are carried by frame fields e(x), Phi = e^*Phi0, so the
frame components of Phi are always the constant Phi0 and admissibility is
never in question. Index 0 is the extra direction; 1..7 carry phi0.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from . import g2algebra as ga
from .frames import Frame
from .geometry import GridSpec, covariant_derivative, curvature
from .tensor import DenseTensor


def _standard_Phi() -> np.ndarray:
    phi = np.zeros((8,) * 3)
    phi[1:, 1:, 1:] = ga.PHI0
    psi = np.zeros((8,) * 4)
    psi[1:, 1:, 1:, 1:] = ga.PSI0
    e0 = np.zeros(8)
    e0[0] = 1.0
    return ga.wedge_vector_phi(e0, phi) + psi


PHI0_8 = _standard_Phi()
PHI0_8.flags.writeable = False
# Phi0 is self-dual for the orientation e0 ^ vol_phi0, which is minus the
# reference e0..e7 because vol_phi0 is minus e1..e7.
ORIENTATION = -1


@dataclass(frozen=True)
class Spin7Constants:
    Phi0: DenseTensor


def standard_constants() -> Spin7Constants:
    return Spin7Constants(DenseTensor(PHI0_8.copy()))


def hodge_star8(form4: np.ndarray) -> np.ndarray:
    """Flat Hodge star on 4-forms for the induced orientation."""
    return ORIENTATION * _kernels.flat_star(form4, 8, 4)


def self_duality_residual(Phi=PHI0_8) -> float:
    return float(np.max(np.abs(hodge_star8(Phi) - Phi)))


def project7(beta: np.ndarray, Phi=PHI0_8) -> np.ndarray:
    """Omega^2_7 part of the antisymmetric part of beta (frame components).

    The operator beta -> (1/2) beta_cd Phi_cdab has eigenvalue -3 on the
    7-dimensional piece and +1 on the 21-dimensional one, so the projector
    is (1/4)(beta - (1/2) beta Phi).
    """
    b = 0.5 * (beta - np.swapaxes(beta, -1, -2))
    return 0.25 * b - 0.125 * np.einsum("...cd,...cdab->...ab", b, Phi)


def diamond_rank(tol: float = 1e-10):
    return ga.diamond_rank(PHI0_8, 4, tol)


class Spin7State:
    """Phi_ijkl = e_i^a e_j^b e_k^c e_l^d Phi0_abcd and g = e e^T on a dim-8 grid."""

    def __init__(self, e: np.ndarray, spec: GridSpec):
        if spec.ambient_dim != 8 or e.shape != (spec.npts, 8, 8):
            raise ValueError(f"frame field {e.shape} does not fit a dim-8 grid of {spec.npts} points")
        self.e = e
        self.spec = spec

    @cached_property
    def frame(self) -> Frame:
        return Frame(self.e)

    def f(self, t, rank):
        return self.frame.to_frame(t, rank)

    def c(self, t, rank):
        return self.frame.to_coord(t, rank)

    @cached_property
    def Phi(self):
        return np.einsum("nia,njb,nkc,nld,abcd->nijkl", self.e, self.e, self.e, self.e, PHI0_8, optimize=True)

    @cached_property
    def Phi_f(self):
        return np.broadcast_to(PHI0_8, (self.spec.npts,) + (8,) * 4)

    @cached_property
    def g(self):
        return np.einsum("nia,nja->nij", self.e, self.e)

    @cached_property
    def curv(self):
        return curvature(self.g, self.spec, np.linalg.inv(self.g))

    @cached_property
    def Rm_f(self):
        return self.f(self.curv.Rm, 4)

    @cached_property
    def Ric_f(self):
        return self.f(self.curv.Ric, 2)

    @property
    def R(self):
        return self.curv.R

    @cached_property
    def nabla_Phi_f(self):
        return self.f(covariant_derivative(self.Phi, self.curv), 5)

    @cached_property
    def T_raw_f(self):
        """(1/96) nabla_m Phi_ajkl Phi_bjkl before projection."""
        return np.einsum("nmajkl,bjkl->nmab", self.nabla_Phi_f, PHI0_8) / 96.0

    @cached_property
    def T_f(self):
        return project7(self.T_raw_f)

    @cached_property
    def T(self):
        return self.c(self.T_f, 3)

    @cached_property
    def DT_f(self):
        """DT_f[n, d, m, a, b] = nabla_d T_{m;ab}."""
        return self.f(covariant_derivative(self.T, self.curv), 4)

    @cached_property
    def DivT_f(self):
        return np.einsum("nmmab->nab", self.DT_f)

    @cached_property
    def TPhi_f(self):
        """(T_p <> Phi) for every p, shape (npts, 8, 8, 8, 8, 8)."""
        return ga.diamond(self.T_f, PHI0_8, 4)

    @cached_property
    def velocity_f(self):
        TT = 0.5 * np.sum(ga.diamond(self.T_f, self.TPhi_f, 4), axis=1)
        return ga.diamond(-self.Ric_f + 0.5 * self.DivT_f, PHI0_8, 4) + TT

    @cached_property
    def velocity(self):
        return self.c(self.velocity_f, 4)


def torsion_spin7(state: Spin7State) -> np.ndarray:
    """T_{m;ab} as lower-index coordinate components."""
    return state.T


def reconstruction_residual(state: Spin7State) -> float:
    """max |nabla Phi - T_m <> Phi| in the frame."""
    return float(np.max(np.abs(state.nabla_Phi_f - state.TPhi_f)))


def projection_residual(state: Spin7State) -> float:
    """How far the raw 1/96 contraction is from Omega^2_7."""
    return float(np.max(np.abs(state.T_raw_f - state.T_f)))


def rm_contraction(Rm_f: np.ndarray, Phi=PHI0_8) -> np.ndarray:
    """R_ijkl Phi_ajkl, which vanishes for any algebraic curvature tensor."""
    return np.einsum("...ijkl,ajkl->...ia", Rm_f, Phi)


def bianchi_field(state: Spin7State) -> np.ndarray:
    T = state.T_f
    D = state.DT_f
    Rm = state.Rm_f
    lhs = D - np.swapaxes(D, 1, 2)
    TT = np.einsum("niam,njmb->nijab", T, T)
    rhs = (
        2.0 * TT
        - 2.0 * np.swapaxes(TT, 1, 2)
        + 0.25 * np.einsum("njiab->nijab", Rm)
        - 0.125 * np.einsum("zjimn,mnab->zijab", Rm, PHI0_8)
    )
    return lhs - rhs


def ricci_field(state: Spin7State) -> np.ndarray:
    T = state.T_f
    D = state.DT_f
    expr = (
        4.0 * np.einsum("niaja->nij", D)
        - 4.0 * np.einsum("naija->nij", D)
        - 8.0 * np.einsum("nijb,naba->nij", T, T)
        + 8.0 * np.einsum("najb,niba->nij", T, T)
    )
    return state.Ric_f - expr


def scalar_field(state: Spin7State) -> np.ndarray:
    T = state.T_f
    D = state.DT_f
    T8 = np.einsum("naab->nb", T)
    expr = (
        4.0 * np.einsum("niaia->n", D)
        - 4.0 * np.einsum("naiia->n", D)
        + 8.0 * np.einsum("nb,nb->n", T8, T8)
        + 8.0 * np.einsum("najb,njba->n", T, T)
    )
    return state.R - expr


def spin7_identity_residuals(state: Spin7State) -> dict:
    return {
        "reconstruction": reconstruction_residual(state),
        "bianchi": float(np.max(np.abs(bianchi_field(state)))),
        "rm_phi": float(np.max(np.abs(rm_contraction(state.Rm_f)))),
        "ricci": float(np.max(np.abs(ricci_field(state)))),
        "scalar": float(np.max(np.abs(scalar_field(state)))),
    }


def velocity_spin7(state: Spin7State) -> np.ndarray:
    """(-Ric + T*T + (1/2) DivT) <> Phi, coordinate components."""
    return state.velocity
