"""Torsion of a G2-structure field and the identities that certify it.

G2State caches every derived quantity of a phi field. Quantities ending in
_f are orthonormal-frame components (Cholesky frame of g); those are what
the identity residuals are measured in, so max-norms are independent of
the coordinate scaling.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import g2algebra as ga
from .errors import NotCoclosed
from .frames import Frame
from .geometry import (
    CurvatureBundle,
    GridSpec,
    covariant_derivative,
    curvature,
    divergence,
    gradient,
    integrate,
    rough_laplacian,
)


@dataclass(eq=False)
class TorsionBundle:
    """Torsion pieces as lower-index coordinate components.

    T1 is the scalar tr(T)/7, so the 2-tensor part is T1 * g and
    |T_1|^2 = 7 T1^2 = (tr T)^2 / 7.
    """

    T: np.ndarray
    T1: np.ndarray
    T27: np.ndarray
    T7: np.ndarray
    T14: np.ndarray
    VT: np.ndarray
    DivT: np.ndarray
    norms: dict


class G2State:
    def __init__(self, phi: np.ndarray, spec: GridSpec):
        if phi.shape != (spec.npts, 7, 7, 7) or spec.ambient_dim != 7:
            raise ValueError(f"phi has shape {phi.shape}; grid wants {(spec.npts, 7, 7, 7)}")
        self.phi = phi
        self.spec = spec

    # -- metric data
    @cached_property
    def pw(self) -> ga.PointwiseG2:
        return ga.pointwise_g2(self.phi)

    @property
    def g(self):
        return self.pw.g

    @property
    def ginv(self):
        return self.pw.ginv

    @property
    def psi(self):
        return self.pw.psi

    @property
    def vol(self):
        return self.pw.vol_density

    @cached_property
    def curv(self) -> CurvatureBundle:
        return curvature(self.pw.g, self.spec, self.pw.ginv)

    @cached_property
    def frame(self) -> Frame:
        return Frame.from_metric(self.pw.g)

    def f(self, t, rank):
        return self.frame.to_frame(t, rank)

    def c(self, t, rank):
        return self.frame.to_coord(t, rank)

    @cached_property
    def phi_f(self):
        return self.f(self.phi, 3)

    @cached_property
    def psi_f(self):
        return self.f(self.pw.psi, 4)

    @cached_property
    def Rm_f(self):
        return self.f(self.curv.Rm, 4)

    @cached_property
    def Ric_f(self):
        return self.f(self.curv.Ric, 2)

    @property
    def R(self):
        return self.curv.R

    # -- torsion
    @cached_property
    def nabla_phi_f(self):
        return self.f(covariant_derivative(self.phi, self.curv), 4)

    @cached_property
    def T_f(self):
        return np.einsum("npijk,nqijk->npq", self.nabla_phi_f, self.psi_f) / 24.0

    @cached_property
    def T(self):
        return self.c(self.T_f, 2)

    @cached_property
    def DT_f(self):
        """(nabla T) frame components, derivative index first."""
        return self.f(covariant_derivative(self.T, self.curv), 3)

    @cached_property
    def DivT_f(self):
        return np.einsum("njji->ni", self.DT_f)

    @cached_property
    def TtT_f(self):
        return np.einsum("npi,npj->nij", self.T_f, self.T_f)

    @cached_property
    def T_norm2(self):
        return np.einsum("nij,nij->n", self.T_f, self.T_f)

    @cached_property
    def torsion(self) -> TorsionBundle:
        Tf = self.T_f
        eye = np.eye(7)
        tr = np.einsum("nii->n", Tf)
        sym = 0.5 * (Tf + np.swapaxes(Tf, 1, 2))
        anti = Tf - sym
        t27 = sym - (tr / 7.0)[:, None, None] * eye
        t7, t14 = ga.project_2form(anti, self.psi_f, 7)
        vt = ga.vt_vector(Tf, self.phi_f)
        norms = {
            "T1": tr**2 / 7.0,
            "T27": np.einsum("nij,nij->n", t27, t27),
            "T7": np.einsum("nij,nij->n", t7, t7),
            "T14": np.einsum("nij,nij->n", t14, t14),
            "T": self.T_norm2,
        }
        return TorsionBundle(
            T=self.T,
            T1=tr / 7.0,
            T27=self.c(t27, 2),
            T7=self.c(t7, 2),
            T14=self.c(t14, 2),
            VT=self.c(vt, 1),
            DivT=self.c(self.DivT_f, 1),
            norms=norms,
        )

    # -- flow quantities
    @cached_property
    def h_f(self):
        """Symmetric part of the velocity: -Ric + 3 T^t T - |T|^2 g."""
        return -self.Ric_f + 3.0 * self.TtT_f - self.T_norm2[:, None, None] * np.eye(7)

    @cached_property
    def velocity_f(self):
        return ga.diamond(self.h_f, self.phi_f, 3) + ga.interior(self.DivT_f, self.psi_f, 4)

    @cached_property
    def velocity(self):
        return self.c(self.velocity_f, 3)

    @cached_property
    def lambda_field(self):
        rm2 = np.sum(self.Rm_f**2, axis=(1, 2, 3, 4))
        dt2 = np.sum(self.DT_f**2, axis=(1, 2, 3))
        return np.sqrt(rm2 + dt2 + self.T_norm2**2)

    def volume(self) -> float:
        return integrate(np.ones(self.spec.npts), self.vol, self.spec)

    def energy(self) -> float:
        return 0.5 * integrate(self.T_norm2, self.vol, self.spec)

    def intrinsic_energy(self) -> float:
        """Integral of 10|T1|^2 + 9|T7|^2 + 3|T14|^2 + 3|T27|^2."""
        n = self.torsion.norms
        return integrate(10 * n["T1"] + 9 * n["T7"] + 3 * n["T14"] + 3 * n["T27"], self.vol, self.spec)


def full_torsion(phi: np.ndarray, spec: GridSpec) -> TorsionBundle:
    return G2State(phi, spec).torsion


def nabla_phi_residual(state: G2State) -> float:
    rec = np.einsum("nmp,npijk->nmijk", state.T_f, state.psi_f)
    return float(np.max(np.abs(state.nabla_phi_f - rec)))


def bianchi_field(state: G2State, T_f=None, DT_f=None) -> np.ndarray:
    T_f = state.T_f if T_f is None else T_f
    DT_f = state.DT_f if DT_f is None else DT_f
    phi = state.phi_f
    lhs = DT_f - np.swapaxes(DT_f, 1, 2)
    rhs = np.einsum("nia,njb,nabq->nijq", T_f, T_f, phi) + 0.5 * np.einsum("nijab,nabq->nijq", state.Rm_f, phi)
    return lhs - rhs


def bianchi_residual(state: G2State) -> float:
    return float(np.max(np.abs(bianchi_field(state))))


def scalar_identity_field(state: G2State) -> np.ndarray:
    tb = state.torsion
    n = tb.norms
    div_vt = divergence(tb.VT, state.curv)
    return state.R - (6 * n["T1"] - n["T27"] + 5 * n["T7"] - n["T14"] - 2 * div_vt)


def scalar_identity_residual(state: G2State) -> float:
    return float(np.max(np.abs(scalar_identity_field(state))))


def scalar_integral_identity(state: G2State):
    """(integral of R + 4|T|^2, integral of the intrinsic combination)."""
    lhs = integrate(state.R + 4 * state.T_norm2, state.vol, state.spec)
    return lhs, state.intrinsic_energy()


def laplacian_identity_field(state: G2State) -> np.ndarray:
    """Rough Laplacian of phi minus DivT-psi + T^tT<>phi - |T|^2 phi (frame)."""
    lap = state.f(rough_laplacian(state.phi, state.curv), 3)
    rhs = (
        ga.interior(state.DivT_f, state.psi_f, 4)
        + ga.diamond(state.TtT_f, state.phi_f, 3)
        - state.T_norm2[:, None, None, None] * state.phi_f
    )
    return lap - rhs


def laplacian_identity_residual(state: G2State) -> float:
    return float(np.max(np.abs(laplacian_identity_field(state))))


def exterior_derivative_psi(state: G2State) -> np.ndarray:
    d = gradient(state.psi, state.spec)  # d[:, m, i, j, k, l]
    return (
        d
        - np.einsum("nimjkl->nmijkl", d)
        + np.einsum("njmikl->nmijkl", d)
        - np.einsum("nkmijl->nmijkl", d)
        + np.einsum("nlmijk->nmijkl", d)
    )


def coclosed_divergence_check(state: G2State, dpsi_tolerance: float | None = None) -> float:
    """Max-norm of DivT - grad(tr T); only defined for certified co-closed fields."""
    scale = float(np.max(np.abs(state.psi)))
    tol = 1e-8 * scale if dpsi_tolerance is None else dpsi_tolerance
    dpsi = float(np.max(np.abs(exterior_derivative_psi(state))))
    if dpsi > tol:
        raise NotCoclosed(dpsi, tol)
    trT = np.einsum("nii->n", state.T_f)
    grad_tr = state.f(gradient(trT, state.spec), 1)
    return float(np.max(np.abs(state.DivT_f - grad_tr)))
