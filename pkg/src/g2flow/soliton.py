"""Residuals and identities for Ricci-harmonic solitons.

A soliton is (phi, Y, lambda) with velocity(phi) = lambda phi + L_Y phi.
Only the torsion-free family and anti-tests are exercised here; the
identities that need a genuine soliton sit behind a certification gate.
Vector fields are passed with upper indices (Y^i); internally everything is
lowered and measured in the orthonormal frame.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import g2algebra as ga
from .errors import NotASoliton
from .geometry import CurvatureBundle, GridSpec, covariant_derivative, divergence, gradient, integrate, rough_laplacian
from .torsion import G2State

CERTIFY_TOL = 1e-6


@dataclass(eq=False)
class SolitonCandidate:
    """phi on a grid, a vector field Y (upper indices) or a potential f, and lambda."""

    phi: np.ndarray
    spec: GridSpec
    lam: float = 0.0
    Y: np.ndarray | None = None
    f: np.ndarray | None = None

    def __post_init__(self):
        if self.Y is not None and self.f is not None:
            raise ValueError("give either Y or a potential f, not both")
        if self.f is not None:
            curl = float(np.max(np.abs(ga.curl(self.hess_f, self.state.phi))))
            scale = max(1.0, float(np.max(np.abs(self.hess_f))))
            if curl > 1e-8 * scale:
                raise ValueError(f"curl of grad f is {curl:.3e}; potential is not a gradient on this grid")

    @cached_property
    def state(self) -> G2State:
        return G2State(self.phi, self.spec)

    @property
    def is_gradient(self) -> bool:
        return self.f is not None

    @cached_property
    def Y_lower(self) -> np.ndarray:
        s = self.state
        if self.f is not None:
            return gradient(self.f, self.spec)
        if self.Y is None:
            return np.zeros((self.spec.npts, 7))
        return np.einsum("nij,nj->ni", s.g, self.Y)

    @cached_property
    def Y_upper(self) -> np.ndarray:
        return np.einsum("nij,nj->ni", self.state.ginv, self.Y_lower)

    @cached_property
    def hess_f(self) -> np.ndarray:
        return covariant_derivative(gradient(self.f, self.spec), self.state.curv)

    @cached_property
    def nablaY(self) -> np.ndarray:
        """nabla_i Y_j (coordinates)."""
        return covariant_derivative(self.Y_lower, self.state.curv)


@dataclass
class SolitonResidual:
    res_3form: float
    res_metric: float
    res_vector: float
    cross_check: float
    scale: float

    @property
    def certified(self) -> bool:
        return self.res_3form <= CERTIFY_TOL * self.scale


def _metric_vector_parts(c: SolitonCandidate):
    s = c.state
    eye = np.eye(7)
    nY = s.f(c.nablaY, 2)
    Yf = s.f(c.Y_lower, 1)
    M = (
        s.Ric_f
        - 3.0 * s.TtT_f
        + s.T_norm2[:, None, None] * eye
        + 0.5 * (nY + np.swapaxes(nY, 1, 2))
        + (c.lam / 3.0) * eye
    )
    V = s.DivT_f + 0.5 * ga.curl(nY, s.phi_f) - np.einsum("ni,nij->nj", Yf, s.T_f)
    return M, V, nY, Yf


def soliton_residual(c: SolitonCandidate) -> SolitonResidual:
    """Max-norms (frame) of the soliton equation and its metric and vector parts.

    cross_check compares the 3-form residual with -M<>phi + V-psi, which is
    the orthogonal recombination of the other two.
    """
    s = c.state
    M, V, nY, Yf = _metric_vector_parts(c)
    lie = ga.lie_derivative_frame(nY, Yf, s.T_f, s.phi_f, s.psi_f)
    res3 = s.velocity_f - c.lam * s.phi_f - lie
    recomb = -ga.diamond(M, s.phi_f, 3) + ga.interior(V, s.psi_f, 4)
    return SolitonResidual(
        res_3form=float(np.max(np.abs(res3))),
        res_metric=float(np.max(np.abs(M))),
        res_vector=float(np.max(np.abs(V))),
        cross_check=float(np.max(np.abs(res3 - recomb))),
        scale=float(np.max(np.abs(s.phi_f))),
    )


def certify(c: SolitonCandidate) -> SolitonResidual:
    r = soliton_residual(c)
    if not r.certified:
        raise NotASoliton(r.res_3form, CERTIFY_TOL * r.scale)
    return r


def lie_derivative_coordinates(Y_up: np.ndarray, phi: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Y^m d_m phi_ijk + d_i Y^m phi_mjk + d_j Y^m phi_imk + d_k Y^m phi_ijm."""
    dphi = gradient(phi, spec)
    dY = gradient(Y_up, spec)  # dY[:, i, m] = d_i Y^m
    return (
        np.einsum("nm,nmijk->nijk", Y_up, dphi)
        + np.einsum("nim,nmjk->nijk", dY, phi)
        + np.einsum("njm,nimk->nijk", dY, phi)
        + np.einsum("nkm,nijm->nijk", dY, phi)
    )


# ----------------------------------------------------------- integrals


def expanding_obstruction(c: SolitonCandidate, gate: bool = True):
    """(integral of the intrinsic torsion combination + 7/3 lambda Vol, verdict).

    On a compact soliton this vanishes, which forces lambda <= 0.
    """
    if gate:
        certify(c)
    s = c.state
    value = s.intrinsic_energy() + (7.0 / 3.0) * c.lam * s.volume()
    scale = max(1.0, abs(c.lam) * s.volume())
    return value, abs(value) <= 1e-8 * scale


def divergence_integral(V_lower: np.ndarray, state: G2State) -> float:
    """Integral of Div V in conservative form, sum_i d_i(vol V^i); zero by periodicity."""
    Vup = np.einsum("nij,nj->ni", state.ginv, V_lower)
    flux = state.vol[:, None] * Vup
    total = np.zeros(state.spec.npts)
    d = gradient(flux, state.spec)
    for i in range(state.spec.k):
        total += d[:, i, i]
    return integrate(total, np.ones_like(total), state.spec)


def trace_balance(state: G2State):
    """Balance the integrated trace identity with lambda and return the leftover.

    lambda* makes the torsion integral plus 7/3 lambda Vol vanish, so the
    remaining term of the integrated trace identity is -2 times the integral
    of Div(VT). Returns (lambda*, leftover).
    """
    lam = -3.0 * state.intrinsic_energy() / (7.0 * state.volume())
    leftover = state.intrinsic_energy() + (7.0 / 3.0) * lam * state.volume()
    leftover -= 2.0 * divergence_integral(state.torsion.VT, state)
    return lam, leftover


# --------------------------------------------- unconditional identities


def _norms(bundle: CurvatureBundle, X: np.ndarray):
    Xup = np.einsum("nij,nj->ni", bundle.ginv, X)
    nX = covariant_derivative(X, bundle)
    return Xup, nX


def pw1_field(X: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    """Div(L_X g)(X) - (1/2 Lap|X|^2 - |nabla X|^2 + Ric(X,X) + nabla_X Div X)."""
    gi = bundle.ginv
    Xup, nX = _norms(bundle, X)
    lxg = nX + np.swapaxes(nX, 1, 2)
    div_lxg = divergence(lxg, bundle)
    lhs = np.einsum("nj,nj->n", div_lxg, Xup)
    X2 = np.einsum("ni,ni->n", X, Xup)
    grad2 = np.einsum("nia,njb,nij,nab->n", gi, gi, nX, nX)
    ric = np.einsum("nij,ni,nj->n", bundle.Ric, Xup, Xup)
    divX = np.einsum("nij,nij->n", gi, nX)
    drift = np.einsum("ni,ni->n", Xup, gradient(divX, bundle.spec))
    return lhs - (0.5 * rough_laplacian(X2, bundle) - grad2 + ric + drift)


def pw2_field(f: np.ndarray, Z: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    """Div(L_grad f g)(Z) - 2 Ric(Z, grad f) - 2 nabla_Z Lap f, Z with upper indices."""
    df = gradient(f, bundle.spec)
    hess = covariant_derivative(df, bundle)
    div_l = divergence(2.0 * hess, bundle)
    dfup = np.einsum("nij,nj->ni", bundle.ginv, df)
    lap = np.einsum("nij,nij->n", bundle.ginv, hess)
    rhs = 2.0 * np.einsum("nij,ni,nj->n", bundle.Ric, Z, dfup) + 2.0 * np.einsum(
        "ni,ni->n", Z, gradient(lap, bundle.spec)
    )
    return np.einsum("nj,nj->n", div_l, Z) - rhs


# -------------------------------------- soliton-conditional identities


def _grad_scalar_f(s: G2State, u: np.ndarray) -> np.ndarray:
    return s.f(gradient(u, s.spec), 1)


def gradient_identities(c: SolitonCandidate, gate: bool = True) -> dict:
    """Residuals of the gradient soliton equations and the two scalar identities.

    soliden1: R + 4|T|^2 + Lap f + 7/3 lambda.
    soliden2: d(R + 6|T|^2 + |df|^2 + 2/3 lambda f) against
              6 T_pj T_pm f_m - 6 nabla_i(T_pi T_pj) - 2|T|^2 f_j.
    """
    if not c.is_gradient:
        raise ValueError("gradient identities need a potential f")
    s = c.state
    eye = np.eye(7)
    hess_f = s.f(c.hess_f, 2)
    df = s.f(c.Y_lower, 1)
    met = s.Ric_f - 3.0 * s.TtT_f + s.T_norm2[:, None, None] * eye + hess_f + (c.lam / 3.0) * eye
    tor = s.DivT_f - np.einsum("ni,nij->nj", df, s.T_f)
    report = {
        "gradsol_metric": float(np.max(np.abs(met))),
        "gradsol_torsion": float(np.max(np.abs(tor))),
    }
    if gate and max(report.values()) > CERTIFY_TOL * float(np.max(np.abs(s.phi_f))):
        raise NotASoliton(max(report.values()), CERTIFY_TOL)
    lap_f = np.einsum("nii->n", hess_f)
    id1 = s.R + 4.0 * s.T_norm2 + lap_f + (7.0 / 3.0) * c.lam
    df2 = np.einsum("ni,ni->n", df, df)
    lhs = _grad_scalar_f(s, s.R + 6.0 * s.T_norm2 + df2 + (2.0 * c.lam / 3.0) * c.f)
    div_ttt = s.f(divergence(s.c(s.TtT_f, 2), s.curv), 1)
    rhs = (
        6.0 * np.einsum("npj,npm,nm->nj", s.T_f, s.T_f, df)
        - 6.0 * div_ttt
        - 2.0 * s.T_norm2[:, None] * df
    )
    report["soliden1"] = float(np.max(np.abs(id1)))
    report["soliden2"] = float(np.max(np.abs(lhs - rhs)))
    return report


@dataclass
class AuxiliaryReport:
    pw1: float
    pw2: float | None = None
    pwsol1: float | None = None
    pwsol2: float | None = None
    driftR: float | None = None
    intsol1: tuple | None = None
    killing: dict = field(default_factory=dict)


def auxiliary_identities(c: SolitonCandidate, gate: bool = True, Z=None) -> AuxiliaryReport:
    """pw1/pw2 always; pwsol1/pwsol2/driftR/intsol1 only on certified solitons.

    The drift identity is used in the form
        Lap R - <grad R, Y> = -(6 Lap|T|^2 + 6 div div(T^tT) + 2|Ric|^2
                                - 6 Ric.T^tT + 2|T|^2 R) - 2/3 lambda R,
    which is what the scalar curvature evolution gives for
    R(t) = (1 + 2/3 lambda t)^(-1) Theta_t^* R.
    """
    s = c.state
    b = s.curv
    X = c.Y_lower
    rep = AuxiliaryReport(pw1=float(np.max(np.abs(pw1_field(X, b)))))
    if c.is_gradient:
        Z = c.Y_upper if Z is None else Z
        rep.pw2 = float(np.max(np.abs(pw2_field(c.f, Z, b))))
    if gate:
        certify(c)
    else:
        return rep

    Xup, nX = _norms(b, X)
    gi = b.ginv
    X2 = np.einsum("ni,ni->n", X, Xup)
    grad2 = np.einsum("nia,njb,nij,nab->n", gi, gi, nX, nX)
    ric = np.einsum("nij,ni,nj->n", b.Ric, Xup, Xup)
    dT2 = np.einsum("ni,ni->n", Xup, gradient(s.T_norm2, s.spec))
    ttt = s.c(s.TtT_f, 2)
    div_ttt_X = np.einsum("nj,nj->n", divergence(ttt, b), Xup)
    ttt_XX = np.einsum("nij,ni,nj->n", ttt, Xup, Xup)
    lap_X2 = rough_laplacian(X2, b)
    sol1 = 0.5 * lap_X2 - (grad2 - ric + 2.0 * dT2 + 6.0 * div_ttt_X)
    dX2 = np.einsum("ni,ni->n", Xup, gradient(X2, s.spec))
    sol2 = 0.5 * (lap_X2 - dX2) - (
        grad2 + (c.lam / 3.0) * X2 + s.T_norm2 * X2 - 3.0 * ttt_XX + 2.0 * dT2 + 6.0 * div_ttt_X
    )
    rep.pwsol1 = float(np.max(np.abs(sol1)))
    rep.pwsol2 = float(np.max(np.abs(sol2)))

    from .flow import scalar_rhs

    lapR = rough_laplacian(s.R, b)
    source = scalar_rhs(s) - lapR
    dR = gradient(s.R, s.spec)
    drift = lapR - np.einsum("ni,ni->n", dR, Xup) + source + (2.0 * c.lam / 3.0) * s.R
    rep.driftR = float(np.max(np.abs(drift)))

    cond = integrate(ric - 2.0 * dT2 - 6.0 * div_ttt_X, s.vol, s.spec)
    rep.killing = {"condition_integral": cond, "grad_X_integral": integrate(grad2, s.vol, s.spec)}

    if c.is_gradient:
        hess = c.hess_f
        lap_f = np.einsum("nij,nij->n", gi, hess)
        tf = hess - (lap_f / 7.0)[:, None, None] * s.g
        lhs = integrate(np.einsum("nia,njb,nij,nab->n", gi, gi, tf, tf), s.vol, s.spec)
        hf = s.f(hess, 2)
        dd = s.f(covariant_derivative(covariant_derivative(ttt, b), b), 4)
        integrand = (
            (5.0 / 14.0) * np.einsum("ni,ni->n", dR, Xup)
            + 6.0 * np.einsum("npj,npm,njm->n", s.T_f, s.T_f, hf)
            - 6.0 * np.einsum("njiij->n", dd)
            - (6.0 / 7.0) * s.T_norm2 * lap_f
        )
        rep.intsol1 = (lhs, integrate(integrand, s.vol, s.spec))
    return rep
