"""Pointwise checks of the second-order Taylor coefficients of phi, psi and Phi.

At the centre of adapted normal coordinates the quadratic coefficient
Q_pq.. is a multilinear expression in T, nabla T and Rm. Contracting p = q
must reproduce the closed forms built from Ric, T^tT, DivT and the diamond
operator. Inputs are drawn at random; nothing ties nabla T to Rm, since the
contraction identity is multilinear on its own.

Curvature convention as in geometry: Ric_jk = R_ijki (orthonormal frame).
"""

from dataclasses import dataclass

import numpy as np

from . import g2algebra as ga
from .spin7 import PHI0_8, project7

TARGETS = ("g2", "psi", "spin7")


@dataclass(frozen=True)
class AlgebraicSample:
    T: np.ndarray
    gradT: np.ndarray  # gradT[p, q, ...] stands for nabla_p T_q...
    Rm: np.ndarray
    Ric: np.ndarray
    seed: int | None = None

    @property
    def dim(self) -> int:
        return self.Rm.shape[0]


def curvature_projection(R: np.ndarray) -> np.ndarray:
    """Project a 4-tensor onto algebraic curvature tensors.

    Antisymmetrize both pairs, symmetrize under pair exchange, then remove
    the totally antisymmetric (first Bianchi) part.
    """
    R = 0.5 * (R - R.transpose(1, 0, 2, 3))
    R = 0.5 * (R - R.transpose(0, 1, 3, 2))
    R = 0.5 * (R + R.transpose(2, 3, 0, 1))
    cyc = (R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)) / 3.0
    return R - cyc


def random_curvature(rng: np.random.Generator, dim: int) -> np.ndarray:
    return curvature_projection(rng.standard_normal((dim,) * 4))


def ricci_of(Rm: np.ndarray) -> np.ndarray:
    return np.einsum("ijki->jk", Rm)


def curvature_symmetry_residual(Rm: np.ndarray) -> float:
    parts = (
        Rm + Rm.transpose(1, 0, 2, 3),
        Rm + Rm.transpose(0, 1, 3, 2),
        Rm - Rm.transpose(2, 3, 0, 1),
        Rm + Rm.transpose(1, 2, 0, 3) + Rm.transpose(2, 0, 1, 3),
    )
    return max(float(np.max(np.abs(p))) for p in parts)


def random_sample(rng: np.random.Generator, target: str = "g2", seed=None) -> AlgebraicSample:
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    if target == "spin7":
        T = project7(rng.standard_normal((8, 8, 8)))
        gradT = project7(rng.standard_normal((8, 8, 8, 8)))
        Rm = random_curvature(rng, 8)
    else:
        T = rng.standard_normal((7, 7))
        gradT = rng.standard_normal((7, 7, 7))
        Rm = random_curvature(rng, 7)
    return AlgebraicSample(T, gradT, Rm, ricci_of(Rm), seed)


def constant_curvature_sample(dim: int, c: float) -> AlgebraicSample:
    """R_ijkl = c (d_il d_jk - d_ik d_jl) with T = 0, so Ric = c (dim - 1) g.

    c > 0 is a round sphere in the curvature convention used here.
    """
    d = np.eye(dim)
    Rm = c * (np.einsum("il,jk->ijkl", d, d) - np.einsum("ik,jl->ijkl", d, d))
    shapeT = (8, 8, 8) if dim == 8 else (7, 7)
    return AlgebraicSample(np.zeros(shapeT), np.zeros((dim,) + shapeT), Rm, ricci_of(Rm))


def unit_ricci_sample(dim: int) -> AlgebraicSample:
    """Pure-trace curvature with Ric = g."""
    return constant_curvature_sample(dim, 1.0 / (dim - 1))


def zero_sample(target: str = "g2") -> AlgebraicSample:
    return constant_curvature_sample(8 if target == "spin7" else 7, 0.0)


def contract_pq(Q: np.ndarray) -> np.ndarray:
    return np.einsum("pp...->...", Q)


def _es(spec: str, diagonal: bool) -> str:
    """In diagonal mode only the p = q blocks are built: q becomes p, and drops from the output."""
    if not diagonal:
        return spec
    ins, out = spec.split("->")
    return ins.replace("q", "p") + "->" + out.replace("q", "")


# ------------------------------------------------------------------- phi


def g2_linear(T, phi=ga.PHI0, psi=ga.PSI0):
    """First-order coefficient T_qm psi_mijk."""
    return np.einsum("qm,mijk->qijk", T, psi)


def g2_quadratic(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0, diagonal: bool = False) -> np.ndarray:
    """Q_pq;ijk, or only its p = q blocks Q_pp;ijk when diagonal is set."""
    T, D, R = s.T, s.gradT, s.Rm
    e = lambda spec: _es(spec, diagonal)  # noqa: E731
    Q = 0.5 * np.einsum(e("pqm,mijk->pqijk"), D, psi)
    Q -= 0.5 * np.einsum(e("pq,ijk->pqijk"), T @ T.T, phi)
    Q += 0.5 * (
        np.einsum(e("pm,qi,mjk->pqijk"), T, T, phi)
        + np.einsum(e("pm,qj,mki->pqijk"), T, T, phi)
        + np.einsum(e("pm,qk,mij->pqijk"), T, T, phi)
    )
    Q += (
        np.einsum(e("piqm,mjk->pqijk"), R, phi)
        + np.einsum(e("pjqm,mki->pqijk"), R, phi)
        + np.einsum(e("pkqm,mij->pqijk"), R, phi)
    ) / 6.0
    return Q


def g2_target(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0) -> np.ndarray:
    T = s.T
    div = np.einsum("ppm->m", s.gradT)
    g = np.eye(7)
    return (
        -ga.diamond(s.Ric, phi, 3) / 6.0
        + 0.5 * ga.diamond(T.T @ T, phi, 3)
        - ga.diamond(np.sum(T * T) * g, phi, 3) / 6.0
        + 0.5 * ga.interior(div, psi, 4)
    )


def g2_laplacian_check(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0) -> float:
    Q = g2_quadratic(s, phi, psi, diagonal=True)
    return float(np.max(np.abs(Q.sum(axis=0) - g2_target(s, phi, psi))))


def g2_linear_check(T, phi=ga.PHI0, psi=ga.PSI0) -> float:
    """The torsion read back from the linear coefficient with the 1/24 formula."""
    back = np.einsum("pijk,qijk->pq", g2_linear(T, phi, psi), psi) / 24.0
    return float(np.max(np.abs(back - T)))


# ------------------------------------------------------------------- psi


def psi_linear(T, phi=ga.PHI0):
    return (
        -np.einsum("qi,jkl->qijkl", T, phi, optimize=True)
        + np.einsum("qj,ikl->qijkl", T, phi, optimize=True)
        - np.einsum("qk,ijl->qijkl", T, phi, optimize=True)
        + np.einsum("ql,ijk->qijkl", T, phi, optimize=True)
    )


def psi_quadratic(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0, diagonal: bool = False) -> np.ndarray:
    T, D, R = s.T, s.gradT, s.Rm
    e = lambda spec: _es(spec, diagonal)  # noqa: E731
    Q = 0.5 * (
        -np.einsum(e("pqi,jkl->pqijkl"), D, phi, optimize=True)
        + np.einsum(e("pqj,ikl->pqijkl"), D, phi, optimize=True)
        - np.einsum(e("pqk,ijl->pqijkl"), D, phi, optimize=True)
        + np.einsum(e("pql,ijk->pqijkl"), D, phi, optimize=True)
    )
    Tpsi = np.einsum("pm,mabc->pabc", T, psi, optimize=True)  # T_pm psi_mabc
    Q += 0.5 * (
        -np.einsum(e("qi,pjkl->pqijkl"), T, Tpsi, optimize=True)
        + np.einsum(e("qj,pikl->pqijkl"), T, Tpsi, optimize=True)
        - np.einsum(e("qk,pijl->pqijkl"), T, Tpsi, optimize=True)
        + np.einsum(e("ql,pijk->pqijkl"), T, Tpsi, optimize=True)
    )
    Q += (
        np.einsum(e("piqm,mjkl->pqijkl"), R, psi, optimize=True)
        + np.einsum(e("pjqm,imkl->pqijkl"), R, psi, optimize=True)
        + np.einsum(e("pkqm,ijml->pqijkl"), R, psi, optimize=True)
        + np.einsum(e("plqm,ijkm->pqijkl"), R, psi, optimize=True)
    ) / 6.0
    return Q


def psi_target(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0) -> np.ndarray:
    T = s.T
    div = np.einsum("ppm->m", s.gradT, optimize=True)
    return ga.diamond(-s.Ric / 6.0 - 0.5 * T.T @ T, psi, 4) - 0.5 * ga.wedge_vector_phi(div, phi)


def psi_laplacian_check(s: AlgebraicSample, phi=ga.PHI0, psi=ga.PSI0) -> float:
    Q = psi_quadratic(s, phi, psi, diagonal=True)
    return float(np.max(np.abs(Q.sum(axis=0) - psi_target(s, phi, psi))))


def _so7_generator(v, phi, psi):
    """2-tensor B with B<>phi = v-psi (least squares over all 2-tensors)."""
    cols = []
    for a in range(7):
        for b in range(7):
            E = np.zeros((7, 7))
            E[a, b] = 1.0
            cols.append(ga.diamond(E, phi, 3).ravel())
    A = np.array(cols).T
    B, *_ = np.linalg.lstsq(A, ga.interior(v, psi, 4).ravel(), rcond=None)
    return B.reshape(7, 7)


def psi_linear_check(T, phi=ga.PHI0, psi=ga.PSI0) -> float:
    """nabla_q acts on phi through some B_q; the psi coefficient must be B_q<>psi."""
    worst = 0.0
    lin = psi_linear(T, phi)
    for q in range(7):
        B = _so7_generator(T[q], phi, psi)
        worst = max(worst, float(np.max(np.abs(ga.diamond(B, psi, 4) - lin[q]))))
    return worst


# ----------------------------------------------------------------- Spin(7)


def spin7_linear(T, Phi=PHI0_8):
    return ga.diamond(T, Phi, 4)


def spin7_quadratic(s: AlgebraicSample, Phi=PHI0_8, diagonal: bool = False) -> np.ndarray:
    T, D, R = s.T, s.gradT, s.Rm
    e = lambda spec: _es(spec, diagonal)  # noqa: E731
    # the nabla T and curvature terms both act slot by slot on Phi, so they
    # share one diamond: K_pq;im = (1/2) nabla_p T_q;im + (1/6) R_piqm
    K = 0.5 * np.einsum(e("pqim->pqim"), D) + np.einsum(e("piqm->pqim"), R) / 6.0
    Q = ga.diamond(K, Phi, 4)
    TpPhi = ga.diamond(T, Phi, 4)  # (T_p <> Phi) for each p
    # (1/2) T_q;am (T_p<>Phi) with m in slot a, summed over slots
    letters = "ijkl"
    for s_ in range(4):
        sub = letters[:s_] + "m" + letters[s_ + 1 :]
        Q += 0.5 * np.einsum(e(f"q{letters[s_]}m,p{sub}->pq{letters}"), T, TpPhi, optimize=True)
    return Q


def spin7_target(s: AlgebraicSample, Phi=PHI0_8) -> np.ndarray:
    T = s.T
    div = np.einsum("ppab->ab", s.gradT, optimize=True)
    TT = np.sum(ga.diamond(T, ga.diamond(T, Phi, 4), 4), axis=0)
    return 0.5 * ga.diamond(div, Phi, 4) + 0.5 * TT - ga.diamond(s.Ric, Phi, 4) / 6.0


def spin7_laplacian_check(s: AlgebraicSample, Phi=PHI0_8) -> float:
    Q = spin7_quadratic(s, Phi, diagonal=True)
    return float(np.max(np.abs(Q.sum(axis=0) - spin7_target(s, Phi))))


def spin7_linear_check(T, Phi=PHI0_8) -> float:
    """T read back from the linear coefficient with the 1/96 contraction."""
    back = np.einsum("qajkl,bjkl->qab", spin7_linear(T, Phi), Phi) / 96.0
    return float(np.max(np.abs(back - T)))


# ------------------------------------------------------------------ suites

_CHECKS = {"g2": g2_laplacian_check, "psi": psi_laplacian_check, "spin7": spin7_laplacian_check}
_LINEAR = {"g2": g2_linear_check, "psi": psi_linear_check, "spin7": spin7_linear_check}


def run_suite(target: str, samples: int = 200, seed: int = 0) -> np.ndarray:
    """Quadratic-contraction residual for each seeded sample."""
    rng = np.random.default_rng(seed)
    check = _CHECKS[target]
    return np.array([check(random_sample(rng, target, seed)) for _ in range(samples)])


def run_linear_suite(target: str, samples: int = 20, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    check = _LINEAR[target]
    return np.array([check(random_sample(rng, target, seed).T) for _ in range(samples)])


def grid_samples(state, points=None):
    """Bianchi-consistent samples read off a G2State in the orthonormal frame.

    Yields (sample, phi_f, psi_f) so the checks run against the local forms.
    The discrete curvature tensor only has its symmetries up to O(h^4), so it
    is projected back onto algebraic curvature tensors first.
    """
    idx = range(state.spec.npts) if points is None else points
    for n in idx:
        Rm = curvature_projection(state.Rm_f[n])
        s = AlgebraicSample(state.T_f[n], state.DT_f[n], Rm, ricci_of(Rm))
        yield s, state.phi_f[n], state.psi_f[n]
