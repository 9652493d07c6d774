"""Pointwise G2 linear algebra.

Arrays carry any number of leading batch axes followed by tensor slots of
size 7. Formulas with explicit Kronecker deltas are applied in an orthonormal
frame (see frames.Frame); the public entry points accept coordinate
components together with the metric data and convert internally.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, permutations
from math import factorial

import numpy as np

from . import _kernels
from .errors import DegenerateForm, DimensionMismatch
from .frames import Frame
from .tensor import DenseTensor, perm_sign

# e123 + e145 + e167 + e246 - e257 - e347 - e356, written 1-based
PHI0_TERMS = [
    ((1, 2, 3), 1),
    ((1, 4, 5), 1),
    ((1, 6, 7), 1),
    ((2, 4, 6), 1),
    ((2, 5, 7), -1),
    ((3, 4, 7), -1),
    ((3, 5, 6), -1),
]


def alternating(terms, dim: int) -> np.ndarray:
    """Dense alternating tensor from (0-based index tuple, coefficient) pairs."""
    k = len(terms[0][0])
    out = np.zeros((dim,) * k)
    for idx, c in terms:
        for p in permutations(range(k)):
            out[tuple(idx[q] for q in p)] = perm_sign(p) * c
    return out


def _standard_phi() -> np.ndarray:
    return alternating([(tuple(i - 1 for i in idx), c) for idx, c in PHI0_TERMS], 7)


PHI0 = _standard_phi()
# The -6 normalisation makes the reference orientation e1..e7 negative for
# phi0, so psi0 is minus the reference star. The exact identity suite pins it.
PSI0 = -_kernels.flat_star(PHI0, 7, 3)
PHI0.flags.writeable = False
PSI0.flags.writeable = False


@dataclass(frozen=True)
class G2Constants:
    phi0: DenseTensor
    psi0: DenseTensor


def standard_constants() -> G2Constants:
    return G2Constants(DenseTensor(PHI0.copy()), DenseTensor(PSI0.copy()))


def form_norm2(form: np.ndarray, k: int) -> np.ndarray:
    """|form|^2 = (1/k!) sum of squared components, frame components."""
    axes = tuple(range(form.ndim - k, form.ndim))
    return np.sum(form * form, axis=axes) / factorial(k)


def phiphi_residual(phi=PHI0, psi=PSI0) -> float:
    d = np.eye(7)
    lhs = np.einsum("ijk,abk->ijab", phi, phi)
    rhs = np.einsum("ia,jb->ijab", d, d) - np.einsum("ib,ja->ijab", d, d) - psi
    return float(np.max(np.abs(lhs - rhs)))


def phipsi_residual(phi=PHI0, psi=PSI0) -> float:
    d = np.eye(7)
    lhs = np.einsum("ijk,abck->ijabc", phi, psi)
    rhs = (
        np.einsum("ia,jbc->ijabc", d, phi)
        + np.einsum("ib,ajc->ijabc", d, phi)
        + np.einsum("ic,abj->ijabc", d, phi)
        - np.einsum("ja,ibc->ijabc", d, phi)
        - np.einsum("jb,aic->ijabc", d, phi)
        - np.einsum("jc,abi->ijabc", d, phi)
    )
    return float(np.max(np.abs(lhs - rhs)))


def diamond(A: np.ndarray, gamma: np.ndarray, k: int | None = None) -> np.ndarray:
    """(A<>gamma)_{i1..ik} = sum over slots of A_{is p} gamma_{..p..}."""
    A = np.asarray(A)
    gamma = np.asarray(gamma)
    n = A.shape[-1]
    if k is None:
        k = gamma.ndim - (A.ndim - 2)
    if k < 1 or gamma.shape[-1] != n or A.shape[-2] != n:
        raise DimensionMismatch(f"cannot apply a {A.shape} tensor to a {gamma.shape} form")
    if gamma.ndim == k:
        # unbatched form: a single matrix product against the cached operator
        M = _diamond_matrix(np.ascontiguousarray(gamma, dtype=np.float64).tobytes(), n, k)
        flat = A.reshape(-1, n * n) @ M
        return flat.reshape(A.shape[:-2] + (n,) * k)
    letters = "abcdefgh"[:k]
    out = None
    for s in range(k):
        g_sub = letters[:s] + "p" + letters[s + 1 :]
        term = np.einsum(f"...{letters[s]}p,...{g_sub}->...{letters}", A, gamma, optimize=True)
        out = term if out is None else out + term
    return out


@lru_cache(maxsize=16)
def _diamond_matrix(raw: bytes, n: int, k: int) -> np.ndarray:
    """(n*n, n**k) matrix of A -> A<>gamma for a fixed form gamma."""
    gamma = np.frombuffer(raw, dtype=np.float64).reshape((n,) * k)
    letters = "abcdefgh"[:k]
    M = np.zeros((n, n) + (n,) * k)
    eye = np.eye(n)
    for s in range(k):
        g_sub = letters[:s] + "p" + letters[s + 1 :]
        # d(A<>gamma)/dA_xy: A_{i_s p} = delta_{x i_s} delta_{y p}
        M += np.einsum(f"x{letters[s]},{g_sub.replace('p', 'y')}->xy{letters}", eye, gamma)
    return M.reshape(n * n, n**k)


def interior(X: np.ndarray, gamma: np.ndarray, k: int) -> np.ndarray:
    """(X-gamma)_{j..} = X_i gamma_{ij..}."""
    rest = "bcdefgh"[: k - 1]
    return np.einsum(f"...a,...a{rest}->...{rest}", X, gamma)


def wedge_vector_phi(D: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """(D ^ phi)_{ijkl} for a 1-form D and a 3-form phi."""
    return (
        np.einsum("...i,...jkl->...ijkl", D, phi)
        - np.einsum("...j,...ikl->...ijkl", D, phi)
        + np.einsum("...k,...ijl->...ijkl", D, phi)
        - np.einsum("...l,...ijk->...ijkl", D, phi)
    )


def vt_vector(T: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ijk->...k", T, phi)


def curl(nablaY: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """(curl Y)_k = nabla_i Y_j phi_ijk with nablaY[..., i, j] = nabla_i Y_j."""
    return np.einsum("...ij,...ijk->...k", nablaY, phi)


# ---------------------------------------------------------------- metric


@dataclass(frozen=True)
class PointwiseG2:
    """phi with its metric, volume density and dual 4-form (coordinate components).

    orientation is +1 when vol_phi is a positive multiple of the reference
    e1..e7, -1 otherwise (the standard form has -1).
    """

    phi: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    vol_density: np.ndarray
    psi: np.ndarray
    orientation: np.ndarray

    @cached_property
    def frame(self) -> Frame:
        lead = self.g.shape[:-2]
        P = np.linalg.cholesky(self.g.reshape((-1, 7, 7)))
        return _Reshaped(Frame(P), lead)

    def pairing_residual(self) -> float:
        """Relative mismatch between the triple-wedge pairing and -6 g vol."""
        s = _kernels.metric_density(self.phi)
        target = -6.0 * (self.orientation * self.vol_density)[..., None, None] * self.g
        return float(np.max(np.abs(s - target)) / np.max(np.abs(target)))


class _Reshaped:
    """Frame wrapper restoring arbitrary leading batch shape."""

    def __init__(self, frame: Frame, lead):
        self.inner = frame
        self.lead = tuple(lead)

    def _apply(self, fn, t, rank):
        flat = t.reshape((-1,) + t.shape[len(self.lead) :])
        return fn(flat, rank).reshape(self.lead + flat.shape[1:])

    def to_frame(self, t, rank):
        return self._apply(self.inner.to_frame, t, rank)

    def to_coord(self, t, rank):
        return self._apply(self.inner.to_coord, t, rank)


def _as_array(phi):
    return phi.components if isinstance(phi, DenseTensor) else np.asarray(phi, dtype=np.float64)


def _structure(phi: np.ndarray, det_tol: float = 1e-12):
    s = _kernels.metric_density(phi)
    S = s / -6.0
    det = np.linalg.det(S)
    if np.any(np.abs(det) < det_tol) or not np.all(np.isfinite(det)):
        raise DegenerateForm(f"bilinear density determinant {np.min(np.abs(det)):.3e} below {det_tol}")
    sigma = np.sign(det)
    rho = np.abs(det) ** (1.0 / 9.0)
    g = S / (sigma * rho)[..., None, None]
    ev = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if np.any(ev[..., 0] <= 0.0):
        raise DegenerateForm("3-form induces an indefinite bilinear form")
    return g, rho, sigma


def metric_from_phi(phi):
    """Metric and volume density of a 3-form (single DenseTensor or batch)."""
    g, rho, _ = _structure(_as_array(phi))
    if isinstance(phi, DenseTensor):
        return DenseTensor(g), float(rho)
    return g, rho


def pointwise_g2(phi) -> PointwiseG2:
    phi = _as_array(phi)
    g, rho, sigma = _structure(phi)
    ginv = np.linalg.inv(g)
    up = np.einsum("...ia,...jb,...kc,...abc->...ijk", ginv, ginv, ginv, phi, optimize=True)
    psi = (sigma * rho)[..., None, None, None, None] * _kernels.flat_star(up, 7, 3)
    return PointwiseG2(phi, g, ginv, rho, psi, sigma)


# ------------------------------------------------------- decompositions


def _pairs(n: int):
    return list(combinations(range(n), 2))


def two_form_operator(form4: np.ndarray) -> np.ndarray:
    """Matrix of beta -> (1/2) beta_ab form4_abij on the basis e^a^e^b, a<b."""
    n = form4.shape[-1]
    pr = _pairs(n)
    ia = np.array([p[0] for p in pr])
    ib = np.array([p[1] for p in pr])
    # M[(ij),(ab)] = form4[a,b,i,j]
    return form4[..., ia[None, :], ib[None, :], ia[:, None], ib[:, None]]


def split_spectrum(M: np.ndarray, small_dim: int):
    """Eigen-split a batch of symmetric matrices into the cluster of size small_dim.

    The spectrum must have exactly two clusters separated by a gap of at least
    half the spectral radius; returns orthonormal bases (V_small, V_large).
    """
    w, V = np.linalg.eigh(M)
    n = w.shape[-1]
    radius = np.max(np.abs(w), axis=-1)
    gaps = np.diff(w, axis=-1)
    cut = np.argmax(gaps, axis=-1)
    if np.any(np.take_along_axis(gaps, cut[..., None], -1)[..., 0] < 0.5 * radius):
        raise DegenerateForm("2-form operator has no clean spectral gap")
    low = cut + 1
    if not np.all((low == small_dim) | (low == n - small_dim)):
        raise DegenerateForm("unexpected eigenspace dimensions")
    if np.all(low == small_dim):
        return V[..., :small_dim], V[..., small_dim:]
    if np.all(low == n - small_dim):
        return V[..., n - small_dim :], V[..., : n - small_dim]
    # mixed orientation across the batch: pick per point
    Vs = np.where((low == small_dim)[..., None, None], V[..., :small_dim], V[..., n - small_dim :])
    Vl = np.where((low == small_dim)[..., None, None], V[..., small_dim:], V[..., : n - small_dim])
    return Vs, Vl


def pack2(beta: np.ndarray) -> np.ndarray:
    n = beta.shape[-1]
    pr = _pairs(n)
    return beta[..., [p[0] for p in pr], [p[1] for p in pr]]


def unpack2(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (n, n))
    for c, (a, b) in enumerate(_pairs(n)):
        out[..., a, b] = v[..., c]
        out[..., b, a] = -v[..., c]
    return out


def project_2form(beta_f: np.ndarray, form4_f: np.ndarray, small_dim: int):
    """Split frame 2-forms into the small and large eigenspaces of the form4 operator."""
    n = beta_f.shape[-1]
    M = two_form_operator(form4_f)
    Vs, _ = split_spectrum(M, small_dim)
    v = pack2(beta_f)
    vs = np.einsum("...ac,...bc,...b->...a", Vs, Vs, v)
    small = unpack2(vs, n)
    return small, beta_f - small


def decompose_2form(beta, state: PointwiseG2):
    """beta = beta7 + beta14 (coordinate components, lower indices)."""
    beta = _as_array(beta)
    fr = state.frame
    bf = fr.to_frame(np.broadcast_to(beta, state.g.shape).copy(), 2)
    b7, b14 = project_2form(bf, fr.to_frame(state.psi, 4), 7)
    return fr.to_coord(b7, 2), fr.to_coord(b14, 2)


def _sym_basis(n: int):
    basis = []
    for a in range(n):
        for b in range(a, n):
            e = np.zeros((n, n))
            e[a, b] = e[b, a] = 1.0
            basis.append(e)
    return np.array(basis)


_TRIPLES = list(combinations(range(7), 3))
_TI = tuple(np.array([t[s] for t in _TRIPLES]) for s in range(3))


def three_form_system(phi_f: np.ndarray, psi_f: np.ndarray) -> np.ndarray:
    """35x35 matrix mapping (h packed symmetric, X) to sorted 3-form components."""
    sb = _sym_basis(7)  # (28, 7, 7)
    cols_h = diamond(sb, phi_f[..., None, :, :, :], 3)
    cols_x = interior(np.eye(7), psi_f[..., None, :, :, :, :], 4)
    cols = np.concatenate([cols_h, cols_x], axis=-4)  # (..., 35, 7, 7, 7)
    return np.swapaxes(cols[..., _TI[0], _TI[1], _TI[2]], -1, -2)


def solve_3form(sigma_f, phi_f, psi_f):
    B = three_form_system(phi_f, psi_f)
    rhs = sigma_f[..., _TI[0], _TI[1], _TI[2]]
    try:
        sol = np.linalg.solve(B, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateForm(f"3-form decomposition is singular: {exc}") from exc
    h = np.einsum("...c,cab->...ab", sol[..., :28], _sym_basis(7))
    return h, sol[..., 28:]


def decompose_3form(sigma, state: PointwiseG2):
    """Return (h, X) with sigma = h<>phi + X-psi; h and X as lower-index components."""
    sigma = _as_array(sigma)
    fr = state.frame
    sf = fr.to_frame(np.broadcast_to(sigma, state.phi.shape).copy(), 3)
    h, X = solve_3form(sf, fr.to_frame(state.phi, 3), fr.to_frame(state.psi, 4))
    return fr.to_coord(h, 2), fr.to_coord(X, 1)


def lie_derivative_frame(nablaY_f, Y_f, T_f, phi_f, psi_f):
    """(1/2) L_Y g <> phi + (-(1/2) curl Y + Y-T) - psi, all frame components."""
    lyg = nablaY_f + np.swapaxes(nablaY_f, -1, -2)
    vec = -0.5 * curl(nablaY_f, phi_f) + np.einsum("...i,...ij->...j", Y_f, T_f)
    return diamond(0.5 * lyg, phi_f, 3) + interior(vec, psi_f, 4)


def lie_derivative_phi(Y, nablaY, state: PointwiseG2, T):
    """Lie derivative of phi from Y, its covariant derivative and the torsion.

    All inputs and the result are coordinate components with lower indices;
    nablaY[..., i, j] = nabla_i Y_j.
    """
    fr = state.frame
    out = lie_derivative_frame(
        fr.to_frame(nablaY, 2),
        fr.to_frame(Y, 1),
        fr.to_frame(T, 2),
        fr.to_frame(state.phi, 3),
        fr.to_frame(state.psi, 4),
    )
    return fr.to_coord(out, 3)


def diamond_rank(form: np.ndarray, k: int, tol: float = 1e-10):
    """Numerical rank and kernel dimension of A -> A<>form on all 2-tensors."""
    n = form.shape[-1]
    cols = []
    for a in range(n):
        for b in range(n):
            E = np.zeros((n, n))
            E[a, b] = 1.0
            cols.append(diamond(E, form, k).ravel())
    sv = np.linalg.svd(np.array(cols).T, compute_uv=False)
    rank = int(np.sum(sv > tol * max(sv[0], 1.0)))
    return rank, n * n - rank
