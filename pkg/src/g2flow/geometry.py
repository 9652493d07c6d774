"""Periodic grids, derivatives and Riemannian curvature on reduced tori.

A field is an array of shape (npts, d, ..., d): one row per grid point in
row-major grid order, then tensor slots. Only the first k coordinates are
active; everything is constant along the remaining ambient directions.

Curvature convention (pinned by the commutator test in the test suite):
    R_ijk^l = d_i G^l_jk - d_j G^l_ik + G^p_jk G^l_ip - G^p_ik G^l_jp
    R_ijkl  = R_ijk^p g_pl,   Ric_jk = R_ijk^i,   R = g^jk Ric_jk
so that [nabla_i, nabla_j] S_kl = -R_ijk^m S_ml - R_ijl^m S_km and spheres
have positive Ricci curvature.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonPositiveDefinite

SCHEMES = ("central-4th", "spectral")


@dataclass(frozen=True)
class GridSpec:
    ambient_dim: int = 7
    k: int = 1
    N: int = 16
    scheme: str = "central-4th"

    def __post_init__(self):
        if self.ambient_dim not in (7, 8):
            raise ValueError(f"ambient_dim must be 7 or 8, got {self.ambient_dim}")
        if not 1 <= self.k <= 3:
            raise ValueError(f"active dims must be 1..3, got {self.k}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")
        if self.N**self.k > 2**20:
            raise ValueError("grid exceeds 2^20 points")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown derivative scheme {self.scheme!r}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.N

    @property
    def npts(self) -> int:
        return self.N**self.k

    @property
    def shape(self):
        return (self.N,) * self.k

    def coords(self) -> np.ndarray:
        """(npts, k) array of active coordinates."""
        x = self.h * np.arange(self.N)
        mesh = np.meshgrid(*([x] * self.k), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def with_N(self, N: int) -> "GridSpec":
        return GridSpec(self.ambient_dim, self.k, N, self.scheme)


@dataclass(frozen=True, eq=False)
class Field:
    spec: GridSpec
    rank: int
    values: np.ndarray

    def __post_init__(self):
        want = (self.spec.npts,) + (self.spec.ambient_dim,) * self.rank
        if self.values.shape != want:
            raise DimensionMismatch(f"field values {self.values.shape}, expected {want}")


def _spectral_d1(f: np.ndarray) -> np.ndarray:
    n = f.shape[0]
    fh = np.fft.rfft(f, axis=0)
    kk = np.arange(fh.shape[0], dtype=np.float64)
    kk[-1] = 0.0 if n % 2 == 0 else kk[-1]
    fh *= (1j * kk).reshape((-1,) + (1,) * (f.ndim - 1))
    return np.fft.irfft(fh, n=n, axis=0)


def partial_array(values: np.ndarray, spec: GridSpec, direction: int) -> np.ndarray:
    if direction >= spec.ambient_dim or direction < 0:
        raise DimensionMismatch(f"direction {direction} out of range")
    if direction >= spec.k:
        return np.zeros_like(values)
    rest = values.shape[1:]
    grid = values.reshape(spec.shape + rest)
    moved = np.moveaxis(grid, direction, 0)
    if spec.scheme == "spectral":
        d = _spectral_d1(moved)
    else:
        d = _kernels.periodic_d1(np.ascontiguousarray(moved), spec.h)
    return np.moveaxis(d, 0, direction).reshape(values.shape)


def partial(f: Field, direction: int) -> Field:
    return Field(f.spec, f.rank, partial_array(f.values, f.spec, direction))


def gradient(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """All partial derivatives; the new slot is axis 1 (derivative index first)."""
    out = np.zeros((values.shape[0], spec.ambient_dim) + values.shape[1:])
    for a in range(spec.k):
        out[:, a] = partial_array(values, spec, a)
    return out


@dataclass(eq=False)
class CurvatureBundle:
    spec: GridSpec
    g: np.ndarray
    ginv: np.ndarray
    Gamma: np.ndarray  # Gamma[:, l, i, j] = G^l_ij
    Rup: np.ndarray  # Rup[:, i, j, k, l] = R_ijk^l
    Rm: np.ndarray
    Ric: np.ndarray
    R: np.ndarray


def check_metric(g: np.ndarray, min_eig: float = 1e-10):
    ev = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if not np.all(ev[..., 0] >= min_eig):
        bad = int(np.argmin(ev[..., 0]))
        raise NonPositiveDefinite(f"metric eigenvalue {ev[bad, 0]:.3e} < {min_eig} at grid point {bad}")


def christoffel(g: np.ndarray, ginv: np.ndarray, spec: GridSpec) -> np.ndarray:
    dg = gradient(g, spec)  # dg[:, m, i, j] = d_m g_ij
    # low[:, i, j, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (dg + dg.transpose(0, 2, 1, 3) - dg.transpose(0, 2, 3, 1))
    return np.einsum("nkl,nijl->nkij", ginv, low)


def curvature(g: np.ndarray, spec: GridSpec, ginv: np.ndarray | None = None) -> CurvatureBundle:
    check_metric(g)
    if ginv is None:
        ginv = np.linalg.inv(g)
    G = christoffel(g, ginv, spec)
    dG = gradient(G, spec)  # dG[:, m, l, i, j] = d_m G^l_ij
    Rup = (
        np.einsum("niljk->nijkl", dG)
        - np.einsum("njlik->nijkl", dG)
        + np.einsum("npjk,nlip->nijkl", G, G)
        - np.einsum("npik,nljp->nijkl", G, G)
    )
    Rm = np.einsum("nijkp,npl->nijkl", Rup, g)
    Ric = np.einsum("nijki->njk", Rup)
    R = np.einsum("njk,njk->n", ginv, Ric)
    return CurvatureBundle(spec, g, ginv, G, Rup, Rm, Ric, R)


_SLOTS = "abcdefgh"


def covariant_derivative(t: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    """nabla_m t_{i..} with the new index first (axis 1); all slots covariant."""
    rank = t.ndim - 1
    out = gradient(t, bundle.spec)
    G = bundle.Gamma
    for s in range(rank):
        idx = _SLOTS[:rank]
        src = idx[:s] + "p" + idx[s + 1 :]
        out -= np.einsum(f"npm{idx[s]},n{src}->nm{idx}", G, t)
    return out


def rough_laplacian(t: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    d2 = covariant_derivative(covariant_derivative(t, bundle), bundle)
    return np.einsum("nab,nab...->n...", bundle.ginv, d2)


def divergence(V: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    """g^ij nabla_i V_j... contracted on the first slot of V."""
    return np.einsum("nab,nab...->n...", bundle.ginv, covariant_derivative(V, bundle))


def integrate(f: np.ndarray, vol_density: np.ndarray, spec: GridSpec) -> float:
    w = spec.h**spec.k * (2.0 * np.pi) ** (spec.ambient_dim - spec.k)
    return float(np.sum(f * vol_density) * w)


def ricci_identity_field(S: np.ndarray, bundle: CurvatureBundle) -> np.ndarray:
    """[nabla_i, nabla_j] S_kl + R_ijk^m S_ml + R_ijl^m S_km for a 2-tensor S.

    Coordinate components; this is the convention pin for Rup.
    """
    d2 = covariant_derivative(covariant_derivative(S, bundle), bundle)  # d2[:, i, j, k, l]
    comm = d2 - np.swapaxes(d2, 1, 2)
    R = bundle.Rup
    return comm + np.einsum("nijkm,nml->nijkl", R, S) + np.einsum("nijlm,nkm->nijkl", R, S)


def ricci_identity_residual(S: np.ndarray, bundle: CurvatureBundle) -> float:
    return float(np.max(np.abs(ricci_identity_field(S, bundle))))
