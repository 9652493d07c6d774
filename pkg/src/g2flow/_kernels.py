"""Hot inner loops, with numba and pure-numpy implementations.

Set G2FLOW_JIT=0 to force the numpy path. G2FLOW_THREADS caps the number of
numba worker threads. Both paths produce bitwise-identical results for the
flat Hodge star and the stencil; the metric density differs only in
summation order (agreement at round-off level).
"""

import os
from functools import lru_cache
from itertools import permutations

import numpy as np

from .tensor import perm_sign

# the bundled TBB is too old for numba; OpenMP is always present
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and os.environ.get("G2FLOW_JIT", "1") != "0"

if HAVE_NUMBA and os.environ.get("G2FLOW_THREADS"):
    numba.set_num_threads(max(1, min(int(os.environ["G2FLOW_THREADS"]), numba.config.NUMBA_NUM_THREADS)))


def backend() -> str:
    return "numba" if USE_JIT else "numpy"


@lru_cache(maxsize=None)
def star_table(dim: int, k: int):
    """Index table for the flat Hodge star of alternating k-forms.

    For every ordered (dim-k)-tuple D of distinct indices, the output
    component at D equals sign * input component at the sorted complement.
    Returns flat (src, dst, sign) arrays.
    """
    src, dst, sgn = [], [], []
    for d in permutations(range(dim), dim - k):
        comp = [i for i in range(dim) if i not in d]
        s = perm_sign(comp + list(d))
        src.append(np.ravel_multi_index(comp, (dim,) * k) if k else 0)
        dst.append(np.ravel_multi_index(d, (dim,) * (dim - k)) if dim - k else 0)
        sgn.append(s)
    return np.array(src, np.int64), np.array(dst, np.int64), np.array(sgn, np.float64)


def _star_numpy(forms, src, dst, sgn, out):
    out[:, dst] = forms[:, src] * sgn
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _star_jit(forms, src, dst, sgn, out):
        for p in prange(forms.shape[0]):
            for t in range(src.shape[0]):
                out[p, dst[t]] = sgn[t] * forms[p, src[t]]
        return out

    @njit(cache=True, parallel=True)
    def _density_jit(phi, eta, out):
        # s_ij = 1/4 phi_iab phi_jcd eta_abcd, skipping zero components
        n = phi.shape[0]
        d = phi.shape[1]
        for p in prange(n):
            w = np.zeros((d, d, d))
            for j in range(d):
                for c in range(d):
                    for dd in range(d):
                        f = phi[p, j, c, dd]
                        if f == 0.0:
                            continue
                        for a in range(d):
                            for b in range(d):
                                w[j, a, b] += f * eta[p, a, b, c, dd]
            for i in range(d):
                for j in range(d):
                    acc = 0.0
                    for a in range(d):
                        for b in range(d):
                            acc += phi[p, i, a, b] * w[j, a, b]
                    out[p, i, j] = 0.25 * acc
        return out

    @njit(cache=True, parallel=True)
    def _d1_jit(f, h, out):
        n = f.shape[0]
        c = 1.0 / (12.0 * h)
        for i in prange(n):
            ip1 = (i + 1) % n
            ip2 = (i + 2) % n
            im1 = (i - 1) % n
            im2 = (i - 2) % n
            for m in range(f.shape[1]):
                out[i, m] = c * (-f[ip2, m] + 8.0 * f[ip1, m] - 8.0 * f[im1, m] + f[im2, m])
        return out


def flat_star(forms: np.ndarray, dim: int, k: int) -> np.ndarray:
    """Flat Hodge star (reference orientation e^0..e^{dim-1}) of batched k-forms.

    forms has shape (..., dim, ..., dim) with k trailing slots.
    """
    lead = forms.shape[: forms.ndim - k]
    flat = np.ascontiguousarray(forms.reshape((-1, dim**k)))
    src, dst, sgn = star_table(dim, k)
    out = np.zeros((flat.shape[0], dim ** (dim - k)))
    if USE_JIT:
        _star_jit(flat, src, dst, sgn, out)
    else:
        _star_numpy(flat, src, dst, sgn, out)
    return out.reshape(lead + (dim,) * (dim - k))


def metric_density(phi: np.ndarray) -> np.ndarray:
    """Bilinear density s_ij of a batch of 3-forms in dimension 7.

    s(X, Y) vol_ref equals (X-phi) ^ (Y-phi) ^ phi; for the standard form it
    is +6 times the identity against the reference orientation.
    """
    lead = phi.shape[:-3]
    p = np.ascontiguousarray(phi.reshape((-1, 7, 7, 7)))
    eta = flat_star(p, 7, 3)
    if USE_JIT:
        out = np.empty((p.shape[0], 7, 7))
        _density_jit(p, np.ascontiguousarray(eta), out)
    else:
        w = np.einsum("njcd,nabcd->njab", p, eta)
        out = 0.25 * np.einsum("niab,njab->nij", p, w)
    return out.reshape(lead + (7, 7))


def periodic_d1(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central first derivative along axis 0 of a periodic array."""
    if USE_JIT:
        shape = f.shape
        g = np.ascontiguousarray(f.reshape((shape[0], -1)))
        out = np.empty_like(g)
        _d1_jit(g, h, out)
        return out.reshape(shape)
    c = 1.0 / (12.0 * h)
    return c * (-np.roll(f, -2, 0) + 8.0 * np.roll(f, -1, 0) - 8.0 * np.roll(f, 1, 0) + np.roll(f, 2, 0))
