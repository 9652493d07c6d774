"""Reproducible smooth test fields on reduced tori."""

import numpy as np
from scipy.linalg import expm

from .g2algebra import PHI0
from .geometry import GridSpec


def trig_matrices(spec: GridSpec, rng: np.random.Generator, shape) -> np.ndarray:
    """sum over active a of B_a sin x^a + C_a cos x^a with standard normal B, C."""
    x = spec.coords()
    out = np.zeros((spec.npts,) + tuple(shape))
    expand = (slice(None),) + (None,) * len(shape)
    for a in range(spec.k):
        B = rng.standard_normal(shape)
        C = rng.standard_normal(shape)
        out += np.sin(x[:, a])[expand] * B + np.cos(x[:, a])[expand] * C
    return out


def frame_field(spec: GridSpec, epsilon: float = 0.05, seed: int = 0) -> np.ndarray:
    """Frames e(x) = exp(epsilon A(x)), shape (npts, d, d)."""
    rng = np.random.default_rng(seed)
    d = spec.ambient_dim
    A = trig_matrices(spec, rng, (d, d))
    return expm(epsilon * A)


def phi_from_frame(e: np.ndarray) -> np.ndarray:
    return np.einsum("nia,njb,nkc,abc->nijk", e, e, e, PHI0, optimize=True)


def flat_phi(spec: GridSpec, scale: float = 1.0) -> np.ndarray:
    return np.broadcast_to(scale * PHI0, (spec.npts, 7, 7, 7)).copy()


def frame_phi(spec: GridSpec, epsilon: float = 0.05, seed: int = 0) -> np.ndarray:
    return phi_from_frame(frame_field(spec, epsilon, seed))


def smooth_field(spec: GridSpec, rank: int, seed: int = 0, amplitude: float = 1.0) -> np.ndarray:
    """Random trigonometric tensor field with first and second harmonics."""
    rng = np.random.default_rng(seed)
    shape = (spec.ambient_dim,) * rank
    x = spec.coords()
    out = amplitude * trig_matrices(spec, rng, shape)
    expand = (slice(None),) + (None,) * rank
    for a in range(spec.k):
        out += 0.5 * amplitude * np.sin(2 * x[:, a] + 0.3)[expand] * rng.standard_normal(shape)
    return out


def warped_metric(spec: GridSpec, amplitude: float = 0.1) -> np.ndarray:
    """g = dx0^2 + (1 + a sin x0)^2 dx1^2 + flat rest; Ric_00 = -f''/f, Ric_11 = -f f''."""
    d = spec.ambient_dim
    x = spec.coords()[:, 0]
    g = np.broadcast_to(np.eye(d), (spec.npts, d, d)).copy()
    g[:, 1, 1] = (1.0 + amplitude * np.sin(x)) ** 2
    return g
