"""Batched orthonormal frames.

All identities with explicit Kronecker deltas are evaluated in an orthonormal
frame. A frame is stored as a matrix P with g = P P^T; frame components of a
covariant tensor are t_{a..} = Q_{ai} .. t_{i..} with Q = P^{-1}, and P maps
them back.
"""

import numpy as np

from .errors import NonPositiveDefinite

_LETTERS = "abcdefgh"
_COORD = "ijklmopq"


def _transform(M: np.ndarray, t: np.ndarray, rank: int) -> np.ndarray:
    if rank == 0:
        return t
    ops = []
    subs = []
    for s in range(rank):
        ops.append(M)
        subs.append("n" + _LETTERS[s] + _COORD[s])
    expr = ",".join(subs) + ",n" + _COORD[:rank] + "->n" + _LETTERS[:rank]
    return np.einsum(expr, *ops, t, optimize=True)


class Frame:
    def __init__(self, P: np.ndarray, Q: np.ndarray | None = None):
        self.P = P
        self.Q = np.linalg.inv(P) if Q is None else Q

    @classmethod
    def from_metric(cls, g: np.ndarray, min_eig: float = 1e-10) -> "Frame":
        """Cholesky frame of a batch of metrics with shape (n, d, d)."""
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        ev = np.linalg.eigvalsh(g)
        if not np.all(ev[..., 0] > min_eig):
            bad = int(np.argmin(ev[..., 0]))
            raise NonPositiveDefinite(f"metric eigenvalue {ev[bad, 0]:.3e} at grid point {bad}")
        return cls(np.linalg.cholesky(g))

    def to_frame(self, t: np.ndarray, rank: int) -> np.ndarray:
        return _transform(self.Q, t, rank)

    def to_coord(self, t: np.ndarray, rank: int) -> np.ndarray:
        return _transform(self.P, t, rank)
