"""Small dense tensors with index range 7 or 8.

Everything else in the package works on numpy arrays whose trailing axes are
tensor slots; DenseTensor is the checked, single-point wrapper used at the
public boundary and in the identity suites.
"""

from dataclasses import dataclass
from itertools import permutations
from math import factorial

import numpy as np

from .errors import DimensionMismatch, SlotError


def perm_sign(p) -> int:
    """Sign of a permutation given as a sequence of distinct integers."""
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class DenseTensor:
    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=np.float64)
        if c.ndim > 0:
            dim = c.shape[0]
            if dim not in (7, 8) or any(s != dim for s in c.shape):
                raise DimensionMismatch(f"bad tensor shape {c.shape}")
        object.__setattr__(self, "components", c)

    @property
    def rank(self) -> int:
        return self.components.ndim

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.rank else 0

    @classmethod
    def from_flat(cls, flat, dim: int, rank: int) -> "DenseTensor":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != dim**rank:
            raise DimensionMismatch(f"expected {dim**rank} components, got {flat.size}")
        return cls(flat.reshape((dim,) * rank))

    def flat(self) -> np.ndarray:
        return self.components.reshape(-1)

    def _coerce(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        if other.components.shape != self.components.shape:
            raise DimensionMismatch(f"{self.components.shape} vs {other.components.shape}")
        return other.components

    def __add__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else DenseTensor(self.components + c)

    def __sub__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else DenseTensor(self.components - c)

    def __mul__(self, s):
        return DenseTensor(self.components * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return DenseTensor(-self.components)

    def __eq__(self, other):
        return isinstance(other, DenseTensor) and np.array_equal(self.components, other.components)

    def allclose(self, other, atol=0.0, rtol=0.0) -> bool:
        return np.allclose(self.components, other.components, atol=atol, rtol=rtol)


def delta(dim: int = 7) -> DenseTensor:
    return DenseTensor(np.eye(dim))


def zeros(rank: int, dim: int = 7) -> DenseTensor:
    return DenseTensor(np.zeros((dim,) * rank))


def contract(a: DenseTensor, b: DenseTensor, pairs) -> DenseTensor:
    """Sum over the paired slots (slot of a, slot of b).

    Free slots of a come first, then free slots of b, each in original order.
    """
    pairs = list(pairs)
    sa = [p[0] for p in pairs]
    sb = [p[1] for p in pairs]
    for slots, t in ((sa, a), (sb, b)):
        if len(set(slots)) != len(slots) or any(s < 0 or s >= t.rank for s in slots):
            raise SlotError(f"bad slots {slots} for rank {t.rank}")
    if pairs and a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim}")
    la = list(range(a.rank))
    lb = list(range(a.rank, a.rank + b.rank))
    for i, j in pairs:
        lb[j] = la[i]
    out = [la[i] for i in range(a.rank) if i not in sa] + [lb[j] for j in range(b.rank) if j not in sb]
    return DenseTensor(np.einsum(a.components, la, b.components, lb, out))


def _check_slots(a: DenseTensor, slots):
    slots = list(range(a.rank)) if slots is None else list(slots)
    if len(set(slots)) != len(slots) or any(s < 0 or s >= a.rank for s in slots):
        raise SlotError(f"bad slots {slots} for rank {a.rank}")
    return slots


def _average(a: DenseTensor, slots, signed: bool) -> DenseTensor:
    slots = _check_slots(a, slots)
    c = a.components
    acc = np.zeros_like(c)
    for p in permutations(range(len(slots))):
        axes = list(range(a.rank))
        for k, q in enumerate(p):
            axes[slots[k]] = slots[q]
        term = np.transpose(c, axes)
        acc += perm_sign(p) * term if signed else term
    return DenseTensor(acc / factorial(len(slots)))


def antisymmetrize(a: DenseTensor, slots=None) -> DenseTensor:
    return _average(a, slots, signed=True)


def symmetrize(a: DenseTensor, slots=None) -> DenseTensor:
    return _average(a, slots, signed=False)
