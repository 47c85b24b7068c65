"""Dense small-tensor arithmetic with explicit index variance.

Every repeated index pair in the chart formulas is a metric contraction;
this module makes that convention executable: slots carry an upper/lower
flag, raising and lowering route through the metric, and contractions insert
g or its inverse automatically whenever paired variances match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

UPPER = "u"
LOWER = "l"

_EINSUM_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class NotPositiveDefiniteError(ArithmeticError):
    """Symmetric input failed its Cholesky factorization."""

    def __init__(self, message: str, minor: int | None = None):
        super().__init__(message)
        self.minor = minor


def invert_spd(g: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse and sqrt-determinant of an SPD matrix via Cholesky.

    Raises :class:`NotPositiveDefiniteError` carrying the index of the
    offending leading minor when the factorization fails.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(g).max()))):
        raise ValueError("matrix is not symmetric")
    try:
        chol = scipy.linalg.cholesky(g, lower=True)
    except scipy.linalg.LinAlgError as err:
        m = re.match(r"(\d+)", str(err))
        minor = int(m.group(1)) if m else None
        raise NotPositiveDefiniteError(
            f"not positive definite (leading minor {minor})", minor) from err
    sqrt_det = float(np.prod(np.diag(chol)))
    g_inv = scipy.linalg.cho_solve((chol, True), np.eye(g.shape[0]))
    g_inv = 0.5 * (g_inv + g_inv.T)
    return g_inv, sqrt_det


@dataclass(frozen=True)
class MetricPoint:
    """Metric, inverse and volume density at one chart point."""

    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: float

    @classmethod
    def from_matrix(cls, g: np.ndarray) -> "MetricPoint":
        g = np.asarray(g, dtype=float)
        g_inv, sqrt_det = invert_spd(g)
        return cls(g=g, g_inv=g_inv, sqrt_det=sqrt_det)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class DenseTensor:
    """Row-major dense tensor with one upper/lower flag per slot."""

    values: np.ndarray
    variance: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != len(self.variance):
            raise ValueError(
                f"rank {values.ndim} tensor needs {values.ndim} variance flags, "
                f"got {len(self.variance)}")
        if any(f not in (UPPER, LOWER) for f in self.variance):
            raise ValueError(f"variance flags must be 'u' or 'l': {self.variance}")
        if values.ndim and len(set(values.shape)) > 1:
            raise ValueError(f"all slots must share one dimension, got {values.shape}")

    @property
    def rank(self) -> int:
        return self.values.ndim

    @property
    def dim(self) -> int:
        return self.values.shape[0] if self.rank else 0


def raise_index(t: DenseTensor, slot: int, m: MetricPoint) -> DenseTensor:
    """Contract a lower slot with the inverse metric."""
    return _move_index(t, slot, m, to=UPPER)


def lower_index(t: DenseTensor, slot: int, m: MetricPoint) -> DenseTensor:
    """Contract an upper slot with the metric."""
    return _move_index(t, slot, m, to=LOWER)


def _move_index(t: DenseTensor, slot: int, m: MetricPoint, to: str) -> DenseTensor:
    if not 0 <= slot < t.rank:
        raise ValueError(f"slot {slot} out of range for rank {t.rank}")
    want = LOWER if to == UPPER else UPPER
    if t.variance[slot] != want:
        raise ValueError(f"slot {slot} is already {t.variance[slot]!r}")
    mat = m.g_inv if to == UPPER else m.g
    values = np.tensordot(mat, t.values, axes=([1], [slot]))
    values = np.moveaxis(values, 0, slot)
    variance = tuple(to if i == slot else f for i, f in enumerate(t.variance))
    return DenseTensor(values, variance)


def contract(a: DenseTensor, b: DenseTensor,
             pairs: Sequence[tuple[int, int]],
             m: MetricPoint | None = None) -> DenseTensor:
    """Contract slot pairs (slot_of_a, slot_of_b).

    Pairs with opposite variance contract directly; pairs with matching
    variance are metric contractions and require ``m``.
    """
    if a.dim and b.dim and a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    for sa, sb in pairs:
        if a.variance[sa] == b.variance[sb]:
            if m is None:
                raise ValueError(
                    f"slots ({sa},{sb}) share variance {a.variance[sa]!r}; "
                    "metric contraction needs a MetricPoint")
            b = _move_index(b, sb, m,
                            to=UPPER if b.variance[sb] == LOWER else LOWER)
    a_sub = list(_EINSUM_LETTERS[:a.rank])
    b_sub = list(_EINSUM_LETTERS[a.rank:a.rank + b.rank])
    for sa, sb in pairs:
        b_sub[sb] = a_sub[sa]
    out_a = [c for i, c in enumerate(a_sub) if i not in {sa for sa, _ in pairs}]
    out_b = [c for i, c in enumerate(b_sub) if i not in {sb for _, sb in pairs}]
    spec = f"{''.join(a_sub)},{''.join(b_sub)}->{''.join(out_a + out_b)}"
    values = np.einsum(spec, a.values, b.values)
    var_a = [f for i, f in enumerate(a.variance) if i not in {sa for sa, _ in pairs}]
    var_b = [f for i, f in enumerate(b.variance) if i not in {sb for _, sb in pairs}]
    return DenseTensor(values, tuple(var_a + var_b))


def full_raise(t: DenseTensor, m: MetricPoint) -> DenseTensor:
    out = t
    for slot, f in enumerate(t.variance):
        if f == LOWER:
            out = raise_index(out, slot, m)
    return out


def norm_sq(t: DenseTensor, m: MetricPoint) -> float:
    """Squared metric norm: every slot of t contracted against a copy."""
    if t.rank == 0:
        return float(t.values) ** 2
    other = full_raise(t, m)
    lowered = t
    for slot, f in enumerate(t.variance):
        if f == UPPER:
            lowered = lower_index(lowered, slot, m)
    return float(np.sum(lowered.values * other.values))


def sharp(alpha: DenseTensor, m: MetricPoint) -> DenseTensor:
    """Musical isomorphism: the vector field metrically dual to a 1-form."""
    if alpha.rank != 1 or alpha.variance != (LOWER,):
        raise ValueError("sharp expects a rank-1 lower tensor")
    return raise_index(alpha, 0, m)
