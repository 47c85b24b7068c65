"""Truncated multivariate Taylor (jet) arithmetic.

A :class:`TaylorPoly` holds Taylor-normalized coefficients (partial derivative
divided by the multi-index factorial) for every multi-index of total degree
up to ``order``; all arithmetic truncates at that degree.  Pushing seeded
variables through an expression tree therefore yields exact partial
derivatives, with no finite differencing anywhere.

A :class:`Jet` is the user-facing derivative table.  It stores *raw*
derivative values (no factorial normalization), one entry per multi-index,
so downstream tensor formulas read exactly like their blackboard form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .expressions import Call, DomainError, Expression, Neg, Num, Var

MultiIndex = tuple[int, ...]


@lru_cache(maxsize=None)
def multi_indices(dim: int, order: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length ``dim`` with total degree <= ``order``."""
    out: list[MultiIndex] = []

    def rec(prefix: list[int], slots: int, budget: int) -> None:
        if slots == 0:
            out.append(tuple(prefix))
            return
        for k in range(budget + 1):
            prefix.append(k)
            rec(prefix, slots - 1, budget - k)
            prefix.pop()

    rec([], dim, order)
    out.sort(key=lambda m: (sum(m), m))
    return tuple(out)


@lru_cache(maxsize=None)
def _factorial_product(m: MultiIndex) -> float:
    p = 1
    for k in m:
        p *= math.factorial(k)
    return float(p)


class TaylorPoly:
    """Sparse truncated Taylor polynomial; immutable by convention."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs: dict[MultiIndex, float] | None = None):
        self.dim = dim
        self.order = order
        self.coeffs = coeffs if coeffs is not None else {}

    @classmethod
    def constant(cls, dim: int, order: int, value: float) -> "TaylorPoly":
        c = {(0,) * dim: float(value)} if value != 0.0 else {}
        return cls(dim, order, c)

    @classmethod
    def variable(cls, dim: int, order: int, index: int, value: float) -> "TaylorPoly":
        """Seed for coordinate ``index`` (0-based) at base value ``value``."""
        c: dict[MultiIndex, float] = {}
        if value != 0.0:
            c[(0,) * dim] = float(value)
        if order >= 1:
            unit = tuple(1 if i == index else 0 for i in range(dim))
            c[unit] = 1.0
        return cls(dim, order, c)

    # -- basic ring operations ------------------------------------------

    def _lift(self, other) -> "TaylorPoly":
        if isinstance(other, TaylorPoly):
            return other
        return TaylorPoly.constant(self.dim, self.order, float(other))

    @property
    def value(self) -> float:
        return self.coeffs.get((0,) * self.dim, 0.0)

    def __add__(self, other) -> "TaylorPoly":
        other = self._lift(other)
        order = min(self.order, other.order)
        c = {m: v for m, v in self.coeffs.items() if sum(m) <= order}
        for m, v in other.coeffs.items():
            if sum(m) <= order:
                c[m] = c.get(m, 0.0) + v
        return TaylorPoly(self.dim, order, c)

    __radd__ = __add__

    def __neg__(self) -> "TaylorPoly":
        return TaylorPoly(self.dim, self.order, {m: -v for m, v in self.coeffs.items()})

    def __sub__(self, other) -> "TaylorPoly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "TaylorPoly":
        return self._lift(other) + (-self)

    def __mul__(self, other) -> "TaylorPoly":
        if not isinstance(other, TaylorPoly):
            f = float(other)
            return TaylorPoly(self.dim, self.order,
                              {m: v * f for m, v in self.coeffs.items()})
        order = min(self.order, other.order)
        a = [(m, sum(m), v) for m, v in self.coeffs.items() if sum(m) <= order]
        b = [(m, sum(m), v) for m, v in other.coeffs.items() if sum(m) <= order]
        c: dict[MultiIndex, float] = {}
        for ma, da, va in a:
            for mb, db, vb in b:
                if da + db > order:
                    continue
                key = tuple(x + y for x, y in zip(ma, mb))
                c[key] = c.get(key, 0.0) + va * vb
        return TaylorPoly(self.dim, order, c)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "TaylorPoly":
        if not isinstance(other, TaylorPoly):
            f = float(other)
            if f == 0.0:
                raise DomainError("division by zero")
            return self * (1.0 / f)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "TaylorPoly":
        return self._lift(other) * self.reciprocal()

    # -- analytic composition --------------------------------------------

    def _compose(self, derivs: Sequence[float]) -> "TaylorPoly":
        """Apply a univariate analytic f via f(c0 + w) = sum f^(j)(c0)/j! w^j.

        ``derivs[j]`` must be f^(j) at this poly's constant term.  Exact
        because w is nilpotent at the truncation order.
        """
        zero = (0,) * self.dim
        w = TaylorPoly(self.dim, self.order,
                       {m: v for m, v in self.coeffs.items() if m != zero})
        acc = TaylorPoly.constant(self.dim, self.order,
                                  derivs[self.order] / math.factorial(self.order))
        for j in range(self.order - 1, -1, -1):
            acc = acc * w + (derivs[j] / math.factorial(j))
        return acc

    def reciprocal(self) -> "TaylorPoly":
        c0 = self.value
        if c0 == 0.0:
            raise DomainError("division by a jet with zero value")
        derivs = [(-1.0) ** j * math.factorial(j) / c0 ** (j + 1)
                  for j in range(self.order + 1)]
        return self._compose(derivs)

    def log(self) -> "TaylorPoly":
        c0 = self.value
        if c0 <= 0.0:
            raise DomainError("log of non-positive argument")
        derivs = [math.log(c0)]
        derivs += [(-1.0) ** (j - 1) * math.factorial(j - 1) / c0 ** j
                   for j in range(1, self.order + 1)]
        return self._compose(derivs)

    def exp(self) -> "TaylorPoly":
        e = math.exp(self.value)
        return self._compose([e] * (self.order + 1))

    def sqrt(self) -> "TaylorPoly":
        c0 = self.value
        if c0 <= 0.0:
            raise DomainError("sqrt of non-positive argument")
        derivs = []
        coef = 1.0
        for j in range(self.order + 1):
            derivs.append(coef * c0 ** (0.5 - j))
            coef *= 0.5 - j
        return self._compose(derivs)

    def sin(self) -> "TaylorPoly":
        c0 = self.value
        cycle = [math.sin(c0), math.cos(c0), -math.sin(c0), -math.cos(c0)]
        return self._compose([cycle[j % 4] for j in range(self.order + 1)])

    def cos(self) -> "TaylorPoly":
        c0 = self.value
        cycle = [math.cos(c0), -math.sin(c0), -math.cos(c0), math.sin(c0)]
        return self._compose([cycle[j % 4] for j in range(self.order + 1)])

    def powi(self, k: int) -> "TaylorPoly":
        if k < 0:
            return self.reciprocal().powi(-k)
        result = TaylorPoly.constant(self.dim, self.order, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def powr(self, r: float) -> "TaylorPoly":
        c0 = self.value
        if c0 <= 0.0:
            raise DomainError("real exponent requires positive base")
        derivs = []
        coef = 1.0
        for j in range(self.order + 1):
            derivs.append(coef * c0 ** (r - j))
            coef *= r - j
        return self._compose(derivs)

    def __pow__(self, e) -> "TaylorPoly":
        if isinstance(e, TaylorPoly):
            raise TypeError("jet-valued exponents go through eval_taylor")
        ef = float(e)
        if ef == int(ef) and abs(ef) <= 1024:
            return self.powi(int(ef))
        return self.powr(ef)

    # -- calculus ---------------------------------------------------------

    def derivative(self, axis: int) -> "TaylorPoly":
        """Partial derivative; the result order drops by one."""
        if self.order == 0:
            return TaylorPoly(self.dim, 0, {})
        c: dict[MultiIndex, float] = {}
        for m, v in self.coeffs.items():
            k = m[axis]
            if k == 0:
                continue
            key = tuple(x - (1 if i == axis else 0) for i, x in enumerate(m))
            if sum(key) <= self.order - 1:
                c[key] = v * k
        return TaylorPoly(self.dim, self.order - 1, c)

    def truncated(self, order: int) -> "TaylorPoly":
        if order >= self.order:
            return self
        return TaylorPoly(self.dim, order,
                          {m: v for m, v in self.coeffs.items() if sum(m) <= order})

    def jet(self) -> "Jet":
        table = {m: self.coeffs.get(m, 0.0) * _factorial_product(m)
                 for m in multi_indices(self.dim, self.order)}
        return Jet(self.dim, self.order, table)


def seed_point(x: Sequence[float], order: int) -> list[TaylorPoly]:
    """Coordinate seeds for evaluating expressions at the chart point x."""
    dim = len(x)
    return [TaylorPoly.variable(dim, order, i, float(x[i])) for i in range(dim)]


_TAYLOR_FUNCS: Mapping[str, Callable[[TaylorPoly], TaylorPoly]] = {
    "log": TaylorPoly.log,
    "exp": TaylorPoly.exp,
    "sqrt": TaylorPoly.sqrt,
    "sin": TaylorPoly.sin,
    "cos": TaylorPoly.cos,
}


def eval_taylor(node: Expression, seeds: Sequence[TaylorPoly]) -> TaylorPoly:
    """Evaluate an expression tree on seeded Taylor polynomials."""
    if isinstance(node, Num):
        return TaylorPoly.constant(seeds[0].dim, seeds[0].order, node.value)
    if isinstance(node, Var):
        return seeds[node.index - 1]
    if isinstance(node, Neg):
        return -eval_taylor(node.operand, seeds)
    if isinstance(node, Call):
        return _TAYLOR_FUNCS[node.func](eval_taylor(node.arg, seeds))
    left = eval_taylor(node.left, seeds)
    right = eval_taylor(node.right, seeds)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    # '^' with a constant exponent is a power; anything else needs exp/log
    zero = (0,) * right.dim
    if all(m == zero for m in right.coeffs):
        return left ** right.value
    return (right * left.log()).exp()


@dataclass(frozen=True)
class Jet:
    """Raw partial derivatives of a scalar function at one point.

    ``coeffs[m]`` is the derivative with multiplicity ``m`` per coordinate;
    the table covers exactly the multi-indices with total degree <= order,
    one entry per multi-index (derivative symmetry is implicit).
    """

    dim: int
    order: int
    coeffs: Mapping[MultiIndex, float]

    @property
    def value(self) -> float:
        return self.coeffs[(0,) * self.dim]

    def partial(self, m: MultiIndex) -> float:
        return self.coeffs[tuple(m)]

    def tensor(self, rank: int) -> np.ndarray:
        """Dense symmetric derivative tensor of the given rank.

        Symmetric slots are filled from the single stored entry, so the
        returned array is symmetric bit-exactly.
        """
        if rank > self.order:
            raise ValueError(f"jet order {self.order} has no rank-{rank} data")
        if rank == 0:
            return np.array(self.value)
        out = np.empty((self.dim,) * rank)
        for idx in np.ndindex(*out.shape):
            m = [0] * self.dim
            for i in idx:
                m[i] += 1
            out[idx] = self.coeffs[tuple(m)]
        return out

    def gradient(self) -> np.ndarray:
        return self.tensor(1)

    def hessian(self) -> np.ndarray:
        return self.tensor(2)
