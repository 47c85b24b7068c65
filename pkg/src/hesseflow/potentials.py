"""Potential fields: parsed expressions and built-in convex families.

A :class:`PotentialField` pairs an expression tree with a chart-domain
predicate and evaluates truncated Taylor jets at chart points.  Positive
definiteness of the Hessian is *not* checked here; chart domains are open
and unbounded, so the check happens lazily wherever a metric is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import expressions as ex
from .expressions import DomainError, Expression
from .jets import Jet, TaylorPoly, eval_taylor, seed_point

K_MAX = 5  # highest jet order any in-scope formula consumes


@dataclass(frozen=True)
class PotentialField:
    """A smooth potential on an affine chart, evaluable to jets."""

    dim: int
    expr: Expression
    name: str = "potential"
    domain: Callable[[np.ndarray], bool] | None = None
    k_max: int = K_MAX
    coefficient: float = 1.0  # overall scale of the potential (scales g)
    params: dict = field(default_factory=dict)

    def contains(self, x: Sequence[float]) -> bool:
        if self.domain is None:
            return True
        return bool(self.domain(np.asarray(x, dtype=float)))

    def taylor(self, x: Sequence[float], order: int) -> TaylorPoly:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        if order < 0 or order > self.k_max:
            raise ValueError(f"jet order {order} outside [0, {self.k_max}]")
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} outside the domain of {self.name}")
        poly = eval_taylor(self.expr, seed_point(x, order))
        if self.coefficient != 1.0:
            poly = poly * self.coefficient
        return poly

    def jet(self, x: Sequence[float], order: int) -> Jet:
        return self.taylor(x, order).jet()

    def scaled(self, c: float) -> "PotentialField":
        """The potential c*phi, whose Hessian metric is c*g."""
        if c <= 0:
            raise ValueError("scale factor must be positive to keep g definite")
        return replace(self, coefficient=self.coefficient * c,
                       name=f"{self.name}*{c:g}")

    def source(self) -> str:
        return ex.to_source(self.expr)


def from_expression(source: str, dim: int, name: str | None = None) -> PotentialField:
    """Field backed by a parsed expression; domain is expression-defined."""
    expr = ex.parse_potential(source, dim)
    return PotentialField(dim=dim, expr=expr, name=name or f"expr({source})")


# -- built-in families --------------------------------------------------------


def _var(i: int) -> Expression:
    return ex.Var(i)


def _num(v: float) -> Expression:
    return ex.Num(float(v))


def _add(*nodes: Expression) -> Expression:
    acc = nodes[0]
    for node in nodes[1:]:
        acc = ex.BinOp("+", acc, node)
    return acc


def _mul(*nodes: Expression) -> Expression:
    acc = nodes[0]
    for node in nodes[1:]:
        acc = ex.BinOp("*", acc, node)
    return acc


def _sq(node: Expression) -> Expression:
    return ex.BinOp("^", node, _num(2))


def quadratic(dim: int) -> PotentialField:
    """phi = |x|^2 / 2; the flat, non-proper reference field."""
    expr = _add(*[ex.BinOp("/", _sq(_var(i)), _num(2)) for i in range(1, dim + 1)])
    return PotentialField(dim=dim, expr=expr, name=f"quadratic(n={dim})",
                          params={"n": dim})


def log_cone(dim: int) -> PotentialField:
    """phi = -log(xn^2 - sum of the other squares) on the forward cone."""
    if dim < 2:
        raise ValueError("log_cone needs dimension >= 2")
    inner = ex.BinOp("-", _sq(_var(dim)), _add(*[_sq(_var(i)) for i in range(1, dim)])) \
        if dim > 2 else ex.BinOp("-", _sq(_var(2)), _sq(_var(1)))
    expr = ex.Neg(ex.Call("log", inner))

    def domain(x: np.ndarray) -> bool:
        return x[-1] > float(np.linalg.norm(x[:-1]))

    return PotentialField(dim=dim, expr=expr, name=f"log_cone(n={dim})",
                          domain=domain, params={"n": dim})


def torus_perturbed(dim: int, eps: float, freqs: Sequence[int]) -> PotentialField:
    """phi = |x|^2/2 + eps * prod(sin(f_i x_i)); periodic Hessian perturbation.

    The perturbation Hessian is bounded by eps * sum(f_i^2) in spectral norm,
    so |eps| < 1 / sum(f_i^2) keeps g positive definite everywhere.
    """
    freqs = tuple(int(f) for f in freqs)
    if len(freqs) != dim:
        raise ValueError(f"need {dim} frequencies, got {len(freqs)}")
    bound = 1.0 / sum(f * f for f in freqs)
    if abs(eps) >= bound:
        raise ValueError(
            f"|eps|={abs(eps)} >= positive-definiteness bound {bound:g} "
            f"for frequencies {freqs}")
    quad = _add(*[ex.BinOp("/", _sq(_var(i)), _num(2)) for i in range(1, dim + 1)])
    waves = _mul(*[ex.Call("sin", _mul(_num(f), _var(i + 1)) if f != 1 else _var(i + 1))
                   for i, f in enumerate(freqs)])
    expr = ex.BinOp("+", quad, _mul(_num(eps), waves))
    return PotentialField(dim=dim, expr=expr,
                          name=f"torus_perturbed(n={dim},eps={eps:g},freqs={freqs})",
                          params={"n": dim, "eps": eps, "freqs": freqs})


def multinomial_logpartition(outcomes: int) -> PotentialField:
    """log(1 + sum exp(theta_i)) over outcomes-1 natural parameters."""
    if outcomes < 2:
        raise ValueError("need at least 2 outcomes (parameter dimension >= 1)")
    dim = outcomes - 1
    expr = ex.Call("log", _add(_num(1), *[ex.Call("exp", _var(i))
                                          for i in range(1, dim + 1)]))
    return PotentialField(dim=dim, expr=expr,
                          name=f"multinomial_logpartition(outcomes={outcomes})",
                          params={"outcomes": outcomes})


FAMILY_NAMES = ("quadratic", "log_cone", "torus_perturbed", "multinomial_logpartition")


def builtin_family(name: str, **params) -> PotentialField:
    """Construct a built-in family by name (manifest entry point)."""
    if name == "quadratic":
        return quadratic(int(params["n"]))
    if name == "log_cone":
        return log_cone(int(params["n"]))
    if name == "torus_perturbed":
        return torus_perturbed(int(params["n"]), float(params["eps"]),
                               params["freqs"])
    if name == "multinomial_logpartition":
        return multinomial_logpartition(int(params["outcomes"]))
    raise ValueError(f"unknown family {name!r}; known: {', '.join(FAMILY_NAMES)}")


def sample_points(field: PotentialField, rng: np.random.Generator,
                  count: int, box: Sequence[tuple[float, float]]) -> np.ndarray:
    """Uniform samples from the box, rejecting points outside the domain."""
    if count < 1:
        raise ValueError("need at least one sample")
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if lo.shape != (field.dim,):
        raise ValueError(f"box must have {field.dim} axis ranges")
    out = []
    tries = 0
    while len(out) < count:
        x = lo + (hi - lo) * rng.random(field.dim)
        tries += 1
        if field.contains(x):
            out.append(x)
        if tries > 1000 * count:
            raise DomainError(
                f"box {list(map(tuple, zip(lo, hi)))} rarely intersects the "
                f"domain of {field.name}")
    return np.array(out)
