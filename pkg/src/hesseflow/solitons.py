"""Soliton and Einstein analysis for Hessian structures.

Candidate solitons pair a vector field (or a scalar potential) with a
constant; the residual of the defining equation is evaluated pointwise on
chart samples.  The dual-space construction shifts the vector field by twice
the metric dual of the first Koszul form and swaps in the dual second form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expressions as ex
from .expressions import Expression
from .jets import eval_taylor, seed_point
from .potentials import PotentialField
from .structure import StructurePoint, half_logdet_poly, structure_at

FD_STEP_SCALE = 1e-4  # Richardson stencil width, times the point scale


@dataclass(frozen=True)
class SolitonSpec:
    """A candidate self-similar structure: X (or f) plus the constant."""

    kind: str  # "vector" | "gradient"
    lam: float
    x_exprs: tuple[Expression, ...] | None = None
    f_expr: Expression | None = None

    def __post_init__(self):
        if self.kind not in ("vector", "gradient"):
            raise ValueError(f"kind must be 'vector' or 'gradient', got {self.kind!r}")
        if self.kind == "vector" and (self.x_exprs is None or self.f_expr is not None):
            raise ValueError("vector specs carry exactly the component expressions")
        if self.kind == "gradient" and (self.f_expr is None or self.x_exprs is not None):
            raise ValueError("gradient specs carry exactly the scalar potential")

    @property
    def classification(self) -> str:
        if self.lam > 0:
            return "expanding"
        if self.lam < 0:
            return "shrinking"
        return "steady"

    @classmethod
    def vector(cls, sources: Sequence[str], lam: float, dim: int) -> "SolitonSpec":
        exprs = tuple(ex.parse_potential(s, dim) for s in sources)
        if len(exprs) != dim:
            raise ValueError(f"need {dim} component expressions, got {len(exprs)}")
        return cls(kind="vector", lam=float(lam), x_exprs=exprs)

    @classmethod
    def gradient(cls, source: str, lam: float, dim: int) -> "SolitonSpec":
        return cls(kind="gradient", lam=float(lam),
                   f_expr=ex.parse_potential(source, dim))


# -- differentiable vector fields ---------------------------------------------


class ExpressionVectorField:
    """Vector field with exact value and Jacobian from component jets."""

    def __init__(self, exprs: Sequence[Expression], dim: int):
        self.exprs = tuple(exprs)
        self.dim = dim

    def value(self, x: np.ndarray) -> np.ndarray:
        seeds = seed_point(np.asarray(x, dtype=float), 0)
        return np.array([eval_taylor(e, seeds).value for e in self.exprs])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """jac[k, i] = partial_i X^k."""
        seeds = seed_point(np.asarray(x, dtype=float), 1)
        return np.array([eval_taylor(e, seeds).jet().gradient() for e in self.exprs])


class NumericVectorField:
    """Differentiable wrapper around a pointwise evaluator.

    The Jacobian comes from a 5-point central stencil (one Richardson level)
    of width FD_STEP_SCALE times the point scale.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int):
        self.fn = fn
        self.dim = dim

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = FD_STEP_SCALE * max(1.0, float(np.max(np.abs(x))))
        jac = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            jac[:, i] = (-self.value(x + 2 * e) + 8 * self.value(x + e)
                         - 8 * self.value(x - e) + self.value(x - 2 * e)) / (12 * h)
        return jac


def zero_field(dim: int) -> ExpressionVectorField:
    return ExpressionVectorField([ex.Num(0.0)] * dim, dim)


def alpha_sharp_field(field: PotentialField) -> NumericVectorField:
    """The metric dual of the first Koszul form as a differentiable field.

    Values are jet-exact at each probed point; derivatives are recovered by
    the numeric wrapper rather than symbolically.
    """

    def fn(y: np.ndarray) -> np.ndarray:
        sp = structure_at(field, y)
        return sp.g_inv @ sp.alpha

    return NumericVectorField(fn, field.dim)


def vector_field_of(spec: SolitonSpec, field: PotentialField):
    """The spec's vector field; gradient specs yield grad f raised by g."""
    if spec.kind == "vector":
        return ExpressionVectorField(spec.x_exprs, field.dim)

    f_expr = spec.f_expr

    def fn(y: np.ndarray) -> np.ndarray:
        sp = structure_at(field, y)
        seeds = seed_point(y, 1)
        df = eval_taylor(f_expr, seeds).jet().gradient()
        return sp.g_inv @ df

    return NumericVectorField(fn, field.dim)


# -- pointwise operators -------------------------------------------------------


def lie_derivative_metric(sp: StructurePoint, X) -> np.ndarray:
    """Lie derivative of g along X: symmetrized covariant derivative of the
    lowered field, with Christoffel symbols given by the difference tensor."""
    x_val = X.value(sp.x)
    jac = X.jacobian(sp.x)
    # partial_i of the lowered components (g X)_j
    d_lower = (2.0 * np.einsum("jki,k->ji", sp.gamma_lower, x_val)
               + np.einsum("jk,ki->ji", sp.g, jac))
    lower = sp.g @ x_val
    nabla = d_lower.T - np.einsum("kij,k->ij", sp.gamma_mixed, lower)
    return nabla + nabla.T


def hessian_of_function(sp: StructurePoint, f_expr: Expression) -> np.ndarray:
    """Covariant Hessian of a scalar at the structure point."""
    seeds = seed_point(sp.x, 2)
    jet = eval_taylor(f_expr, seeds).jet()
    return jet.hessian() - np.einsum("kij,k->ij", sp.gamma_mixed, jet.gradient())


def divergence(sp: StructurePoint, X) -> float:
    """Metric divergence of a vector field: trace of its covariant derivative."""
    return float(np.trace(X.jacobian(sp.x)) + sp.alpha @ X.value(sp.x))


def soliton_residual(sp: StructurePoint,
                     spec: SolitonSpec) -> tuple[np.ndarray, float]:
    """Residual tensor of the soliton equation at one point, and its sup norm."""
    if spec.kind == "gradient":
        tensor = sp.beta - hessian_of_function(sp, spec.f_expr) - spec.lam * sp.g
    else:
        X = ExpressionVectorField(spec.x_exprs, sp.dim)
        tensor = sp.beta - 0.5 * lie_derivative_metric(sp, X) - spec.lam * sp.g
    return tensor, float(np.max(np.abs(tensor)))


def einstein_fit(field: PotentialField, points) -> tuple[float, float]:
    """Best Einstein constant (per-sample trace ratio) and the worst residual."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1 or points.size == 0:
        raise ValueError("need at least one sample point")
    ratios = []
    sps = []
    for x in points:
        sp = structure_at(field, x)
        sps.append(sp)
        ratios.append(float(np.einsum("ij,ij->", sp.g_inv, sp.beta)) / sp.dim)
    lam_hat = float(np.mean(ratios))
    residual = max(float(np.max(np.abs(sp.beta - lam_hat * sp.g))) for sp in sps)
    return lam_hat, residual


@dataclass(frozen=True)
class DualSolitonResult:
    lam: float
    residual: np.ndarray
    max_residual: float
    description: str


def dual_soliton(sp: StructurePoint, spec: SolitonSpec,
                 field: PotentialField) -> DualSolitonResult:
    """Residual of the dual-space soliton equation with X' = X - 2 alpha-sharp.

    alpha-sharp enters as a differentiable field rebuilt from jets at probed
    points, so the Lie derivative sees honest derivatives.
    """
    sharp = alpha_sharp_field(field)
    primal = vector_field_of(spec, field)

    def x_dual(y: np.ndarray) -> np.ndarray:
        return primal.value(y) - 2.0 * sharp.value(y)

    Xd = NumericVectorField(x_dual, field.dim)
    tensor = sp.beta_dual - 0.5 * lie_derivative_metric(sp, Xd) - spec.lam * sp.g
    return DualSolitonResult(lam=spec.lam, residual=tensor,
                             max_residual=float(np.max(np.abs(tensor))),
                             description="X - 2*alpha_sharp")


def dual_gradient_residual(sp: StructurePoint, spec: SolitonSpec) -> tuple[np.ndarray, float]:
    """Gradient form of the dual soliton: potential f - 2F with dF = alpha.

    F = log sqrt(det g) primitivizes the first Koszul form on any chart, and
    its covariant Hessian is exactly nabla(alpha), so no symbolic F is needed.
    """
    if spec.kind != "gradient":
        raise ValueError("dual gradient residual needs a gradient spec")
    hess_f = hessian_of_function(sp, spec.f_expr)
    tensor = sp.beta_dual - (hess_f - 2.0 * sp.nabla_alpha) - spec.lam * sp.g
    return tensor, float(np.max(np.abs(tensor)))


def lie_alpha_sharp_residual(sp: StructurePoint, field: PotentialField) -> float:
    """Deviation of L_{alpha sharp} g from twice nabla(alpha)."""
    lie = lie_derivative_metric(sp, alpha_sharp_field(field))
    return float(np.max(np.abs(lie - 2.0 * sp.nabla_alpha)))


@dataclass(frozen=True)
class SteadyKillingReport:
    beta_norm: float
    lie_norm: float
    certified: bool


def steady_killing_check(sp: StructurePoint, X,
                         tolerance: float = 1e-8) -> SteadyKillingReport:
    """Certify a steady instance: both beta and the Lie derivative must vanish."""
    beta_norm = float(np.sqrt(max(0.0, np.einsum(
        "ij,ab,ia,jb->", sp.beta, sp.beta, sp.g_inv, sp.g_inv))))
    lie = lie_derivative_metric(sp, X)
    lie_norm = float(np.sqrt(max(0.0, np.einsum(
        "ij,ab,ia,jb->", lie, lie, sp.g_inv, sp.g_inv))))
    return SteadyKillingReport(beta_norm=beta_norm, lie_norm=lie_norm,
                               certified=beta_norm < tolerance and lie_norm < tolerance)


def trace_identity_residual(sp: StructurePoint, spec: SolitonSpec | None = None,
                            field: PotentialField | None = None) -> dict[str, float]:
    """Pointwise trace identities.

    Always returns the Koszul trace residual tr_g(beta) - div(alpha sharp)
    - |alpha|^2; with a spec it adds tr_g(beta) - div X - n*lambda.
    """
    ginv = sp.g_inv
    beta_tr = float(np.einsum("ij,ij->", ginv, sp.beta))
    div_sharp = float(np.einsum("ij,ij->", ginv, sp.nabla_alpha))
    alpha_sq = float(sp.alpha @ ginv @ sp.alpha)
    out = {"koszul_trace": beta_tr - div_sharp - alpha_sq}
    if spec is not None:
        if spec.kind == "vector":
            X = ExpressionVectorField(spec.x_exprs, sp.dim)
        else:
            if field is None:
                raise ValueError("gradient specs need the field for grad f")
            X = vector_field_of(spec, field)
        out["soliton_trace"] = beta_tr - divergence(sp, X) - sp.dim * spec.lam
    return out
