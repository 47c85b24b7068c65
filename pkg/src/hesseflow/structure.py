"""Hessian-structure tensor inventory at a chart point.

In an affine chart the flat connection has vanishing coefficients, so the
whole inventory reads off the potential jet: g is the Hessian of phi, the
difference tensor is half the third derivative, and the first Koszul form
is the gradient of log sqrt(det g).  Wherever the source theory offers two
routes to the same tensor both are computed and retained, so conventions
are cross-checked numerically instead of trusted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .jets import Jet, TaylorPoly
from .potentials import PotentialField
from .tensors import MetricPoint, NotPositiveDefiniteError, invert_spd

EIGENVALUE_FLOOR = 1e-12  # min eigenvalue must exceed this times trace(g)

DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CheckResult:
    """One verified identity: residual against tolerance, with its anchor."""

    name: str
    anchor: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor,
                "residual": self.residual, "tolerance": self.tolerance,
                "passed": self.passed}


@dataclass(frozen=True)
class StructurePoint:
    """Full tensor inventory of a Hessian structure at one chart point."""

    x: np.ndarray
    jet: Jet
    metric: MetricPoint
    gamma_lower: np.ndarray     # half the third derivative of phi
    gamma_mixed: np.ndarray     # Christoffel symbols of the Levi-Civita connection
    alpha: np.ndarray           # gradient of log sqrt(det g)
    alpha_trace: np.ndarray     # same 1-form via the trace of gamma
    beta: np.ndarray            # Hessian of log sqrt(det g)
    beta_htrace: np.ndarray     # same 2-form via the trace of H
    H_mixed: np.ndarray         # H^i_{jkl}: coordinate derivative of mixed gamma
    H_lower: np.ndarray
    Rm_mixed: np.ndarray        # gamma*gamma - gamma*gamma product formula
    Rm_lower: np.ndarray
    Ric: np.ndarray
    R: float
    nabla_alpha: np.ndarray
    nabla_gamma: np.ndarray     # fully symmetric rank 4
    alpha_dual: np.ndarray      # first Koszul form of the dual structure
    beta_dual: np.ndarray       # second Koszul form of the dual structure
    field_name: str = ""

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def g(self) -> np.ndarray:
        return self.metric.g

    @property
    def g_inv(self) -> np.ndarray:
        return self.metric.g_inv

    # Connection coefficients in the affine chart.
    @property
    def flat_coefficients(self) -> np.ndarray:
        return np.zeros_like(self.gamma_mixed)

    @property
    def levi_civita_coefficients(self) -> np.ndarray:
        return self.gamma_mixed

    @property
    def dual_coefficients(self) -> np.ndarray:
        return 2.0 * self.gamma_mixed

    def to_dict(self) -> dict:
        """JSON-ready dump (row-major arrays, with point and jet order)."""
        return {
            "field": self.field_name,
            "point": self.x.tolist(),
            "jet_order": self.jet.order,
            "g": self.g.tolist(),
            "g_inv": self.g_inv.tolist(),
            "sqrt_det": self.metric.sqrt_det,
            "gamma_lower": self.gamma_lower.ravel().tolist(),
            "gamma_mixed": self.gamma_mixed.ravel().tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "H_mixed": self.H_mixed.ravel().tolist(),
            "H_lower": self.H_lower.ravel().tolist(),
            "Rm_mixed": self.Rm_mixed.ravel().tolist(),
            "Rm_lower": self.Rm_lower.ravel().tolist(),
            "Ric": self.Ric.tolist(),
            "R": self.R,
            "nabla_alpha": self.nabla_alpha.tolist(),
            "nabla_gamma": self.nabla_gamma.ravel().tolist(),
            "alpha_dual": self.alpha_dual.tolist(),
            "beta_dual": self.beta_dual.tolist(),
        }


# -- polynomial linear algebra -------------------------------------------


def _poly_hessian(poly: TaylorPoly) -> list[list[TaylorPoly]]:
    n = poly.dim
    firsts = [poly.derivative(i) for i in range(n)]
    return [[firsts[i].derivative(j) for j in range(n)] for i in range(n)]


def _poly_det(mat: list[list[TaylorPoly]]) -> TaylorPoly:
    """Determinant by elimination; SPD constant terms keep pivots invertible."""
    m = [row[:] for row in mat]
    k = len(m)
    det: TaylorPoly | None = None
    for i in range(k):
        piv = m[i][i]
        det = piv if det is None else det * piv
        inv_piv = piv.reciprocal()
        for r in range(i + 1, k):
            factor = m[r][i] * inv_piv
            for c in range(i + 1, k):
                m[r][c] = m[r][c] - factor * m[i][c]
    assert det is not None
    return det


def _poly_mat_inv(mat: list[list[TaylorPoly]]) -> list[list[TaylorPoly]]:
    k = len(mat)
    order = mat[0][0].order
    dim = mat[0][0].dim
    a = [row[:] for row in mat]
    inv = [[TaylorPoly.constant(dim, order, 1.0 if i == j else 0.0)
            for j in range(k)] for i in range(k)]
    for i in range(k):
        piv_inv = a[i][i].reciprocal()
        a[i] = [entry * piv_inv for entry in a[i]]
        inv[i] = [entry * piv_inv for entry in inv[i]]
        for r in range(k):
            if r == i:
                continue
            factor = a[r][i]
            a[r] = [ar - factor * ai for ar, ai in zip(a[r], a[i])]
            inv[r] = [br - factor * bi for br, bi in zip(inv[r], inv[i])]
    return inv


def half_logdet_poly(phi_poly: TaylorPoly) -> TaylorPoly:
    """log sqrt(det Hess(phi)) as a jet; the volume-density potential."""
    det = _poly_det(_poly_hessian(phi_poly))
    return det.log() * 0.5


# -- assembly ---------------------------------------------------------------


def _check_spd(g: np.ndarray) -> None:
    eigmin = float(np.linalg.eigvalsh(g).min())
    trace = float(np.trace(g))
    if eigmin <= EIGENVALUE_FLOOR * trace:
        raise NotPositiveDefiniteError(
            f"Hessian fails positive definiteness: min eigenvalue {eigmin:.3e} "
            f"vs trace {trace:.3e}")


def _dgamma_mixed(g_inv: np.ndarray, gamma_lower: np.ndarray,
                  d4: np.ndarray) -> np.ndarray:
    """dgam[i,a,b,k] = partial_k of the mixed difference tensor, slot i up."""
    dginv = -2.0 * np.einsum("ip,pqk,qr->irk", g_inv, gamma_lower, g_inv)
    return (np.einsum("irk,rab->iabk", dginv, gamma_lower)
            + 0.5 * np.einsum("ir,rabk->iabk", g_inv, d4))


def structure_at(field: PotentialField, x, order: int = 4) -> StructurePoint:
    """Assemble the full tensor inventory from an order >= 4 jet."""
    if order < 4:
        raise ValueError(f"structure assembly needs jet order >= 4, got {order}")
    x = np.asarray(x, dtype=float)
    poly = field.taylor(x, order)
    jet = poly.jet()

    g = jet.tensor(2)
    _check_spd(g)
    g_inv, sqrt_det = invert_spd(g)
    metric = MetricPoint(g=g, g_inv=g_inv, sqrt_det=sqrt_det)

    d3 = jet.tensor(3)
    d4 = jet.tensor(4)
    gamma_lower = 0.5 * d3
    gamma_mixed = np.einsum("ir,rjk->ijk", g_inv, gamma_lower)

    # First Koszul form two ways: volume-density jet and the gamma trace.
    vol = half_logdet_poly(poly).jet()
    alpha = vol.tensor(1)
    beta = vol.tensor(2)
    alpha_trace = np.einsum("rs,sri->i", g_inv, gamma_lower)

    dgam = _dgamma_mixed(g_inv, gamma_lower, d4)
    H_mixed = np.transpose(dgam, (0, 1, 3, 2))  # H^i_{jkl}: derivative in slot k
    H_lower = np.einsum("ip,pjkl->ijkl", g, H_mixed)
    beta_htrace = np.einsum("rrij->ij", H_mixed)

    Rm_mixed = (np.einsum("ilr,rjk->ijkl", gamma_mixed, gamma_mixed)
                - np.einsum("ikr,rjl->ijkl", gamma_mixed, gamma_mixed))
    Rm_lower = np.einsum("ip,pjkl->ijkl", g, Rm_mixed)
    Ric = (np.einsum("skr,rjs->jk", gamma_mixed, gamma_mixed)
           - np.einsum("r,rjk->jk", alpha, gamma_mixed))
    R = float(np.einsum("jk,jk->", g_inv, Ric))

    nabla_alpha = beta - np.einsum("rij,r->ij", gamma_mixed, alpha)
    gg = np.einsum("rij,rkl->ijkl", gamma_lower, gamma_mixed)
    nabla_gamma = (0.5 * d4
                   - gg
                   - np.transpose(gg, (0, 2, 1, 3))
                   - np.transpose(gg, (0, 2, 3, 1)))

    return StructurePoint(
        x=x, jet=jet, metric=metric,
        gamma_lower=gamma_lower, gamma_mixed=gamma_mixed,
        alpha=alpha, alpha_trace=alpha_trace,
        beta=beta, beta_htrace=beta_htrace,
        H_mixed=H_mixed, H_lower=H_lower,
        Rm_mixed=Rm_mixed, Rm_lower=Rm_lower,
        Ric=Ric, R=R,
        nabla_alpha=nabla_alpha, nabla_gamma=nabla_gamma,
        alpha_dual=-alpha, beta_dual=beta - 2.0 * nabla_alpha,
        field_name=field.name,
    )


# -- identity suite ----------------------------------------------------------


def _rel(residual: float, *scales: float) -> float:
    return float(residual) / max(1.0, *(abs(float(s)) for s in scales)) \
        if scales else float(residual)


def _maxabs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def verify_identities(sp: StructurePoint,
                      tolerance: float = DEFAULT_TOLERANCE) -> list[CheckResult]:
    """Evaluate every pointwise identity of the structure; never raises.

    Residuals are relative: each max-abs residual is divided by
    max(1, magnitude of the quantities compared).
    """
    checks: list[CheckResult] = []
    ginv = sp.g_inv

    def add(name: str, anchor: str, residual: float, tol: float = tolerance):
        checks.append(CheckResult(name, anchor, residual, tol))

    add("alpha_trace_vs_logdet", "Shima Prop. 3.4(2)",
        _rel(_maxabs(sp.alpha - sp.alpha_trace), _maxabs(sp.alpha)))

    add("beta_vs_H_trace", "Shima Prop. 3.4(3)",
        _rel(_maxabs(sp.beta - sp.beta_htrace), _maxabs(sp.beta)))

    gamma_sq = float(np.einsum("ijk,abc,ia,jb,kc->", sp.gamma_lower,
                               sp.gamma_lower, ginv, ginv, ginv))
    alpha_sq = float(sp.alpha @ ginv @ sp.alpha)
    add("scalar_curvature_identity", "R = |gamma|^2 - |alpha|^2",
        _rel(abs(sp.R - (gamma_sq - alpha_sq)), sp.R, gamma_sq))

    add("dual_alpha_negation", "dual volume derivative",
        _maxabs(sp.alpha_dual + sp.alpha))

    # Dual second Koszul form: beta - beta' equals twice nabla(alpha).
    add("dual_beta_relation", "dual second Koszul form",
        _rel(_maxabs((sp.beta - sp.beta_dual) - 2.0 * sp.nabla_alpha),
             _maxabs(sp.beta)))

    # Pairing of the flat connection with its dual on coordinate fields:
    # the jet's third derivative must match g paired with the dual coefficients.
    d3 = sp.jet.tensor(3)
    rhs = np.einsum("jr,rik->ijk", sp.g, sp.dual_coefficients)
    add("duality_pairing", "flat/dual connection pairing",
        _rel(_maxabs(d3 - rhs), _maxabs(d3)))

    perm_dev = 0.0
    for perm in itertools.permutations(range(4)):
        perm_dev = max(perm_dev, _maxabs(sp.nabla_gamma
                                         - np.transpose(sp.nabla_gamma, perm)))
    add("nabla_gamma_total_symmetry", "covariant gamma derivative symmetry",
        _rel(perm_dev, _maxabs(sp.nabla_gamma)))

    # Pointwise trace identity: tr_g(beta) = div(alpha sharp) + |alpha|^2.
    beta_tr = float(np.einsum("ij,ij->", ginv, sp.beta))
    div_sharp = float(np.einsum("ij,ij->", ginv, sp.nabla_alpha))
    add("koszul_trace_identity", "second Koszul trace identity",
        _rel(abs(beta_tr - div_sharp - alpha_sq), beta_tr, alpha_sq))

    return checks


def riemann_oracle(field: PotentialField, x, order: int = 4) -> np.ndarray:
    """Curvature via the classical Christoffel-derivative formula.

    Independent check of the gamma*gamma product expression: this route
    consumes fourth derivatives of phi, which must cancel for the two to
    agree.
    """
    sp = structure_at(field, x, order=order)
    dgam = _dgamma_mixed(sp.g_inv, sp.gamma_lower, sp.jet.tensor(4))
    gm = sp.gamma_mixed
    # Rm^i_{jkl} = d_k Gam^i_{lj} - d_l Gam^i_{kj}
    #             + Gam^i_{kr} Gam^r_{lj} - Gam^i_{lr} Gam^r_{kj}
    out = (np.einsum("iljk->ijkl", dgam)
           - np.einsum("ikjl->ijkl", dgam)
           + np.einsum("ikr,rlj->ijkl", gm, gm)
           - np.einsum("ilr,rkj->ijkl", gm, gm))
    return out


def riemann_product_residual(field: PotentialField, x, order: int = 4) -> float:
    """Max relative deviation between the product formula and the oracle."""
    sp = structure_at(field, x, order=order)
    oracle = riemann_oracle(field, x, order=order)
    return _rel(_maxabs(sp.Rm_mixed - oracle), _maxabs(oracle))


def properness_indicator(field: PotentialField, points,
                         threshold: float = 1e-8) -> tuple[float, bool]:
    """Sup of the metric norm of gamma over samples, and the proper flag."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1 or points.size == 0:
        raise ValueError("need at least one sample point")
    sup = 0.0
    for x in points:
        sp = structure_at(field, x)
        gamma_sq = float(np.einsum("ijk,abc,ia,jb,kc->", sp.gamma_lower,
                                   sp.gamma_lower, sp.g_inv, sp.g_inv, sp.g_inv))
        sup = max(sup, float(np.sqrt(max(gamma_sq, 0.0))))
    return sup, sup > threshold


def beta_scale_residual(field: PotentialField, x,
                        factors=(0.5, 2.0, 10.0)) -> float:
    """Max deviation of beta under rescaling of the potential (should vanish)."""
    base = structure_at(field, x).beta
    dev = 0.0
    for c in factors:
        dev = max(dev, _maxabs(structure_at(field.scaled(c), x).beta - base))
    return dev


# -- Bochner-type identity ----------------------------------------------------


@dataclass(frozen=True)
class BochnerReport:
    lhs: float          # half the Laplace-Beltrami of the scalar curvature
    rhs: float
    residual: float
    terms: dict

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "terms": self.terms}


def _scalar_curvature_from_jet(jet: Jet) -> float:
    g = jet.tensor(2)
    g_inv, _ = invert_spd(g)
    gl = 0.5 * jet.tensor(3)
    gamma_sq = float(np.einsum("ijk,abc,ia,jb,kc->", gl, gl, g_inv, g_inv, g_inv))
    alpha = np.einsum("rs,sri->i", g_inv, gl)
    alpha_sq = float(alpha @ g_inv @ alpha)
    return gamma_sq - alpha_sq


def scalar_curvature(field: PotentialField, x) -> float:
    return _scalar_curvature_from_jet(field.jet(x, 3))


def _scalar_curvature_poly(phi_poly: TaylorPoly) -> TaylorPoly:
    """Scalar curvature as a jet of order (phi order - 3) around the point."""
    order = phi_poly.order - 3
    hess = _poly_hessian(phi_poly)
    n = phi_poly.dim
    g_p = [[entry.truncated(order) for entry in row] for row in hess]
    ginv_p = _poly_mat_inv(g_p)
    gl_p = [[[hess[i][j].derivative(k).truncated(order) * 0.5 for k in range(n)]
             for j in range(n)] for i in range(n)]
    zero = TaylorPoly.constant(n, order, 0.0)

    alpha_p = []
    for i in range(n):
        acc = zero
        for r in range(n):
            for s in range(n):
                acc = acc + ginv_p[r][s] * gl_p[s][r][i]
        alpha_p.append(acc)

    gamma_sq = zero
    for i in range(n):
        for j in range(n):
            for k in range(n):
                up = zero
                for a in range(n):
                    for b in range(n):
                        for c in range(n):
                            up = up + (ginv_p[i][a] * ginv_p[j][b]
                                       * ginv_p[k][c] * gl_p[a][b][c])
                gamma_sq = gamma_sq + gl_p[i][j][k] * up

    alpha_sq = zero
    for i in range(n):
        for j in range(n):
            alpha_sq = alpha_sq + ginv_p[i][j] * alpha_p[i] * alpha_p[j]

    return gamma_sq - alpha_sq


def scalar_curvature_derivatives(field: PotentialField, x,
                                 method: str = "jet"
                                 ) -> tuple[np.ndarray, np.ndarray]:
    """First and second partials of the scalar-curvature field at x.

    ``jet`` differentiates the curvature formula through order-5 jets and is
    exact; ``fd`` uses 5-point central stencils of width 1e-3 * point scale
    on direct curvature evaluations.  Both must meet the Bochner gate.
    """
    x = np.asarray(x, dtype=float)
    n = field.dim
    if method == "jet":
        rj = _scalar_curvature_poly(field.taylor(x, 5)).jet()
        return rj.tensor(1), rj.tensor(2)
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")

    h = 1e-3 * max(1.0, float(np.max(np.abs(x))))

    def r_at(offset: np.ndarray) -> float:
        return scalar_curvature(field, x + offset)

    def d1(axis: int, base: np.ndarray) -> float:
        e = np.zeros(n)
        e[axis] = h
        return (-r_at(base + 2 * e) + 8 * r_at(base + e)
                - 8 * r_at(base - e) + r_at(base - 2 * e)) / (12 * h)

    grad = np.array([d1(k, np.zeros(n)) for k in range(n)])
    hess_r = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        hess_r[i, i] = (-r_at(2 * e) + 16 * r_at(e) - 30 * r_at(np.zeros(n))
                        + 16 * r_at(-e) - r_at(-2 * e)) / (12 * h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            val = (-d1(i, 2 * ej) + 8 * d1(i, ej)
                   - 8 * d1(i, -ej) + d1(i, -2 * ej)) / (12 * h)
            hess_r[i, j] = hess_r[j, i] = val
    return grad, hess_r


def bochner_residual(field: PotentialField, x,
                     method: str = "jet") -> BochnerReport:
    """Signed residual of the pointwise Bochner-type curvature identity.

    Every repeated index is a full metric contraction.  The identity equates
    half the Laplace-Beltrami of the scalar curvature with

        hess(alpha)*gamma - rough_laplacian(alpha)*alpha - |nabla alpha|^2
        + |nabla gamma|^2 + |Rm|^2 + |Ric|^2 + Ric*beta - Ric*nabla(alpha),

    i.e. the difference of the Weitzenbock expansions of half the Laplacians
    of |gamma|^2 and |alpha|^2.  Needs order-5 jets.
    """
    x = np.asarray(x, dtype=float)
    sp = structure_at(field, x, order=5)
    ginv = sp.g_inv
    gl, gm = sp.gamma_lower, sp.gamma_mixed
    alpha, beta, na = sp.alpha, sp.beta, sp.nabla_alpha

    vol = half_logdet_poly(field.taylor(x, 5)).jet()
    d3L = vol.tensor(3)  # third partials of log sqrt(det g)
    dgam = _dgamma_mixed(ginv, gl, sp.jet.tensor(4))

    # partial_i (nabla alpha)_{jk}, then its covariant completion.
    d_nabla = (d3L
               - np.einsum("rjki,r->ijk", dgam, alpha)
               - np.einsum("rjk,ir->ijk", gm, beta))
    nna = (d_nabla
           - np.einsum("sij,sk->ijk", gm, na)
           - np.einsum("sik,js->ijk", gm, na))

    def up2(t: np.ndarray) -> np.ndarray:
        return np.einsum("ia,jb,ab->ij", ginv, ginv, t)

    t_hess_alpha = float(np.einsum("ijk,abc,ia,jb,kc->", nna, gl,
                                   ginv, ginv, ginv))
    rough = np.einsum("rs,rsi->i", ginv, nna)
    t_rough_alpha = float(rough @ ginv @ alpha)
    t_nabla_gamma = float(np.einsum("ijkl,abcd,ia,jb,kc,ld->", sp.nabla_gamma,
                                    sp.nabla_gamma, ginv, ginv, ginv, ginv))
    t_rm = float(np.einsum("ijkl,abcd,ia,jb,kc,ld->", sp.Rm_lower, sp.Rm_lower,
                           ginv, ginv, ginv, ginv))
    ric_up = up2(sp.Ric)
    t_ric = float(np.einsum("ij,ij->", sp.Ric, ric_up))
    t_ric_beta = float(np.einsum("ij,ij->", ric_up, beta))
    t_ric_na = float(np.einsum("ij,ij->", ric_up, na))
    t_na_sq = float(np.einsum("ij,ij->", na, up2(na)))

    rhs = (t_hess_alpha - t_rough_alpha - t_na_sq + t_nabla_gamma + t_rm
           + t_ric + t_ric_beta - t_ric_na)

    grad_r, hess_r = scalar_curvature_derivatives(field, x, method=method)
    alpha_sharp = ginv @ alpha
    laplace_r = float(np.einsum("ij,ij->", ginv, hess_r) - alpha_sharp @ grad_r)
    lhs = 0.5 * laplace_r

    terms = {
        "hess_alpha_gamma": t_hess_alpha,
        "rough_laplacian_alpha": t_rough_alpha,
        "nabla_alpha_sq": t_na_sq,
        "nabla_gamma_sq": t_nabla_gamma,
        "riemann_sq": t_rm,
        "ricci_sq": t_ric,
        "ricci_beta": t_ric_beta,
        "ricci_nabla_alpha": t_ric_na,
        "laplace_scalar_curvature": laplace_r,
    }
    return BochnerReport(lhs=lhs, rhs=rhs, residual=lhs - rhs, terms=terms)
