"""Desk-scale integration of the metric flow driven by the second Koszul form.

Two grid representations: a periodic torus carrying a potential perturbation
psi (metric = identity + Hessian of psi) and a boxed patch carrying metric
components per node with a prescribed two-node boundary frame.  All spatial
derivatives are 4th-order central stencils; time stepping is explicit with a
parabolic step-size guard that substeps oversized requests.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

CFL_FACTOR = 0.25     # guard: dt <= CFL_FACTOR * h^2 / max |g_inv|
FRAME = 2             # prescribed-boundary frame width (stencil depth)


class FlowBlowupError(RuntimeError):
    """Positive definiteness was lost at a node during integration.

    When raised out of :func:`run_flow` it carries the last valid grid and
    the diagnostics collected up to the stop.
    """

    def __init__(self, node: tuple[int, ...], t: float,
                 last_grid: "MetricGrid | None" = None,
                 records: "list[FlowRecord] | None" = None):
        super().__init__(f"metric lost positive definiteness at node {node}, t={t:.6g}")
        self.node = node
        self.t = t
        self.last_grid = last_grid
        self.records = records


@dataclass(frozen=True)
class MetricGrid:
    """State of the flow integrator on a lattice.

    ``state`` holds psi values (potential mode, shape = lattice shape) or
    symmetric metric components per node (metric mode, shape + (n, n)).
    Periodic boundaries make the lattice a torus; prescribed boundaries hold
    a two-node frame at exact values supplied by ``boundary_fn(t)``.
    """

    mode: str                     # "potential" | "metric"
    dim: int                      # 1 or 2
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    boundary: str                 # "periodic" | "prescribed"
    state: np.ndarray
    t: float = 0.0
    boundary_fn: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        if self.mode not in ("potential", "metric"):
            raise ValueError(f"mode must be potential or metric, got {self.mode!r}")
        if self.dim not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if self.boundary not in ("periodic", "prescribed"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.mode == "potential" and self.boundary != "periodic":
            raise ValueError("potential mode is defined on the periodic torus")
        if self.boundary == "prescribed" and self.boundary_fn is None:
            raise ValueError("prescribed boundaries need a boundary_fn(t)")
        if self.boundary == "prescribed" and min(self.shape) < 2 * FRAME + 1:
            raise ValueError(f"prescribed grids need at least {2*FRAME+1} nodes per axis")
        expected = self.shape if self.mode == "potential" else self.shape + (self.dim, self.dim)
        if tuple(self.state.shape) != tuple(expected):
            raise ValueError(f"state shape {self.state.shape} != expected {expected}")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def axis_coordinates(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.origin[axis] + self.spacing[axis] * np.arange(n)

    def meshgrid(self) -> list[np.ndarray]:
        axes = [self.axis_coordinates(a) for a in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def interior(self) -> tuple[slice, ...]:
        """Slices where stencil output is valid (everything on a torus)."""
        if self.periodic:
            return tuple(slice(None) for _ in self.shape)
        return tuple(slice(FRAME, -FRAME) for _ in self.shape)


def torus_grid(psi: np.ndarray | Callable, shape: Sequence[int],
               period: Sequence[float] | float = 2 * np.pi,
               origin: Sequence[float] | None = None) -> MetricGrid:
    """Potential-mode torus; psi may be an array or a callable of the mesh."""
    shape = tuple(int(s) for s in shape)
    dim = len(shape)
    if np.isscalar(period):
        period = (float(period),) * dim
    spacing = tuple(float(p) / s for p, s in zip(period, shape))
    origin = tuple(origin) if origin is not None else (0.0,) * dim
    grid = MetricGrid(mode="potential", dim=dim, shape=shape, spacing=spacing,
                      origin=origin, boundary="periodic",
                      state=np.zeros(shape))
    if callable(psi):
        state = np.asarray(psi(*grid.meshgrid()), dtype=float)
    else:
        state = np.asarray(psi, dtype=float)
    return replace(grid, state=state)


def metric_grid(g_field: np.ndarray, spacing: Sequence[float],
                origin: Sequence[float], boundary: str = "periodic",
                boundary_fn: Callable[[float], np.ndarray] | None = None,
                t: float = 0.0) -> MetricGrid:
    g_field = np.asarray(g_field, dtype=float)
    dim = g_field.shape[-1]
    return MetricGrid(mode="metric", dim=dim, shape=g_field.shape[:-2],
                      spacing=tuple(float(h) for h in spacing),
                      origin=tuple(float(o) for o in origin),
                      boundary=boundary, state=g_field, t=t,
                      boundary_fn=boundary_fn)


def metric_patch_from_field(field, center: Sequence[float],
                            spacing: float, shape: Sequence[int],
                            boundary_fn: Callable[[float], np.ndarray] | None = None
                            ) -> MetricGrid:
    """Metric-mode patch sampling the Hessian metric of a potential field."""
    shape = tuple(int(s) for s in shape)
    dim = len(shape)
    center = np.asarray(center, dtype=float)
    origin = tuple(center[a] - spacing * (shape[a] - 1) / 2 for a in range(dim))
    g = np.empty(shape + (dim, dim))
    axes = [origin[a] + spacing * np.arange(shape[a]) for a in range(dim)]
    for idx in np.ndindex(*shape):
        x = np.array([axes[a][idx[a]] for a in range(dim)])
        g[idx] = field.jet(x, 2).hessian()
    fn = boundary_fn if boundary_fn is not None else (lambda t, g0=g.copy(): g0)
    return metric_grid(g, spacing=(spacing,) * dim, origin=origin,
                       boundary="prescribed", boundary_fn=fn)


# -- stencils -----------------------------------------------------------------


def _d1(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """4th-order first derivative; wraps periodically (frame output unused
    on prescribed grids)."""
    r = np.roll
    return (-r(arr, -2, axis) + 8 * r(arr, -1, axis)
            - 8 * r(arr, 1, axis) + r(arr, 2, axis)) / (12 * h)


def _d2(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    r = np.roll
    return (-r(arr, -2, axis) + 16 * r(arr, -1, axis) - 30 * arr
            + 16 * r(arr, 1, axis) - r(arr, 2, axis)) / (12 * h * h)


def _hessian_field(arr: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    dim = len(spacing)
    out = np.empty(arr.shape + (dim, dim))
    for i in range(dim):
        out[..., i, i] = _d2(arr, i, spacing[i])
        for j in range(i + 1, dim):
            mixed = _d1(_d1(arr, i, spacing[i]), j, spacing[j])
            out[..., i, j] = mixed
            out[..., j, i] = mixed
    return out


# -- metric fields -----------------------------------------------------------


def metric_of(grid: MetricGrid) -> np.ndarray:
    """Per-node metric components; identity + Hessian(psi) in potential mode."""
    if grid.mode == "metric":
        return grid.state
    g = _hessian_field(grid.state, grid.spacing)
    for i in range(grid.dim):
        g[..., i, i] += 1.0
    return g


def _check_grid_spd(g: np.ndarray, grid: MetricGrid) -> None:
    # positive assertions so NaN/inf states fail too
    if grid.dim == 1:
        ok = g[..., 0, 0] > 0
    else:
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
        ok = (g[..., 0, 0] > 0) & (det > 0)
    ok = ok & np.isfinite(g).all(axis=(-2, -1))
    if not np.all(ok):
        node = tuple(int(i) for i in np.argwhere(~ok)[0])
        raise FlowBlowupError(node, grid.t)


def _det(g: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return g[..., 0, 0]
    return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2


def _inv(g: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return 1.0 / g
    det = _det(g, 2)
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1] / det
    out[..., 1, 1] = g[..., 0, 0] / det
    out[..., 0, 1] = -g[..., 0, 1] / det
    out[..., 1, 0] = -g[..., 1, 0] / det
    return out


def half_logdet_field(grid: MetricGrid) -> np.ndarray:
    g = metric_of(grid)
    _check_grid_spd(g, grid)
    return 0.5 * np.log(_det(g, grid.dim))


def alpha_on_grid(grid: MetricGrid) -> np.ndarray:
    """Per-node first Koszul form: gradient of log sqrt(det g)."""
    w = half_logdet_field(grid)
    return np.stack([_d1(w, a, grid.spacing[a]) for a in range(grid.dim)], axis=-1)


def beta_on_grid(grid: MetricGrid) -> np.ndarray:
    """Per-node second Koszul form: Hessian of log sqrt(det g).

    Valid on the grid interior; on prescribed grids the outermost two node
    layers carry stencil wrap artifacts and are never consumed.
    """
    return _hessian_field(half_logdet_field(grid), grid.spacing)


# -- time stepping -------------------------------------------------------------


def cfl_limit(grid: MetricGrid) -> float:
    """Parabolic guard on the explicit step size."""
    g = metric_of(grid)
    _check_grid_spd(g, grid)
    max_inv = float(np.max(np.abs(_inv(g, grid.dim)[grid.interior()])))
    return CFL_FACTOR * min(grid.spacing) ** 2 / max_inv


def _time_derivative(grid: MetricGrid, state: np.ndarray, t: float) -> np.ndarray:
    work = replace(grid, state=state, t=t)
    if grid.mode == "potential":
        g = metric_of(work)
        _check_grid_spd(g, work)
        return np.log(_det(g, grid.dim))
    rate = 2.0 * beta_on_grid(work)
    if not grid.periodic:
        out = np.zeros_like(rate)
        out[grid.interior()] = rate[grid.interior()]
        return out
    return rate


def _apply_frame(grid: MetricGrid, state: np.ndarray, t: float) -> np.ndarray:
    if grid.periodic:
        return state
    exact = np.asarray(grid.boundary_fn(t), dtype=float)
    mask = np.ones(grid.shape, dtype=bool)
    mask[grid.interior()] = False
    out = state.copy()
    out[mask] = exact[mask]
    return out


def flow_step(grid: MetricGrid, dt: float, scheme: str = "rk4") -> MetricGrid:
    """Advance one macro step; requests above the parabolic guard substep.

    On prescribed grids the boundary frame is refreshed from the exact
    prescription at every stage time, and again at t + dt after the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if scheme not in ("euler", "rk4"):
        raise ValueError(f"scheme must be 'euler' or 'rk4', got {scheme!r}")
    guard = cfl_limit(grid)
    nsub = max(1, int(np.ceil(dt / guard - 1e-12)))
    h = dt / nsub
    state, t = grid.state, grid.t

    def f(s: np.ndarray, tau: float) -> np.ndarray:
        return _time_derivative(grid, _apply_frame(grid, s, tau), tau)

    for _ in range(nsub):
        if scheme == "euler":
            state = state + h * f(state, t)
        else:
            k1 = f(state, t)
            k2 = f(state + 0.5 * h * k1, t + 0.5 * h)
            k3 = f(state + 0.5 * h * k2, t + 0.5 * h)
            k4 = f(state + h * k3, t + h)
            state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        state = _apply_frame(grid, state, t)
    out = replace(grid, state=state, t=t)
    _check_grid_spd(metric_of(out), out)
    return out


# -- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class IntegralReport:
    beta_trace: float   # integral of tr_g(beta) against the volume form
    alpha_sq: float     # integral of |alpha|^2
    divergence: float   # discrete Stokes witness: integral of div(alpha sharp)


def torus_integrals(grid: MetricGrid) -> IntegralReport:
    """Volume-form integrals on the periodic lattice (exact Riemann sums)."""
    if not grid.periodic:
        raise ValueError("integrals are defined on the periodic torus")
    g = metric_of(grid)
    _check_grid_spd(g, grid)
    ginv = _inv(g, grid.dim)
    vol = np.sqrt(_det(g, grid.dim))
    cell = float(np.prod(grid.spacing))
    alpha = alpha_on_grid(grid)
    beta = beta_on_grid(grid)
    beta_trace = float(np.sum(np.einsum("...ij,...ij->...", ginv, beta) * vol) * cell)
    alpha_sq = float(np.sum(np.einsum("...ij,...i,...j->...", ginv, alpha, alpha)
                            * vol) * cell)
    # div(alpha sharp) integrates to the lattice sum of stencil differences,
    # which telescopes to zero on the torus
    flux = np.einsum("...ij,...j->...i", ginv, alpha) * vol[..., None]
    div = sum(_d1(flux[..., a], a, grid.spacing[a]) for a in range(grid.dim))
    divergence = float(np.sum(div) * cell)
    return IntegralReport(beta_trace=beta_trace, alpha_sq=alpha_sq,
                          divergence=divergence)


def self_similarity_diagnostic(grid: MetricGrid, reference: np.ndarray,
                               threshold: float = 1e-6
                               ) -> tuple[float, float, bool]:
    """Least-squares conformal factor against the reference metric field.

    Returns (c_hat, sup deviation of g - c_hat * reference, flag); the flag
    certifies conformal self-similarity at threshold * sup |reference|.
    """
    g = metric_of(grid)[grid.interior()]
    ref = np.asarray(reference, dtype=float)[grid.interior()]
    denom = float(np.sum(ref * ref))
    c_hat = float(np.sum(g * ref) / denom) if denom > 0 else 1.0
    deviation = float(np.max(np.abs(g - c_hat * ref)))
    scale = float(np.max(np.abs(ref)))
    return c_hat, deviation, deviation < threshold * max(scale, 1e-300)


@dataclass(frozen=True)
class FlowRecord:
    t: float
    max_beta: float
    min_eig: float
    max_eig: float
    int_beta_trace: float
    int_alpha_sq: float
    c_hat: float
    ss_deviation: float

    @staticmethod
    def columns() -> list[str]:
        return ["t", "max_beta", "min_eig", "max_eig",
                "int_beta_trace", "int_alpha_sq", "c_hat", "ss_deviation"]

    def row(self) -> list[float]:
        return [self.t, self.max_beta, self.min_eig, self.max_eig,
                self.int_beta_trace, self.int_alpha_sq,
                self.c_hat, self.ss_deviation]


def _eig_range(g: np.ndarray, dim: int, sel) -> tuple[float, float]:
    g = g[sel]
    if dim == 1:
        vals = g[..., 0, 0]
        return float(vals.min()), float(vals.max())
    half_tr = 0.5 * (g[..., 0, 0] + g[..., 1, 1])
    disc = np.sqrt(np.maximum(0.25 * (g[..., 0, 0] - g[..., 1, 1]) ** 2
                              + g[..., 0, 1] ** 2, 0.0))
    return float((half_tr - disc).min()), float((half_tr + disc).max())


def diagnose(grid: MetricGrid, reference: np.ndarray | None = None) -> FlowRecord:
    g = metric_of(grid)
    beta = beta_on_grid(grid)
    min_eig, max_eig = _eig_range(g, grid.dim, grid.interior())
    if grid.periodic:
        ints = torus_integrals(grid)
        int_bt, int_asq = ints.beta_trace, ints.alpha_sq
    else:
        int_bt = int_asq = float("nan")
    if reference is not None:
        c_hat, dev, _ = self_similarity_diagnostic(grid, reference)
    else:
        c_hat, dev = 1.0, 0.0
    return FlowRecord(t=grid.t,
                      max_beta=float(np.max(np.abs(beta[grid.interior()]))),
                      min_eig=min_eig, max_eig=max_eig,
                      int_beta_trace=int_bt, int_alpha_sq=int_asq,
                      c_hat=c_hat, ss_deviation=dev)


def run_flow(grid: MetricGrid, dt: float, steps: int, scheme: str = "rk4",
             reference: np.ndarray | None = None
             ) -> tuple[MetricGrid, list[FlowRecord]]:
    """Integrate and collect one diagnostics record per macro step.

    On blow-up the integration stops and the raised error carries the last
    valid grid plus everything recorded so far.
    """
    if reference is None:
        reference = metric_of(grid).copy()
    records = [diagnose(grid, reference)]
    for _ in range(steps):
        try:
            grid = flow_step(grid, dt, scheme=scheme)
        except FlowBlowupError as err:
            raise FlowBlowupError(err.node, err.t, last_grid=grid,
                                  records=records) from err
        records.append(diagnose(grid, reference))
    return grid, records


def write_csv(records: Sequence[FlowRecord], path) -> None:
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FlowRecord.columns())
        for rec in records:
            writer.writerow([repr(v) for v in rec.row()])


def grid_snapshot(grid: MetricGrid) -> dict:
    """JSON-ready snapshot of the grid state."""
    return {
        "mode": grid.mode,
        "dim": grid.dim,
        "shape": list(grid.shape),
        "spacing": list(grid.spacing),
        "origin": list(grid.origin),
        "boundary": grid.boundary,
        "t": grid.t,
        "state": grid.state.ravel().tolist(),
    }
