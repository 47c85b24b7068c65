"""Command-line front end: manifest-driven analyses with JSON/CSV reports.

Commands: analyze, verify, soliton, flow, infogeo.  Exit code 0 when every
enabled check passes, 1 on a check failure, 2 on input errors (manifest,
domain, or construction problems).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import expressions as ex
from . import flow as fl
from . import infogeo as ig
from . import solitons as so
from . import structure as st
from .expressions import DomainError, ParseError
from .manifest import Manifest, ManifestError, load_manifest
from .potentials import PotentialField, builtin_family, from_expression, sample_points
from .report import Report
from .tensors import NotPositiveDefiniteError

BOCHNER_TOLERANCE = 1e-6
SCALE_TOLERANCE = 1e-12
STOKES_TOLERANCE = 1e-7
SELF_SIMILAR_TOLERANCE = 1e-6


def _build_field(man: Manifest) -> PotentialField:
    p = man.potential
    if p is None:
        raise ManifestError("this command needs a [potential] section", 1)
    if p.expr is not None:
        return from_expression(p.expr, p.n)
    name = p.family
    if name == "quadratic":
        return builtin_family(name, n=p.n)
    if name == "log_cone":
        return builtin_family(name, n=p.n)
    if name == "torus_perturbed":
        freqs = p.freqs if p.freqs is not None else (1,) * p.n
        return builtin_family(name, n=p.n, eps=p.eps if p.eps is not None else 0.05,
                              freqs=freqs)
    if name == "multinomial_logpartition":
        return builtin_family(name, outcomes=p.outcomes)
    raise ManifestError(f"unknown family {name!r}", 1)


def _default_box(field: PotentialField) -> tuple[tuple[float, float], ...]:
    name = field.name
    n = field.dim
    if name.startswith("log_cone"):
        return tuple([(-0.4, 0.4)] * (n - 1) + [(1.0, 1.8)])
    if name.startswith("torus_perturbed"):
        return tuple([(0.0, 2 * np.pi)] * n)
    return tuple([(-0.8, 0.8)] * n)


def _samples(man: Manifest, field: PotentialField, args) -> tuple[np.ndarray, int]:
    section = man.samples
    seed = args.seed if args.seed is not None else (section.seed if section else 0)
    count = args.points if args.points is not None else \
        (section.count if section and section.count else 20)
    explicit = [np.asarray(p, dtype=float) for p in (section.points if section else [])]
    for pt in explicit:
        if pt.shape != (field.dim,):
            raise ManifestError(
                f"explicit point {pt.tolist()} has wrong dimension", 1)
    sampled = np.zeros((0, field.dim))
    remaining = count - len(explicit)
    if remaining > 0:
        box = section.box if section and section.box else _default_box(field)
        rng = np.random.default_rng(seed)
        sampled = sample_points(field, rng, remaining, box)
    pts = np.array(explicit + list(sampled)) if explicit or len(sampled) else \
        np.zeros((0, field.dim))
    return pts, seed


def _write_outputs(report: Report, man: Manifest, args,
                   flow_records=None) -> None:
    out = man.output
    json_path = args.json or out.json
    if json_path:
        report.write(json_path)
    fig_dir = args.figures or out.figures
    if fig_dir:
        from . import figures
        Path(fig_dir).mkdir(parents=True, exist_ok=True)
        if report.records:
            figures.save_residual_figure(
                report.records, Path(fig_dir) / f"{report.command}_residuals.png")
        if flow_records:
            figures.save_flow_figure(flow_records,
                                     Path(fig_dir) / "flow_diagnostics.png")


# -- commands -----------------------------------------------------------------


def cmd_analyze(man: Manifest, args) -> tuple[Report, object]:
    field = _build_field(man)
    points, seed = _samples(man, field, args)
    report = Report(command="analyze", manifest_text=man.text, seed=seed,
                    tool_version=__version__)
    for x in points:
        sp = st.structure_at(field, x)
        report.dumps.append(sp.to_dict())
    report.add({"name": "structure_points_analyzed", "count": len(points),
                "field": field.name, "anchor": "tensor inventory dump"})
    return report, None


def cmd_verify(man: Manifest, args) -> tuple[Report, object]:
    field = _build_field(man)
    points, seed = _samples(man, field, args)
    report = Report(command="verify", manifest_text=man.text, seed=seed,
                    tool_version=__version__)
    tol = args.tolerance if args.tolerance else st.DEFAULT_TOLERANCE
    bochner_tol = args.tolerance if args.tolerance else BOCHNER_TOLERANCE
    scale_tol = args.tolerance if args.tolerance else SCALE_TOLERANCE

    worst: dict[str, st.CheckResult] = {}
    for x in points:
        sp = st.structure_at(field, x)
        for check in st.verify_identities(sp, tolerance=tol):
            old = worst.get(check.name)
            if old is None or check.residual > old.residual:
                worst[check.name] = check
    report.add_all(worst.values())

    def reduce_max(name, anchor, fn, tolerance):
        residual = max((fn(x) for x in points), default=0.0)
        report.add(st.CheckResult(name, anchor, residual, tolerance))

    reduce_max("curvature_product_vs_oracle", "Shima Prop. 2.3",
               lambda x: st.riemann_product_residual(field, x), tol)
    if field.k_max >= 5:
        reduce_max("bochner_identity", "Bochner identity for the curvature",
                   lambda x: abs(st.bochner_residual(field, x).residual),
                   bochner_tol)
    reduce_max("beta_scale_invariance", "scale invariance of the second Koszul form",
               lambda x: st.beta_scale_residual(field, x), scale_tol)

    sup_gamma, proper = st.properness_indicator(field, points)
    report.add({"name": "properness_indicator", "sup_gamma_norm": sup_gamma,
                "proper": proper,
                "anchor": "difference tensor properness"})
    if man.output.dumps:
        for x in points:
            report.dumps.append(st.structure_at(field, x).to_dict())
    return report, None


def cmd_soliton(man: Manifest, args) -> tuple[Report, object]:
    if man.soliton is None:
        raise ManifestError("the soliton command needs a [soliton] section", 1)
    field = _build_field(man)
    points, seed = _samples(man, field, args)
    report = Report(command="soliton", manifest_text=man.text, seed=seed,
                    tool_version=__version__)
    tol = args.tolerance if args.tolerance else 1e-8

    sec = man.soliton
    if sec.kind == "vector":
        sources = sec.x if sec.x is not None else ("0",) * field.dim
        spec = so.SolitonSpec.vector(sources, sec.lam, field.dim)
    else:
        if sec.f is None:
            raise ManifestError("gradient solitons need f = \"<expr>\"", 1)
        spec = so.SolitonSpec.gradient(sec.f, sec.lam, field.dim)

    residual = 0.0
    dual_res = 0.0
    lie_sharp = 0.0
    trace_res = 0.0
    beta_norm = 0.0
    lie_norm = 0.0
    X = so.vector_field_of(spec, field)
    for x in points:
        sp = st.structure_at(field, x)
        residual = max(residual, so.soliton_residual(sp, spec)[1])
        dual_res = max(dual_res, so.dual_soliton(sp, spec, field).max_residual)
        lie_sharp = max(lie_sharp, so.lie_alpha_sharp_residual(sp, field))
        traces = so.trace_identity_residual(sp, spec, field)
        trace_res = max(trace_res, max(abs(v) for v in traces.values()))
        steady = so.steady_killing_check(sp, X)
        beta_norm = max(beta_norm, steady.beta_norm)
        lie_norm = max(lie_norm, steady.lie_norm)

    report.add(st.CheckResult("soliton_residual", "self-similar structure equation",
                              residual, tol))
    report.add(st.CheckResult("dual_soliton_residual", "dual-space soliton",
                              dual_res, tol))
    report.add(st.CheckResult("lie_alpha_sharp_vs_nabla_alpha",
                              "Lie derivative along the dual of alpha",
                              lie_sharp, tol))
    report.add(st.CheckResult("trace_identities", "soliton trace identity",
                              trace_res, tol))
    lam_hat, fit_res = so.einstein_fit(field, points)
    report.add({"name": "einstein_fit", "lambda_hat": lam_hat,
                "residual": fit_res, "anchor": "Einstein condition"})
    report.add({"name": "steady_killing_check", "beta_norm": beta_norm,
                "lie_norm": lie_norm,
                "certified_steady": beta_norm < tol and lie_norm < tol,
                "classification": spec.classification,
                "anchor": "Killing fields give steady instances"})
    return report, None


def _potential_grid(source: str | None, grid_shape, period) -> "fl.MetricGrid":
    shape = tuple(grid_shape)
    if source is None:
        return fl.torus_grid(np.zeros(shape), shape, period)
    expr = ex.parse_potential(source, len(shape))
    grid = fl.torus_grid(np.zeros(shape), shape, period)
    mesh = grid.meshgrid()
    return fl.torus_grid(np.asarray(ex.evaluate(expr, mesh), dtype=float),
                         shape, period)


def cmd_flow(man: Manifest, args) -> tuple[Report, object]:
    if man.flow is None:
        raise ManifestError("the flow command needs a [flow] section", 1)
    sec = man.flow
    seed = args.seed if args.seed is not None else \
        (man.samples.seed if man.samples else 0)
    report = Report(command="flow", manifest_text=man.text, seed=seed,
                    tool_version=__version__)

    if sec.mode == "potential":
        grid = _potential_grid(sec.psi, sec.shape, sec.period)
    else:
        field = _build_field(man)
        if sec.center is None or sec.spacing is None:
            raise ManifestError("metric flows need center and spacing", 1)
        grid = fl.metric_patch_from_field(field, sec.center, sec.spacing, sec.shape)
        g0 = fl.metric_of(grid).copy()
        boundary = sec.boundary or "frozen"
        if boundary == "proportional":
            lam = sec.boundary_lambda
            grid = fl.metric_grid(g0, grid.spacing, grid.origin,
                                  boundary="prescribed",
                                  boundary_fn=lambda t: (1 + 2 * lam * t) * g0)
        elif boundary == "periodic":
            grid = fl.metric_grid(g0, grid.spacing, grid.origin, boundary="periodic")

    reference = fl.metric_of(grid).copy()
    blowup = None
    try:
        final, records = fl.run_flow(grid, sec.dt, sec.steps,
                                     scheme=sec.scheme, reference=reference)
    except fl.FlowBlowupError as err:
        # blow-up policy: stop, keep the last valid state and its diagnostics
        blowup, final, records = err, err.last_grid, err.records

    csv_path = args.csv or man.output.csv
    if csv_path:
        fl.write_csv(records, csv_path)

    if grid.periodic:
        stokes = max(abs(r.int_beta_trace - r.int_alpha_sq) for r in records)
        report.add(st.CheckResult("stokes_trace_identity",
                                  "compact trace identity", stokes,
                                  args.tolerance or STOKES_TOLERANCE))
        negativity = min(r.int_alpha_sq for r in records)
        # signed residual: any negative energy integral trips the zero gate
        report.add({"name": "alpha_sq_integral_nonnegative",
                    "residual": -negativity, "tolerance": 1e-300,
                    "passed": -negativity < 1e-300,
                    "anchor": "nonnegativity of the volume-derivative energy"})
    last = records[-1]
    self_similar = last.ss_deviation < SELF_SIMILAR_TOLERANCE * max(
        1e-300, float(np.max(np.abs(reference))))
    report.add({"name": "self_similarity", "c_hat": last.c_hat,
                "deviation": last.ss_deviation, "flagged": bool(self_similar),
                "anchor": "conformal self-similarity diagnostic"})
    if (sec.boundary or "") == "proportional":
        expected = 1 + 2 * sec.boundary_lambda * last.t
        report.add(st.CheckResult("conformal_factor_exactness",
                                  "proportional evolution of the Einstein patch",
                                  abs(last.c_hat - expected),
                                  args.tolerance or SELF_SIMILAR_TOLERANCE))
    if blowup is not None:
        report.add({"name": "flow_blowup", "passed": False,
                    "node": [int(i) for i in blowup.node], "t": blowup.t,
                    "anchor": "blow-up policy: stop, report last valid state"})
    else:
        report.add({"name": "flow_completed", "t_final": final.t,
                    "steps": sec.steps, "scheme": sec.scheme,
                    "anchor": "flow integration"})
    if man.output.dumps:
        report.dumps.append(fl.grid_snapshot(final))
    return report, records


def cmd_infogeo(man: Manifest, args) -> tuple[Report, object]:
    if man.infogeo is None:
        raise ManifestError("the infogeo command needs an [infogeo] section", 1)
    sec = man.infogeo
    seed = args.seed if args.seed is not None else \
        (man.samples.seed if man.samples else 0)
    count = args.points if args.points is not None else sec.points
    report = Report(command="infogeo", manifest_text=man.text, seed=seed,
                    tool_version=__version__)
    tol = args.tolerance if args.tolerance else 1e-10

    fam = ig.SimplexFamily(sec.outcomes, sec.coords)
    rng = np.random.default_rng(seed)
    if sec.coords == "natural":
        box = sec.box or ((-2.0, 2.0),) * fam.dim
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        points = lo + (hi - lo) * rng.random((count, fam.dim))
    else:
        points = []
        while len(points) < count:
            p = rng.random(fam.dim)
            if p.sum() < 0.98 and np.all(p > 0.02):
                points.append(p)
        points = np.array(points)

    eig_min = min(float(np.linalg.eigvalsh(ig.fisher_metric(fam, th)).min())
                  for th in points)
    # signed residual: definiteness fails when -eig_min reaches zero
    report.add({"name": "fisher_metric_positive_definite",
                "min_eigenvalue": eig_min, "residual": -eig_min,
                "tolerance": 0.0, "passed": -eig_min < 0.0,
                "anchor": "information metric definiteness"})
    pairing = max(ig.duality_pairing_check(fam, th, sec.a) for th in points)
    report.add(st.CheckResult("duality_pairing", "pairing of the (a, -a) pair",
                              pairing, tol))
    affinity = 0.0
    for th in points:
        ca = ig.alpha_connection(fam, th, sec.a).gamma_lower
        cb = ig.alpha_connection(fam, th, -sec.a).gamma_lower
        c0 = ig.alpha_connection(fam, th, 0.0).gamma_lower
        affinity = max(affinity, float(np.max(np.abs(ca + cb - 2 * c0))))
    report.add(st.CheckResult("connection_affine_in_a",
                              "affinity of the connection family", affinity,
                              args.tolerance or 1e-12))
    if sec.coords == "natural":
        cert = ig.hessian_structure_certificate(fam, points, tolerance=tol)
        report.add_all(cert.records)
        report.add({"name": "properness_witness",
                    "max_gap_to_levi_civita": cert.properness_witness,
                    "residual": -cert.properness_witness, "tolerance": 0.0,
                    "passed": -cert.properness_witness < 0.0,
                    "anchor": "flat connection differs from Levi-Civita"})
    return report, None


COMMANDS = {
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "soliton": cmd_soliton,
    "flow": cmd_flow,
    "infogeo": cmd_infogeo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hesseflow",
        description="Hessian-structure verification, soliton analysis and "
                    "metric-flow integration driven by manifest files.")
    parser.add_argument("--version", action="version",
                        version=f"hesseflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("analyze", "dump the tensor inventory at sample points"),
        ("verify", "run the full identity suite at sample points"),
        ("soliton", "evaluate soliton residuals and the dual construction"),
        ("flow", "integrate the metric flow and emit CSV diagnostics"),
        ("infogeo", "certify the simplex information geometry"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("manifest", help="path to the manifest file")
        p.add_argument("--tolerance", type=float, default=None,
                       help="global tolerance override for every check")
        p.add_argument("--json", default=None, help="write the JSON report here")
        p.add_argument("--csv", default=None, help="write CSV diagnostics here")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed override")
        p.add_argument("--points", type=int, default=None,
                       help="sample count override")
        p.add_argument("--figures", default=None,
                       help="directory for rendered figures")
        p.add_argument("--quiet", action="store_true",
                       help="suppress per-check lines")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        man = load_manifest(args.manifest)
        report, flow_records = COMMANDS[args.command](man, args)
    except (ManifestError, ParseError, DomainError, NotPositiveDefiniteError,
            fl.FlowBlowupError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    report.elapsed_s = time.perf_counter() - started
    try:
        _write_outputs(report, man, args, flow_records)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    report.print_lines(quiet=args.quiet)
    if not args.quiet:
        print(f"determinism_sha256: {report.determinism_hash()}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
