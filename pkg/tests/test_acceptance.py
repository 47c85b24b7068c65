"""Acceptance gate: one test per criterion, each printing PASS or FAIL.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here, not configurable.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from hesseflow.flow import (beta_on_grid, flow_step, metric_grid, metric_of,
                            metric_patch_from_field, torus_grid,
                            torus_integrals)
from hesseflow.infogeo import (SimplexFamily, alpha_connection,
                               duality_pairing_check, fisher_metric)
from hesseflow.potentials import (from_expression, log_cone,
                                  multinomial_logpartition, quadratic,
                                  torus_perturbed)
from hesseflow.solitons import (SolitonSpec, dual_soliton, einstein_fit,
                                lie_alpha_sharp_residual, soliton_residual)
from hesseflow.structure import (beta_scale_residual, bochner_residual,
                                 riemann_product_residual, structure_at,
                                 verify_identities)

from conftest import QUARTIC_SOURCE, cone_samples, fd_gradient, fd_hessian


def report(num: int, passed: bool, detail: str) -> None:
    print(f"criterion {num}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {num}: {detail}"


def acceptance_fields(rng, total=200):
    """The seeded point budget across the criterion-1 field roster."""
    roster = [
        (quadratic(3), lambda k: rng.uniform(-1.5, 1.5, (k, 3))),
        (log_cone(2), lambda k: cone_samples(rng, k, 2)),
        (log_cone(3), lambda k: cone_samples(rng, k, 3)),
        (torus_perturbed(2, 0.01, (1, 1)),
         lambda k: rng.uniform(0, 2 * np.pi, (k, 2))),
        (torus_perturbed(2, 0.05, (1, 1)),
         lambda k: rng.uniform(0, 2 * np.pi, (k, 2))),
        (from_expression(QUARTIC_SOURCE, 2, name="quartic"),
         lambda k: rng.uniform(-0.6, 0.6, (k, 2))),
    ]
    per = total // len(roster)
    counts = [per] * len(roster)
    counts[0] += total - per * len(roster)
    return [(field, sampler(k)) for (field, sampler), k in zip(roster, counts)]


def test_criterion_1_identity_suite():
    rng = np.random.default_rng(1001)
    started = time.perf_counter()
    tracked = ("alpha_trace_vs_logdet", "beta_vs_H_trace",
               "scalar_curvature_identity", "dual_alpha_negation",
               "dual_beta_relation", "nabla_gamma_total_symmetry")
    worst = {name: 0.0 for name in tracked}
    worst["curvature_product_vs_oracle"] = 0.0
    points = 0
    for field, pts in acceptance_fields(rng, total=200):
        for x in pts:
            points += 1
            sp = structure_at(field, x)
            for check in verify_identities(sp):
                if check.name in worst:
                    worst[check.name] = max(worst[check.name], check.residual)
            worst["curvature_product_vs_oracle"] = max(
                worst["curvature_product_vs_oracle"],
                riemann_product_residual(field, x))
    elapsed = time.perf_counter() - started
    peak = max(worst.values())
    report(1, peak < 1e-8 and elapsed < 10.0 and points == 200,
           f"{points} points, worst residual {peak:.2e} (< 1e-8), "
           f"{elapsed:.1f}s (< 10s)")


def test_criterion_2_bochner_identity():
    rng = np.random.default_rng(1002)
    started = time.perf_counter()
    quartic = from_expression(QUARTIC_SOURCE, 2, name="quartic")
    cone = log_cone(2)
    worst = 0.0
    for x in rng.uniform(-0.6, 0.6, (25, 2)):
        worst = max(worst, abs(bochner_residual(quartic, x).residual))
    for x in cone_samples(rng, 25):
        worst = max(worst, abs(bochner_residual(cone, x).residual))
    elapsed = time.perf_counter() - started
    report(2, worst < 1e-6 and elapsed < 30.0,
           f"50 points, worst |residual| {worst:.2e} (< 1e-6), "
           f"{elapsed:.1f}s (< 30s)")


def test_criterion_3_log_cone_einstein():
    # The derived point anchor is reproduced with independent stencils first.
    def phi(x):
        return -np.log(x[1] ** 2 - x[0] ** 2)

    x0 = np.array([0.0, 1.0])
    anchor_ok = (
        np.allclose(fd_hessian(phi, x0), np.diag([2.0, 2.0]), atol=1e-7)
        and np.allclose(fd_gradient(phi, x0), [0.0, -2.0], atol=1e-9))
    sp = structure_at(log_cone(2), x0)
    anchor_ok &= bool(
        np.allclose(sp.g, np.diag([2.0, 2.0]), atol=1e-12)
        and np.allclose(sp.beta, np.diag([2.0, 2.0]), atol=1e-12)
        and np.allclose(sp.alpha, [0.0, -2.0], atol=1e-12)
        and np.max(np.abs(sp.nabla_alpha)) < 1e-12
        and abs(sp.R) < 1e-12)

    rng = np.random.default_rng(1003)
    results = []
    for n in (2, 3):
        lam, residual = einstein_fit(log_cone(n), cone_samples(rng, 100, n))
        results.append((n, lam, residual))
    fits_ok = all(abs(lam - n / 2) < 1e-8 and residual < 1e-8
                  for n, lam, residual in results)
    detail = ", ".join(f"n={n}: lam={lam:.12f}, res={r:.2e}"
                       for n, lam, r in results)
    report(3, anchor_ok and fits_ok, f"anchor reproduced; {detail}")


def test_criterion_4_dual_soliton():
    rng = np.random.default_rng(1004)
    dual_worst = 0.0
    for n in (2, 3):
        field = log_cone(n)
        spec = SolitonSpec.vector(("0",) * n, n / 2, n)
        for x in cone_samples(rng, 50, n):
            sp = structure_at(field, x)
            assert soliton_residual(sp, spec)[1] < 1e-10
            dual_worst = max(dual_worst,
                             dual_soliton(sp, spec, field).max_residual)
    lie_worst = 0.0
    roster = [
        (quadratic(2), rng.uniform(-1, 1, (10, 2))),
        (log_cone(2), cone_samples(rng, 10)),
        (torus_perturbed(2, 0.05, (1, 1)), rng.uniform(0, 2 * np.pi, (10, 2))),
        (from_expression(QUARTIC_SOURCE, 2), rng.uniform(-0.5, 0.5, (10, 2))),
    ]
    for field, pts in roster:
        for x in pts:
            sp = structure_at(field, x)
            lie_worst = max(lie_worst, lie_alpha_sharp_residual(sp, field))
    report(4, dual_worst < 1e-8 and lie_worst < 1e-8,
           f"dual residual {dual_worst:.2e} at 100 cone samples, "
           f"Lie identity {lie_worst:.2e} on all fields (< 1e-8)")


def test_criterion_5_scale_invariance():
    rng = np.random.default_rng(1005)
    jet_worst = 0.0
    for field, pts in [(log_cone(2), cone_samples(rng, 5)),
                       (torus_perturbed(2, 0.05, (1, 1)),
                        rng.uniform(0, 2 * np.pi, (5, 2)))]:
        for x in pts:
            jet_worst = max(jet_worst, beta_scale_residual(field, x))

    grid = torus_grid(lambda X, Y: 0.05 * np.sin(X) * np.sin(Y), (64, 64))
    gm = metric_grid(metric_of(grid), grid.spacing, grid.origin)
    base = beta_on_grid(gm)
    grid_worst = 0.0
    for c in (0.5, 2.0, 10.0):
        scaled = beta_on_grid(replace(gm, state=c * gm.state))
        grid_worst = max(grid_worst, float(np.max(np.abs(scaled - base))))
    report(5, jet_worst < 1e-12 and grid_worst < 1e-12,
           f"jet pipeline {jet_worst:.2e}, grid pipeline {grid_worst:.2e} "
           "(< 1e-12) for c in {0.5, 2, 10}")


def test_criterion_6_flow_exactness():
    started = time.perf_counter()
    lam = 1.0
    base = metric_patch_from_field(log_cone(2), center=(0.0, 1.0),
                                   spacing=1e-2, shape=(33, 33))
    g0 = metric_of(base).copy()
    grid = replace(base, boundary_fn=lambda t: (1 + 2 * lam * t) * g0)
    for _ in range(100):
        grid = flow_step(grid, 1e-3, "rk4")
    exact = (1 + 2 * lam * grid.t) * g0
    sup_err = float(np.max(np.abs((metric_of(grid) - exact)[grid.interior()])))

    def integrate(dt, steps):
        g = torus_grid(lambda X, Y: 0.05 * np.sin(X) * np.sin(Y), (16, 16))
        for _ in range(steps):
            g = flow_step(g, dt, "rk4")
        return g.state

    d1 = np.max(np.abs(integrate(8e-3, 6) - integrate(4e-3, 12)))
    d2 = np.max(np.abs(integrate(4e-3, 12) - integrate(2e-3, 24)))
    order = float(np.log2(d1 / d2))
    elapsed = time.perf_counter() - started
    report(6, sup_err < 1e-6 and order >= 3.5 and elapsed < 60.0,
           f"patch sup error {sup_err:.2e} at t=0.1 (< 1e-6), RK4 order "
           f"{order:.2f} (>= 3.5), {elapsed:.1f}s (< 60s)")


def test_criterion_7_compact_integral_identity():
    grid = torus_grid(lambda X, Y: 0.05 * np.sin(X) * np.sin(Y), (96, 96))
    worst = 0.0
    nonneg = True
    ints = torus_integrals(grid)
    worst = abs(ints.beta_trace - ints.alpha_sq)
    nonneg &= ints.alpha_sq >= 0.0
    for _ in range(50):
        grid = flow_step(grid, 5e-4, "rk4")
        ints = torus_integrals(grid)
        worst = max(worst, abs(ints.beta_trace - ints.alpha_sq))
        nonneg &= ints.alpha_sq >= 0.0
    report(7, worst < 1e-7 and nonneg,
           f"trace-identity gap {worst:.2e} across 50 flow steps (< 1e-7), "
           f"energy integral nonnegative: {nonneg}")


def test_criterion_8_information_geometry():
    rng = np.random.default_rng(1008)
    bern = fisher_metric(SimplexFamily(2, "mean"), [0.5])[0, 0]
    tri = fisher_metric(SimplexFamily(3, "natural"), [0.0, 0.0])
    expected_tri = np.array([[2 / 9, -1 / 9], [-1 / 9, 2 / 9]])
    metrics_ok = (abs(bern - 4.0) < 1e-12
                  and np.max(np.abs(tri - expected_tri)) < 1e-12)

    fam = SimplexFamily(3, "natural")
    potential = multinomial_logpartition(3)
    flat = 0.0
    pairing = 0.0
    cross = 0.0
    for theta in rng.uniform(-2, 2, (50, 2)):
        flat = max(flat, float(np.max(np.abs(
            alpha_connection(fam, theta, 1.0).gamma_lower))))
        pairing = max(pairing, duality_pairing_check(fam, theta, 1.0))
        sp = structure_at(potential, theta)
        cross = max(cross, float(np.max(np.abs(fisher_metric(fam, theta) - sp.g))))
    report(8, metrics_ok and flat < 1e-10 and pairing < 1e-10 and cross < 1e-10,
           f"anchors exact, flat-connection sup {flat:.2e}, pairing "
           f"{pairing:.2e}, cross-module gap {cross:.2e} (< 1e-10)")


def test_criterion_9_determinism(tmp_path):
    from hesseflow.cli import main

    manifest = tmp_path / "det.cfg"
    manifest.write_text("""
[potential]
family = log_cone
n = 2

[samples]
seed = 42
count = 20
box = -0.4:0.4, 1.0:1.8
""")
    hashes = []
    for run in range(2):
        out = tmp_path / f"r{run}.json"
        code = main(["verify", str(manifest), "--json", str(out), "--quiet"])
        assert code == 0
        hashes.append(json.loads(out.read_text())["determinism_sha256"])
    report(9, hashes[0] == hashes[1],
           f"fixed-seed report hashes identical: {hashes[0][:16]}...")
