"""Soliton residuals, the dual construction and trace identities."""

import numpy as np
import pytest

from hesseflow.solitons import (ExpressionVectorField, NumericVectorField,
                                SolitonSpec, alpha_sharp_field, divergence,
                                dual_gradient_residual, dual_soliton,
                                einstein_fit, hessian_of_function,
                                lie_alpha_sharp_residual,
                                lie_derivative_metric, soliton_residual,
                                steady_killing_check, trace_identity_residual,
                                vector_field_of, zero_field)
from hesseflow.structure import structure_at
import hesseflow.expressions as ex

from conftest import cone_samples

LOG_CONE_SOURCE = "-log(x2^2 - x1^2)"


def vf(sources, dim=2):
    return ExpressionVectorField(
        tuple(ex.parse_potential(s, dim) for s in sources), dim)


class TestLieDerivative:
    def test_zero_field(self, quad2):
        sp = structure_at(quad2, [0.5, 0.5])
        assert np.max(np.abs(lie_derivative_metric(sp, zero_field(2)))) == 0.0

    def test_position_field_on_flat_metric(self, quad2):
        sp = structure_at(quad2, [0.3, -0.7])
        lie = lie_derivative_metric(sp, vf(["x1", "x2"]))
        assert lie == pytest.approx(2 * np.eye(2), abs=1e-14)

    def test_rotation_field_is_killing(self, quad2, rng):
        rot = vf(["-x2", "x1"])
        for x in rng.uniform(-1, 1, (5, 2)):
            sp = structure_at(quad2, x)
            assert np.max(np.abs(lie_derivative_metric(sp, rot))) < 1e-14

    def test_coordinate_formula_oracle(self, torus_field, rng):
        """Covariant form vs the chartwise X^k dg + g dX + g dX expansion."""
        field_x = vf(["sin(x2)", "x1*x2"])
        for x in rng.uniform(0, 2 * np.pi, (5, 2)):
            sp = structure_at(torus_field, x)
            lie = lie_derivative_metric(sp, field_x)
            xv = field_x.value(x)
            jac = field_x.jacobian(x)
            oracle = (2 * np.einsum("ijk,k->ij", sp.gamma_lower, xv)
                      + np.einsum("kj,ki->ij", sp.g, jac)
                      + np.einsum("ik,kj->ij", sp.g, jac))
            assert lie == pytest.approx(oracle, abs=1e-12)


class TestHessianOfFunction:
    def test_constant(self, cone2):
        sp = structure_at(cone2, [0.1, 1.2])
        h = hessian_of_function(sp, ex.Num(3.0))
        assert np.max(np.abs(h)) == 0.0

    def test_flat_quadratic_potential(self, quad2):
        sp = structure_at(quad2, [0.4, 0.2])
        f = ex.parse_potential("x1^2/2 + x2^2/2", 2)
        assert hessian_of_function(sp, f) == pytest.approx(np.eye(2))

    def test_cone_potential_hand_value(self, cone2):
        """Gamma contraction cancels the metric in the (1,1) entry at (0,1)."""
        sp = structure_at(cone2, [0.0, 1.0])
        h = hessian_of_function(sp, ex.parse_potential(LOG_CONE_SOURCE, 2))
        assert h[0, 0] == pytest.approx(0.0, abs=1e-12)
        # dF = alpha here, so the whole covariant Hessian equals nabla(alpha)
        assert h == pytest.approx(sp.nabla_alpha, abs=1e-12)


class TestSolitonResidual:
    def test_cone_is_expanding_instance(self, cone2, rng):
        spec = SolitonSpec.vector(["0", "0"], 1.0, 2)
        assert spec.classification == "expanding"
        for x in cone_samples(rng, 10):
            sp = structure_at(cone2, x)
            _, worst = soliton_residual(sp, spec)
            assert worst < 1e-10

    def test_quadratic_trivial_steady(self, quad2):
        sp = structure_at(quad2, [0.2, 0.8])
        spec = SolitonSpec.vector(["0", "0"], 0.0, 2)
        assert spec.classification == "steady"
        assert soliton_residual(sp, spec)[1] == 0.0

    def test_quadratic_fails_expanding(self, quad2):
        sp = structure_at(quad2, [0.2, 0.8])
        tensor, worst = soliton_residual(sp, SolitonSpec.vector(["0", "0"], 1.0, 2))
        assert worst == pytest.approx(1.0)
        assert tensor == pytest.approx(-np.eye(2))

    def test_gradient_equals_vector_with_raised_gradient(self, cone2, rng):
        """Gradient form vs vector form with X = grad f through the metric."""
        spec_g = SolitonSpec.gradient("x1*x2", 0.5, 2)
        X = vector_field_of(spec_g, cone2)
        for x in cone_samples(rng, 5):
            sp = structure_at(cone2, x)
            _, res_g = soliton_residual(sp, spec_g)
            vec_tensor = sp.beta - 0.5 * lie_derivative_metric(sp, X) - 0.5 * sp.g
            grad_tensor = soliton_residual(sp, spec_g)[0]
            assert vec_tensor == pytest.approx(grad_tensor, abs=1e-10)

    def test_classification_matches_sign(self):
        for lam, kind in [(2.0, "expanding"), (0.0, "steady"), (-1.0, "shrinking")]:
            assert SolitonSpec.vector(["0"], lam, 1).classification == kind

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SolitonSpec(kind="vector", lam=0.0, f_expr=ex.Num(1.0))
        with pytest.raises(ValueError):
            SolitonSpec(kind="gradient", lam=0.0)
        with pytest.raises(ValueError):
            SolitonSpec.vector(["0"], 0.0, 2)


class TestEinsteinFit:
    def test_cone_n2(self, cone2, rng):
        lam, res = einstein_fit(cone2, cone_samples(rng, 100))
        assert lam == pytest.approx(1.0, abs=1e-9)
        assert res < 1e-9

    def test_cone_n3(self, cone3, rng):
        lam, res = einstein_fit(cone3, cone_samples(rng, 50, dim=3))
        assert lam == pytest.approx(1.5, abs=1e-9)
        assert res < 1e-9

    def test_quadratic(self, quad2, rng):
        lam, res = einstein_fit(quad2, rng.uniform(-1, 1, (20, 2)))
        assert lam == 0.0 and res == 0.0

    def test_torus_is_not_einstein(self, torus_field, rng):
        lam, res = einstein_fit(torus_field, rng.uniform(0, 2 * np.pi, (30, 2)))
        assert res > 1e-3  # observed ~5e-2 at eps = 0.05

    def test_empty_samples_rejected(self, quad2):
        with pytest.raises(ValueError):
            einstein_fit(quad2, np.zeros((0, 2)))


class TestDualSoliton:
    def test_cone_dual_residual(self, cone2, rng):
        spec = SolitonSpec.vector(["0", "0"], 1.0, 2)
        for x in cone_samples(rng, 10):
            sp = structure_at(cone2, x)
            result = dual_soliton(sp, spec, cone2)
            assert result.max_residual < 1e-8

    def test_quadratic_dual_equals_primal(self, quad2):
        sp = structure_at(quad2, [0.4, -0.2])
        spec = SolitonSpec.vector(["0", "0"], 0.0, 2)
        result = dual_soliton(sp, spec, quad2)
        assert result.max_residual < 1e-12  # alpha = 0 so nothing moves

    def test_gradient_corollary_on_cone(self, cone2, rng):
        """Dual potential f - 2F with dF = alpha; for this chart F is the
        volume-density potential and its covariant Hessian is nabla(alpha)."""
        spec = SolitonSpec.gradient("0", 1.0, 2)
        for x in cone_samples(rng, 5):
            sp = structure_at(cone2, x)
            _, primal = soliton_residual(sp, spec)
            assert primal < 1e-10
            _, dual = dual_gradient_residual(sp, spec)
            assert dual < 1e-8
        with pytest.raises(ValueError):
            dual_gradient_residual(sp, SolitonSpec.vector(["0", "0"], 1.0, 2))

    def test_explicit_dual_potential_matches(self, cone2, rng):
        """On the cone chart alpha = d(phi), so f - 2*phi is the dual
        potential; its covariant Hessian reproduces the internal route."""
        from hesseflow.solitons import hessian_of_function
        f_minus_2F = ex.parse_potential(f"0 - 2*({LOG_CONE_SOURCE})", 2)
        spec = SolitonSpec.gradient("0", 1.0, 2)
        for x in cone_samples(rng, 5):
            sp = structure_at(cone2, x)
            explicit = sp.beta_dual - hessian_of_function(sp, f_minus_2F) - sp.g
            internal, _ = dual_gradient_residual(sp, spec)
            assert explicit == pytest.approx(internal, abs=1e-9)

    def test_lie_alpha_sharp_identity(self, cone2, torus_field, quartic_field, rng):
        for field, pts in [(cone2, cone_samples(rng, 5)),
                           (torus_field, rng.uniform(0, 6.28, (5, 2))),
                           (quartic_field, rng.uniform(-0.5, 0.5, (5, 2)))]:
            for x in pts:
                sp = structure_at(field, x)
                assert lie_alpha_sharp_residual(sp, field) < 1e-8

    def test_dual_implied_by_primal_randomized(self, quad2, cone2, rng):
        """Whenever the primal residual vanishes, so does the dual one."""
        killing = SolitonSpec.vector(["-x2", "x1"], 0.0, 2)
        cone_spec = SolitonSpec.vector(["0", "0"], 1.0, 2)
        for x in rng.uniform(-1, 1, (5, 2)):
            sp = structure_at(quad2, x)
            assert soliton_residual(sp, killing)[1] < 1e-10
            assert dual_soliton(sp, killing, quad2).max_residual < 1e-8
        for x in cone_samples(rng, 5):
            sp = structure_at(cone2, x)
            assert soliton_residual(sp, cone_spec)[1] < 1e-10
            assert dual_soliton(sp, cone_spec, cone2).max_residual < 1e-8


class TestSteadyAndTraces:
    def test_rotation_certifies_steady(self, quad2):
        sp = structure_at(quad2, [0.5, 0.1])
        report = steady_killing_check(sp, vf(["-x2", "x1"]))
        assert report.certified
        assert report.beta_norm == 0.0 and report.lie_norm == 0.0

    def test_position_field_not_certified(self, quad2):
        sp = structure_at(quad2, [0.5, 0.1])
        report = steady_killing_check(sp, vf(["x1", "x2"]))
        assert not report.certified
        assert report.lie_norm == pytest.approx(2 * np.sqrt(2))

    def test_cone_not_steady(self, cone2):
        sp = structure_at(cone2, [0.0, 1.0])
        report = steady_killing_check(sp, zero_field(2))
        assert not report.certified
        assert report.beta_norm == pytest.approx(np.sqrt(2), rel=1e-12)

    def test_trace_identities(self, quad2, cone2, torus_field, rng):
        sp = structure_at(quad2, [0.3, 0.3])
        out = trace_identity_residual(sp, SolitonSpec.vector(["0", "0"], 0.0, 2))
        assert out["koszul_trace"] == 0.0
        assert out["soliton_trace"] == 0.0

        sp = structure_at(cone2, [0.0, 1.0])
        out = trace_identity_residual(sp, SolitonSpec.vector(["0", "0"], 1.0, 2))
        assert abs(out["koszul_trace"]) < 1e-12
        assert abs(out["soliton_trace"]) < 1e-12

        for x in rng.uniform(0, 6.28, (5, 2)):
            sp = structure_at(torus_field, x)
            assert abs(trace_identity_residual(sp)["koszul_trace"]) < 1e-8

    def test_divergence_of_position_field(self, quad2):
        sp = structure_at(quad2, [1.0, 2.0])
        assert divergence(sp, vf(["x1", "x2"])) == pytest.approx(2.0)


def test_numeric_field_jacobian_matches_exact(cone2, rng):
    """FD-with-Richardson wrapper vs the closed-form sharp derivative."""
    sharp = alpha_sharp_field(cone2)
    for x in cone_samples(rng, 5):
        sp = structure_at(cone2, x)
        # exact: d(g^{jk} alpha_k) = -2 g gamma g alpha + g^{jk} beta_{ik}
        dginv = -2.0 * np.einsum("ja,abi,bk->jki", sp.g_inv, sp.gamma_lower, sp.g_inv)
        exact = (np.einsum("jki,k->ji", dginv, sp.alpha)
                 + np.einsum("jk,ik->ji", sp.g_inv, sp.beta))
        assert sharp.jacobian(x) == pytest.approx(exact, abs=1e-9)
