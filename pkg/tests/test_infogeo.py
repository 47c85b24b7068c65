"""Simplex information geometry: metric, connection family, certificates."""

import numpy as np
import pytest

from hesseflow.expressions import DomainError
from hesseflow.infogeo import (ConnectionCoefficients, SimplexFamily,
                               alpha_connection, duality_pairing_check,
                               fisher_metric, hessian_structure_certificate,
                               levi_civita, metric_derivatives,
                               skewness_tensor)
from hesseflow.potentials import multinomial_logpartition
from hesseflow.structure import structure_at


def test_bernoulli_metric_at_half():
    fam = SimplexFamily(2, "mean")
    assert fisher_metric(fam, [0.5]) == pytest.approx(np.array([[4.0]]))


def test_trinomial_uniform_metric():
    fam = SimplexFamily(3, "natural")
    expected = np.array([[2 / 9, -1 / 9], [-1 / 9, 2 / 9]])
    assert fisher_metric(fam, [0.0, 0.0]) == pytest.approx(expected, abs=1e-15)


def test_bernoulli_natural_vs_logpartition():
    fam = SimplexFamily(2, "natural")
    potential = multinomial_logpartition(2)
    assert fisher_metric(fam, [0.0]) == pytest.approx(np.array([[0.25]]))
    assert potential.jet([0.0], 2).hessian() == pytest.approx(np.array([[0.25]]))


def test_metric_positive_definite_interior(rng):
    fam = SimplexFamily(4, "natural")
    for theta in rng.uniform(-2, 2, (20, 3)):
        assert np.linalg.eigvalsh(fisher_metric(fam, theta)).min() > 0


def test_metric_derivatives_match_fd(rng):
    fam = SimplexFamily(3, "natural")
    theta = np.array([0.3, -0.6])
    dg = metric_derivatives(fam, theta)
    for j in range(2):
        for k in range(2):
            def entry(th):
                return fisher_metric(fam, th)[j, k]
            # first derivative via a 4th-order stencil
            for axis in range(2):
                h = 1e-4
                e = np.zeros(2)
                e[axis] = h
                approx = (-entry(theta + 2 * e) + 8 * entry(theta + e)
                          - 8 * entry(theta - e) + entry(theta - 2 * e)) / (12 * h)
                assert dg[axis, j, k] == pytest.approx(approx, abs=1e-9)


def test_bernoulli_connection_vanishes_at_center():
    fam = SimplexFamily(2, "mean")
    for a in (-1.0, 0.0, 1.0, 3.0):
        coeffs = alpha_connection(fam, [0.5], a)
        assert np.max(np.abs(coeffs.gamma_lower)) < 1e-14


def test_a_zero_is_levi_civita(rng):
    fam = SimplexFamily(3, "natural")
    theta = rng.uniform(-1, 1, 2)
    assert alpha_connection(fam, theta, 0.0).gamma_lower == \
        pytest.approx(levi_civita(fam, theta))


def test_e_connection_flat_in_natural_coordinates(rng):
    fam = SimplexFamily(3, "natural")
    worst = 0.0
    for theta in rng.uniform(-2, 2, (50, 2)):
        worst = max(worst, float(np.max(np.abs(
            alpha_connection(fam, theta, 1.0).gamma_lower))))
    assert worst < 1e-10


def test_connection_affine_in_a(rng):
    fam = SimplexFamily(4, "natural")
    for theta in rng.uniform(-1.5, 1.5, (10, 3)):
        ca = alpha_connection(fam, theta, 0.7).gamma_lower
        cb = alpha_connection(fam, theta, -0.7).gamma_lower
        c0 = alpha_connection(fam, theta, 0.0).gamma_lower
        assert np.max(np.abs(ca + cb - 2 * c0)) < 1e-12


def test_connection_symmetric_pair(rng):
    fam = SimplexFamily(3, "mean")
    p = np.array([0.25, 0.4])
    coeffs = alpha_connection(fam, p, 1.0)
    assert isinstance(coeffs, ConnectionCoefficients)
    assert coeffs.gamma_lower == pytest.approx(
        coeffs.gamma_lower.transpose(1, 0, 2))


class TestDualityPairing:
    def test_bernoulli(self):
        fam = SimplexFamily(2, "mean")
        assert duality_pairing_check(fam, [0.3], 1.0) < 1e-10

    def test_a_zero_metric_compatibility(self, rng):
        fam = SimplexFamily(3, "natural")
        assert duality_pairing_check(fam, rng.uniform(-1, 1, 2), 0.0) < 1e-10

    def test_sign_swap_symmetry(self, rng):
        fam = SimplexFamily(3, "natural")
        theta = rng.uniform(-1, 1, 2)
        assert duality_pairing_check(fam, theta, 1.0) == \
            pytest.approx(duality_pairing_check(fam, theta, -1.0), abs=1e-12)


class TestCertificate:
    def test_bernoulli_witness(self):
        fam = SimplexFamily(2, "mean")
        skew = skewness_tensor(fam, [0.2])
        # third log-derivative moment: 1/p^2 - 1/(1-p)^2 at p = 0.2
        assert skew[0, 0, 0] == pytest.approx(25.0 - 1.0 / 0.64, rel=1e-12)
        gap = np.max(np.abs(alpha_connection(fam, [0.2], 1.0).gamma_lower
                            - levi_civita(fam, [0.2])))
        assert gap == pytest.approx(11.71875, rel=1e-12)
        assert gap > 0.1

    def test_trinomial_certificate(self, rng):
        fam = SimplexFamily(3, "natural")
        cert = hessian_structure_certificate(fam, rng.uniform(-2, 2, (50, 2)))
        assert cert.certified
        assert cert.properness_witness > 0

    def test_mean_coordinates_rejected(self):
        with pytest.raises(ValueError):
            hessian_structure_certificate(SimplexFamily(3, "mean"), [[0.3, 0.3]])

    def test_degenerate_family_rejected(self):
        with pytest.raises(ValueError) as err:
            SimplexFamily(1, "mean")
        assert "dimension 0" in str(err.value)


def test_boundary_points_rejected():
    fam = SimplexFamily(3, "mean")
    with pytest.raises(DomainError):
        fisher_metric(fam, [0.7, 0.3])  # third outcome collapses
    with pytest.raises(DomainError):
        fisher_metric(fam, [0.0, 0.5])


def test_cross_module_consistency_gate(rng):
    """Fisher metric vs the full chart pipeline on the log-partition field."""
    for outcomes in (2, 3, 4):
        fam = SimplexFamily(outcomes, "natural")
        potential = multinomial_logpartition(outcomes)
        for theta in rng.uniform(-1.5, 1.5, (10, outcomes - 1)):
            gf = fisher_metric(fam, theta)
            sp = structure_at(potential, theta)
            assert np.max(np.abs(gf - sp.g)) < 1e-10
