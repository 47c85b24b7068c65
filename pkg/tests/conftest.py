"""Shared fixtures and the independent finite-difference oracles.

The FD helpers exist so derived expected values are recomputed here from
plain point evaluations, never from the jet machinery they are checking.
"""

from __future__ import annotations

import numpy as np
import pytest

from hesseflow.potentials import (from_expression, log_cone, quadratic,
                                  torus_perturbed)

QUARTIC_SOURCE = "x1^2/2 + x2^2/2 + 0.01*(x1^4 + x1^2*x2^2)"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def cone2():
    return log_cone(2)


@pytest.fixture
def cone3():
    return log_cone(3)


@pytest.fixture
def quad2():
    return quadratic(2)


@pytest.fixture
def torus_field():
    return torus_perturbed(2, 0.05, (1, 1))


@pytest.fixture
def quartic_field():
    return from_expression(QUARTIC_SOURCE, 2, name="quartic")


def cone_samples(rng, count, dim=2):
    """Points comfortably inside the forward cone."""
    body = rng.uniform(-0.35, 0.35, (count, dim - 1))
    apex = rng.uniform(1.0, 1.8, (count, 1))
    return np.hstack([body, apex])


def fd_derivative(f, x, axis, h=None):
    """4th-order central first derivative of a scalar function."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-4 * max(1.0, float(np.max(np.abs(x))))
    e = np.zeros_like(x)
    e[axis] = h
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


def fd_gradient(f, x, h=None):
    return np.array([fd_derivative(f, x, a, h) for a in range(len(x))])


def fd_hessian(f, x, h=None):
    """4th-order central second derivatives (5-point per axis)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if h is None:
        h = 1e-3 * max(1.0, float(np.max(np.abs(x))))
    out = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[i, i] = (-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x)
                     + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)
        for j in range(i + 1, n):
            def di(base):
                return fd_derivative(f, base, i, h)
            ej = np.zeros(n)
            ej[j] = h
            val = (-di(x + 2 * ej) + 8 * di(x + ej)
                   - 8 * di(x - ej) + di(x - 2 * ej)) / (12 * h)
            out[i, j] = out[j, i] = val
    return out
