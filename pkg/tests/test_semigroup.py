import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermeval

from fpklab.errors import InvalidArgument
from fpklab.quad import GridFunction, build_uniform
from fpklab.semigroup import (
    MehlerOperator,
    SemigroupTime,
    apply,
    check_cd,
    check_gradient_commutation,
    check_hypercontractivity,
    check_variance_gradient,
    check_wang_harnack,
    gamma,
    gamma2,
    generator,
    hermite_battery,
    hypercontractive_exponent,
    semigroup_law_defect,
    symmetry_defect,
)


@pytest.fixture(scope="module")
def setup():
    q = build_uniform(8.0, 801, 1.0, 1)
    return q, MehlerOperator(1.0, q.grid)


def inner(q, values):
    return values[q.grid.interior_mask(0.5)]


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
def test_mehler_on_quadratic(theta, t):
    q = build_uniform(None, None, theta)
    T = MehlerOperator(theta, q.grid)
    x = q.grid.x
    # T_t x^2 = e^{-2 theta t} x^2 + (1 - e^{-2 theta t}) / theta
    exact = math.exp(-2 * theta * t) * x ** 2 - math.expm1(-2 * theta * t) / theta
    np.testing.assert_allclose(inner(q, T.apply_array(x ** 2, t)), inner(q, exact), rtol=1e-9)


@pytest.mark.parametrize("a", [0.3, 1.0])
def test_mehler_on_exponential(setup, a):
    q, T = setup
    x, t = q.grid.x, 0.4
    exact = np.exp(a * math.exp(-t) * x - 0.5 * a * a * math.expm1(-2 * t))
    got = T.apply_array(np.exp(a * x), t)
    np.testing.assert_allclose(inner(q, got), inner(q, exact), rtol=1e-8)


def test_mehler_2d_separable():
    q = build_uniform(6.0, 121, 1.0, 2)
    T = MehlerOperator(1.0, q.grid)
    X, Y = q.grid.mesh()
    got = T.apply_array(X * Y, 0.3)
    m = q.grid.interior_mask(0.5)
    np.testing.assert_allclose(got[m], (math.exp(-0.6) * X * Y)[m], atol=1e-9)


def test_time_validation(setup):
    q, T = setup
    with pytest.raises(InvalidArgument):
        SemigroupTime(-1.0)
    g = GridFunction(q.grid, q.grid.x)
    assert np.array_equal(apply(T, g, 0.0).values, g.values)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_generator_eigenfunctions(setup, k):
    q, _ = setup
    c = np.zeros(k + 1)
    c[k] = 1.0
    he = hermeval(q.grid.x, c)
    # L He_k = -k He_k for theta = 1
    np.testing.assert_allclose(inner(q, generator(he, q.grid, 1.0)), inner(q, -k * he), atol=1e-6)


def test_gamma_and_gamma2_closed_forms(setup):
    q, _ = setup
    phi = GridFunction(q.grid, q.grid.x ** 2)
    x = q.grid.x
    np.testing.assert_allclose(inner(q, gamma(phi, phi).values), inner(q, 4 * x ** 2), atol=1e-8)
    np.testing.assert_allclose(inner(q, gamma2(phi, 1.0).values), inner(q, 4 + 4 * x ** 2),
                               atol=1e-6)


def test_cd_equality_on_linear(setup):
    q, _ = setup
    r = check_cd(GridFunction(q.grid, 2 * q.grid.x), 1.0)
    assert r.passed
    assert max(abs(s.margin) for s in r.samples) < 1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_battery_passes(theta):
    q = build_uniform(None, None, theta)
    T = MehlerOperator(theta, q.grid)
    for g, h in zip(hermite_battery(q.grid, 5, 6, seed=3, theta=theta),
                    hermite_battery(q.grid, 5, 6, seed=3, theta=theta, positive=True)):
        assert check_cd(g, theta).passed
        assert check_variance_gradient(g, 0.5, theta, T).passed
        assert check_gradient_commutation(g, 0.5, theta, T).passed
        assert check_hypercontractivity(h, 0.2, 0.6, 2.0, theta, T).passed
        assert check_wang_harnack(h, 0.5, [(0.0, 1.0), (1.0, -1.0)], theta, T).passed
        assert semigroup_law_defect(T, g, 0.3, 0.4) < 1e-7
        assert symmetry_defect(T, g, h, 0.5, q) < 1e-8


def test_hypercontractive_exponent_endpoints():
    assert hypercontractive_exponent(2.0, 0.5, 0.5, 1.0) == pytest.approx(2.0)
    assert hypercontractive_exponent(2.0, 0.2, 0.6, 1.0) > 2.0


def test_check_argument_errors(setup):
    q, T = setup
    g = GridFunction(q.grid, q.grid.x)
    with pytest.raises(InvalidArgument):
        check_hypercontractivity(g, 0.2, 0.6, 2.0, 1.0, T)
    h = GridFunction(q.grid, np.ones(q.grid.shape))
    with pytest.raises(InvalidArgument):
        check_hypercontractivity(h, 0.6, 0.2, 2.0, 1.0, T)
    with pytest.raises(InvalidArgument):
        check_wang_harnack(h, 0.0, [(0.0, 1.0)], 1.0, T)
    with pytest.raises(InvalidArgument):
        check_variance_gradient(g, 0.0, 1.0, T)


def test_violation_detected(setup):
    q, T = setup
    # phi with a gradient-growing transform cannot satisfy commutation with theta = 3
    g = GridFunction(q.grid, np.sin(q.grid.x))
    assert check_gradient_commutation(g, 0.5, 3.0, T).status == "fail"


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.05, 2.0))
def test_positivity_and_mass_preservation(setup, seed, t):
    q, T = setup
    h = hermite_battery(q.grid, 1, 6, seed=seed, positive=True)[0]
    Th = T.apply_array(h.values, t)
    assert np.all(Th > 0)
    assert np.sum(Th * q.weights) == pytest.approx(np.sum(h.values * q.weights), rel=1e-9)
