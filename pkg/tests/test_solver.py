import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpklab.catalog import catalog_drift
from fpklab.errors import Inapplicable, InvalidArgument, InvariantViolation, NonNormalizableDrift
from fpklab.quad import build_uniform
from fpklab.solver import (
    DensityField,
    DriftField,
    PotentialSpec,
    boundedness_check,
    divergence_duality,
    divergence_form_residual,
    l1_error,
    solve,
    stationary_1d,
    weak_residual,
)

from tests.conftest import V, shifted_density


def test_constant_drift_closed_form(q1, const1):
    _, f = const1
    exact = shifted_density(q1.grid.x, V)
    np.testing.assert_allclose(f.values, exact, rtol=1e-12)
    assert f.provenance == "closed-form-1d"
    assert abs(f.normalization_residual) < 1e-8


def test_zero_drift_gives_one(q1):
    v = catalog_drift("constant", {"c": 0.0}, q1.grid)
    np.testing.assert_allclose(solve(v, q1).values, 1.0, rtol=1e-10)


def test_general_potential_log_cosh(q1):
    x = q1.grid.x
    W = 0.5 * x * x + np.log(np.cosh(x))
    pot = PotentialSpec(1.0, "general-1d", W, q1.grid)
    v = catalog_drift("constant", {"c": 0.0}, q1.grid)
    f = stationary_1d(v, pot, q1)
    # mu = e^{-W} / Z relative to gamma is proportional to sech(x)
    ref = 1.0 / np.cosh(x)
    ref = ref / np.sum(ref * q1.weights)
    np.testing.assert_allclose(f.values, ref, rtol=1e-10)


def test_potential_curvature_violation(q1):
    x = q1.grid.x
    with pytest.raises(InvariantViolation):
        PotentialSpec(1.0, "general-1d", 0.25 * x * x, q1.grid)


def test_non_normalizable_drift(q1):
    v = DriftField.from_callable(q1.grid, lambda x: 1.5 * x, "orlicz", m=2.0)
    with pytest.raises(NonNormalizableDrift):
        solve(v, q1)


@pytest.mark.parametrize("key,params", [
    ("constant", {"c": 0.5}),
    ("tanh-bounded", {"c": 0.5}),
    ("bump-compact", {"c": 1.0, "r": 1.0}),
    ("orlicz-m", {"c": 0.4, "m": 2.0}),
    ("orlicz-m", {"c": 0.3, "m": 4.0}),
])
def test_weak_residual_small(q1, key, params):
    v = catalog_drift(key, params, q1.grid)
    assert weak_residual(solve(v, q1), v) < 1e-6


def test_weak_residual_detects_wrong_density(q1, ones1):
    v = catalog_drift("constant", {"c": V}, q1.grid)
    assert weak_residual(ones1, v) > 1e-2


@pytest.mark.parametrize("key,params", [("constant", {"c": 0.5}), ("tanh-bounded", {"c": 0.5})])
def test_divergence_form_residual(q1, key, params):
    v = catalog_drift(key, params, q1.grid)
    assert divergence_form_residual(solve(v, q1), v) < 1e-5


def test_divergence_duality(q1):
    v = catalog_drift("tanh-bounded", {"c": 0.7}, q1.grid)
    assert divergence_duality(v, 1.0, q1) < 1e-8


def test_boundedness_compact_support(bump1):
    v, f = bump1
    r = boundedness_check(f, v)
    assert r.passed
    sups = list(r.constants["sup_f"].values())
    assert max(sups) - min(sups) < 1e-6 * max(sups)


def test_boundedness_inapplicable_for_constant(const1):
    v, f = const1
    with pytest.raises(Inapplicable):
        boundedness_check(f, v)


def test_density_invariants(q1):
    with pytest.raises(InvariantViolation):
        DensityField(q1, 1.1 * np.ones(q1.grid.shape), "closed-form-1d")
    with pytest.raises((InvalidArgument, InvariantViolation)):
        DensityField(q1, -np.ones(q1.grid.shape), "closed-form-1d")


def test_compact_support_invariant(q1):
    with pytest.raises(InvariantViolation):
        DriftField.from_callable(q1.grid, lambda x: np.ones_like(x), "compact-support",
                                 support_radius=1.0)


@pytest.mark.parametrize("n", [81, 161])
def test_2d_separable(n):
    q = build_uniform(8.0, n, 1.0, 2)
    c = (0.5, 0.3)
    f = solve(catalog_drift("constant", {"c": list(c)}, q.grid), q)
    X, Y = q.grid.mesh()
    exact = np.exp(c[0] * X + c[1] * Y - (c[0] ** 2 + c[1] ** 2) / 2)
    np.testing.assert_allclose(f.values, exact, rtol=1e-6)
    assert l1_error(f, lambda x, y: np.exp(c[0] * x + c[1] * y - 0.17)) < 5e-3


def test_2d_zero_drift_exact():
    q = build_uniform(8.0, 81, 1.0, 2)
    f = solve(catalog_drift("constant", {"c": [0.0, 0.0]}, q.grid), q)
    np.testing.assert_allclose(f.values, 1.0, atol=1e-7)


def test_2d_weak_residual(sep2):
    v, f = sep2
    assert weak_residual(f, v) < 1e-6


@settings(max_examples=10, deadline=None)
@given(c=st.floats(-0.8, 0.8))
def test_constant_family_matches_closed_form(q1, c):
    v = catalog_drift("constant", {"c": c}, q1.grid)
    np.testing.assert_allclose(solve(v, q1).values, shifted_density(q1.grid.x, c), rtol=1e-11)
