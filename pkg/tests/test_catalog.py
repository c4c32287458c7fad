import math

import numpy as np
import pytest

from fpklab.catalog import available, catalog_drift, smooth_indicator
from fpklab.errors import ConfigError, Unsupported
from fpklab.norms import orlicz_norm
from fpklab.quad import build_uniform
from fpklab.solver import solve


def test_available():
    assert available() == ["bump-compact", "constant", "orlicz-m", "tanh-bounded"]


def test_constant(q1):
    v = catalog_drift("constant", {"c": 0.5}, q1.grid)
    assert v.kind == "constant" and v.sup_norm == 0.5
    np.testing.assert_array_equal(v.values, 0.5)


def test_bump_support(q1):
    v = catalog_drift("bump-compact", {"c": 1.0, "r": 1.0}, q1.grid)
    x = q1.grid.x
    assert np.all(v.values[np.abs(x) > 1.05] == 0.0)
    assert np.all(v.values[np.abs(x) <= 1.0] == 1.0)
    assert v.support_radius == pytest.approx(1.05)


def test_bump_2d():
    q = build_uniform(8.0, 81, 1.0, 2)
    v = catalog_drift("bump-compact", {}, q.grid)
    assert v.sup_norm == pytest.approx(math.sqrt(2))
    assert np.max(v.magnitude()) <= v.sup_norm


def test_smooth_indicator_is_monotone():
    x = np.linspace(0, 2, 2001)
    s = smooth_indicator(x, 1.0, 0.05)
    assert np.all(np.diff(s) <= 0)


@pytest.mark.parametrize("m,c", [(2.0, 0.4), (3.0, 0.3), (4.0, 0.3)])
def test_orlicz_entries_have_finite_norm(q1, m, c):
    v = catalog_drift("orlicz-m", {"c": c, "m": m}, q1.grid)
    f = solve(v, q1)
    lam = orlicz_norm(v.magnitude(), f, q1, m).lam
    assert 0 < lam < math.inf


def test_orlicz_2d_unsupported():
    q = build_uniform(8.0, 41, 1.0, 2)
    with pytest.raises(Unsupported):
        catalog_drift("orlicz-m", {}, q.grid)


def test_unknown_key_lists_available(q1):
    with pytest.raises(ConfigError, match="available: bump-compact, constant"):
        catalog_drift("nope", {}, q1.grid)


def test_bad_params(q1):
    with pytest.raises(ConfigError):
        catalog_drift("constant", {"radius": 1}, q1.grid)
