import math

import numpy as np
import pytest

from fpklab.catalog import catalog_drift
from fpklab.quad import build_gauss_hermite, build_uniform
from fpklab.solver import DensityField, solve

V = 0.5

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def q1():
    return build_uniform(8.0, 801, 1.0, 1)


@pytest.fixture(scope="session")
def gh1():
    return build_gauss_hermite(64, 1.0, 1)


@pytest.fixture(scope="session")
def const1(q1):
    v = catalog_drift("constant", {"c": V}, q1.grid)
    return v, solve(v, q1)


@pytest.fixture(scope="session")
def tanh1(q1):
    v = catalog_drift("tanh-bounded", {"c": V}, q1.grid)
    return v, solve(v, q1)


@pytest.fixture(scope="session")
def orlicz2(q1):
    v = catalog_drift("orlicz-m", {"c": 0.4, "m": 2.0}, q1.grid)
    return v, solve(v, q1)


@pytest.fixture(scope="session")
def orlicz4(q1):
    v = catalog_drift("orlicz-m", {"c": 0.3, "m": 4.0}, q1.grid)
    return v, solve(v, q1)


@pytest.fixture(scope="session")
def bump1(q1):
    v = catalog_drift("bump-compact", {"c": 1.0, "r": 1.0}, q1.grid)
    return v, solve(v, q1)


@pytest.fixture(scope="session")
def ones1(q1):
    return DensityField(q1, np.ones(q1.grid.shape), "analytic")


@pytest.fixture(scope="session")
def sep2():
    q = build_uniform(8.0, 161, 1.0, 2)
    v = catalog_drift("constant", {"c": [0.5, 0.3]}, q.grid)
    return v, solve(v, q)


def shifted_density(x, shift):
    """``exp(shift x - shift^2/2)``: the N(shift, 1) density relative to gamma."""
    return np.exp(shift * np.asarray(x) - shift * shift / 2.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


__all__ = ["V", "ACCEPTANCE", "shifted_density", "math"]
