import math

import mpmath
import numpy as np
import pytest
from scipy.stats import norm

from fpklab import bounds
from fpklab.catalog import catalog_drift
from fpklab.errors import InvalidArgument
from fpklab.norms import orlicz_norm
from fpklab.quad import GridFunction, build_uniform
from fpklab.semigroup import hermite_battery
from fpklab.solver import DensityField, solve

from tests.conftest import V

mpmath.mp.dps = 50


def mp_sigma_m(lam, theta, m):
    a, b = 1 - mpmath.mpf(2) / m, 1 + mpmath.mpf(2) / m
    return a / b * (2 * mpmath.pi * lam * a / mpmath.sqrt(theta)) ** (-2 / b)


# --- constants ---------------------------------------------------------------

def test_sigma_inf():
    assert bounds.sigma_constants(0.5, 1.0, math.inf).sigma_inf == pytest.approx(
        1 / math.pi ** 2, rel=1e-15)


def test_sigma_4_against_high_precision():
    got = bounds.sigma_constants(1.0, 1.0, 4).sigma_m[4.0]
    assert got == pytest.approx(float(mpmath.pi ** (-mpmath.mpf(4) / 3) / 3), rel=1e-14)
    assert got == pytest.approx(float(mp_sigma_m(1, 1, 4)), rel=1e-14)


def test_sigma_2_composed_with_orlicz_norm(gh1):
    lam = orlicz_norm(np.ones(gh1.grid.shape), None, gh1, 2).lam
    assert lam == pytest.approx(1.2011225, abs=1e-7)
    expected = float(mpmath.exp(-2 * mpmath.pi / mpmath.sqrt(mpmath.log(2))))
    assert bounds.sigma_constants(lam, 1.0, 2).sigma_2 == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("lam2", [0.1, 1.2011225, 3.0])
def test_p_star_against_high_precision(lam2):
    exact = 1 / (1 - mpmath.exp(-2 * mpmath.pi * mpmath.mpf(lam2)))
    assert bounds.p_star(lam2) == pytest.approx(float(exact), rel=1e-14)
    assert bounds.p_star_minus_one(lam2) == pytest.approx(float(exact - 1), rel=1e-13)


def test_p_star_limit():
    # p* - 1 ~ 5e-28 is below double resolution around 1, but not on its own
    assert bounds.p_star(10.0) == 1.0
    assert 0 < bounds.p_star_minus_one(10.0) < 1e-26


def test_sigma_m_tends_to_sigma_inf():
    s_inf = bounds.sigma_inf(0.5, 1.0)
    gaps = []
    for m in (4, 8, 16, 32):
        s = bounds.sigma_m(2 ** (1 / m) * 0.5, 1.0, m)
        assert s == pytest.approx(float(mp_sigma_m(2 ** (1 / mpmath.mpf(m)) * 0.5, 1, m)),
                                  rel=1e-13)
        gaps.append(s - s_inf)
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert bounds.sigma_m(2 ** (1 / 4096) * 0.5, 1.0, 4096) - s_inf < 1e-3


@pytest.mark.parametrize("args", [(0.0, 1.0, 2), (1.0, 0.0, 2), (1.0, 1.0, 1.5)])
def test_sigma_argument_errors(args):
    with pytest.raises(InvalidArgument):
        bounds.sigma_constants(*args)


def test_tail_crossover(const1):
    s2 = bounds.sigma_2(V / math.sqrt(math.log(2)), 1.0)
    si = bounds.sigma_inf(V, 1.0)
    t = bounds.tail_crossover(s2, si)
    sig = bounds.SigmaConstants(sigma_2=s2, sigma_inf=si)
    below, above = t / 2, t * 2
    assert bounds.tail_rhs(above, "inf", sig) < bounds.tail_rhs(above, "m2", sig)
    assert bounds.tail_rhs(below, "inf", sig) > bounds.tail_rhs(below, "m2", sig)


# --- tails -------------------------------------------------------------------

def test_tail_inf_example(const1):
    v, f = const1
    r = bounds.check_tail(f, v, "inf", [2.0])
    s = r.samples[0]
    assert s.lhs == pytest.approx(norm.sf((math.log(2) + V * V / 2) / V), rel=1e-4)
    assert s.rhs == pytest.approx(math.e ** 2 * math.exp(-math.log(2) ** 2 / math.pi ** 2))
    assert r.passed


@pytest.mark.parametrize("regime", ["m2", "inf"])
def test_tail_constant_drift(const1, regime):
    v, f = const1
    assert bounds.check_tail(f, v, regime, [2, 5, 10, 100]).passed


def test_tail_zero_drift(q1, ones1):
    v = catalog_drift("constant", {"c": 0.0}, q1.grid)
    r = bounds.check_tail(ones1, v, "m2", [2, 5])
    assert r.passed and all(s.lhs == 0 for s in r.samples)


def test_tail_m4(orlicz4):
    v, f = orlicz4
    assert bounds.check_tail(f, v, "m>2", [2, 5, 10, 100]).passed


def test_tail_inapplicable(tanh1, orlicz2):
    v, f = tanh1
    r = bounds.check_tail(f, v, "m2", [2.0])
    assert r.status == "inapplicable"
    assert r.constants["diagnostics"]["kind"] == "bounded"
    v, f = orlicz2
    assert bounds.check_tail(f, v, "inf", [2.0]).status == "inapplicable"


def test_tail_rejects_levels_below_one(const1):
    v, f = const1
    with pytest.raises(InvalidArgument):
        bounds.check_tail(f, v, "inf", [0.5])


# --- LSI, Kantorovich, integrability, Fisher ------------------------------------

def test_lsi_double_equality(const1):
    v, f = const1
    r = bounds.check_lsi_apriori(f, v)
    assert r.passed
    for s in r.samples:
        assert s.lhs == pytest.approx(0.125, abs=1e-6) and s.rhs == pytest.approx(0.125, abs=1e-6)


def test_lsi_2d(sep2):
    v, f = sep2
    r = bounds.check_lsi_apriori(f, v)
    assert r.passed
    assert r.constants["drift_over_2theta"] == pytest.approx(0.17, abs=5e-3)


def test_lsi_strict_for_tanh(tanh1):
    v, f = tanh1
    r = bounds.check_lsi_apriori(f, v)
    assert r.passed and r.worst_margin > 0


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_kantorovich_equality(const1, p):
    v, f = const1
    s = bounds.check_kantorovich_global(f, v, p).samples[0]
    assert s.lhs == pytest.approx(V ** p, abs=1e-4)
    assert s.rhs == pytest.approx(V ** p, rel=1e-10)


def test_kantorovich_zero(q1, ones1):
    v = catalog_drift("constant", {"c": 0.0}, q1.grid)
    s = bounds.check_kantorovich_global(ones1, v, 2.0).samples[0]
    assert s.lhs == pytest.approx(0.0, abs=1e-12) and s.rhs == 0.0


def test_kantorovich_2d(sep2):
    v, f = sep2
    r = bounds.check_kantorovich_global(f, v, 2.0)
    assert r.passed
    assert r.constants["wp_p_lower"] <= 0.34 <= r.constants["wp_p_upper"]


def test_kantorovich_step_example(const1):
    v, f = const1
    r = bounds.check_kantorovich_step(f, v, 2.0, 0.2, [0.1])
    s = r.samples[0]
    assert math.sqrt(s.lhs) == pytest.approx(V * math.exp(-0.2) * (1 - math.exp(-0.1)), abs=1e-6)
    assert s.rhs == pytest.approx((0.1 * V) ** 2)
    assert r.passed


def test_kantorovich_step_ratio_monotone(const1):
    v, f = const1
    ratios = bounds.check_kantorovich_step(f, v, 2.0, 0.2, [0.01, 0.05, 0.1]).constants["ratios"]
    assert ratios[0] > ratios[1] > ratios[2]


def test_improved_integrability_trivial(q1, ones1):
    for p in (2.0, 4.0):
        r = bounds.check_improved_integrability(ones1, [0.5], p)
        cp = max(1.0, math.exp(p / 2 - 1))
        assert r.samples[0].lhs == pytest.approx(math.log(cp + 1) ** (p / 2), rel=1e-8)
        assert r.passed


def test_improved_integrability_needs_theta_one():
    q = build_uniform(None, None, 2.0)
    f = DensityField(q, np.ones(q.grid.shape), "analytic")
    assert bounds.check_improved_integrability(f, [0.5], 2.0).status == "inapplicable"


def test_improved_integrability_time_range(const1):
    _, f = const1
    with pytest.raises(InvalidArgument):
        bounds.check_improved_integrability(f, [1.5], 2.0)


def test_fisher_monotone_closed_form(const1):
    _, f = const1
    r = bounds.check_fisher_monotone(f, [0.25, 0.5, 1.0])
    assert r.passed
    assert r.constants["fisher"]["1.0"] == pytest.approx(0.25 * math.exp(-2), abs=1e-5)


def test_fisher_monotone_2d(sep2):
    _, f = sep2
    assert bounds.check_fisher_monotone(f, [0.25, 0.5]).passed


# --- master inequality --------------------------------------------------------

def phi_band(q):
    return np.clip(0.1 + 0.03 * np.tanh(q.grid.x), 0.05, math.exp(-2))


def test_master_inequality_m2(q1, const1):
    _, f = const1
    r = bounds.trace_master_inequality(f, V / math.sqrt(math.log(2)), 2, None, phi_band(q1),
                                       np.linspace(0.05, 3, 12))
    assert r.passed and len(r.samples) == 12


def test_master_inequality_zero_drift(q1, ones1):
    r = bounds.trace_master_inequality(ones1, 0.0, 2, None, phi_band(q1), [0.5, 1.0])
    assert r.passed
    assert all(s.lhs < 1e-9 for s in r.samples)


def test_master_inequality_band(q1, const1):
    _, f = const1
    with pytest.raises(InvalidArgument):
        bounds.trace_master_inequality(f, 1.0, 2, None, np.full(q1.grid.shape, 0.5), [1.0])


def test_master_inequality_detects_small_lambda(q1, const1):
    _, f = const1
    r = bounds.trace_master_inequality(f, 1e-3, 2, None, phi_band(q1), [0.5, 1.0])
    assert r.status == "fail"


# --- Poincare, gradients, Lp, log moments -------------------------------------

def test_poincare_linear_equality(q1):
    r = bounds.check_poincare_interpolation([GridFunction(q1.grid, q1.grid.x)], 2.0, 0.5, q1)
    s = r.samples[0]
    assert s.lhs == pytest.approx(1.0, abs=1e-8) and s.rhs == pytest.approx(1.0, abs=1e-8)
    assert r.passed


def test_poincare_quadratic(q1):
    g = GridFunction(q1.grid, q1.grid.x ** 2 - 1)
    s = bounds.check_poincare_interpolation([g], 2.0, 0.5, q1).samples[0]
    assert s.lhs == pytest.approx(2.0, abs=1e-8) and s.rhs == pytest.approx(4.0, abs=1e-8)


def test_poincare_battery_and_exploratory(q1):
    fns = hermite_battery(q1.grid, 20, 6, seed=0)
    assert bounds.check_poincare_interpolation(fns, 2.0, 0.5, q1).passed
    r = bounds.check_poincare_interpolation(fns, 4.0, 0.5, q1)
    assert r.status == "exploratory" and r.constants["fitted_C"] >= 0


def test_gradient_theorem_tanh(tanh1):
    v, f = tanh1
    r = bounds.check_gradient_theorem(f, v, math.inf, [2.0, 4.0, 8.0])
    assert r.status == "exploratory"
    assert all(s.lhs < 1e-3 for s in r.samples)


def test_gradient_theorem_constant_closed_form(const1):
    v, f = const1
    r = bounds.check_gradient_theorem(f, v, math.inf, [2.0, 4.0])
    for p in (2.0, 4.0):
        assert r.constants["norms"][repr(p)][-1] == pytest.approx(
            V * math.exp((p - 1) * V * V / 2), rel=1e-8)


def test_gradient_theorem_m2_reports_p_star(orlicz2):
    v, f = orlicz2
    r = bounds.check_gradient_theorem(f, v, 2.0, [1.5])
    assert r.constants["p_star"] > 1
    assert "p*" in r.notes[0]


def test_lp_membership(q1, const1, orlicz2, ones1):
    for v, f in (const1, orlicz2):
        assert bounds.check_lp_membership(f, v).passed
    zero = catalog_drift("constant", {"c": 0.0}, q1.grid)
    r = bounds.check_lp_membership(ones1, zero, sigma2=0.5)
    assert r.passed and "vacuous" in r.notes[0]


def test_log_moment_scaling(q1):
    make = lambda c, g: catalog_drift("constant", {"c": c}, g)
    r = bounds.check_log_moment_scaling(make, q1, 3.0, 1.0)
    assert r.status == "exploratory"
    assert all(s.lhs <= s.rhs * (1 + 1e-12) for s in r.samples)
    with pytest.raises(InvalidArgument):
        bounds.check_log_moment_scaling(make, q1, 2.0, 1.5)


def test_orlicz_moment_property(orlicz2, orlicz4):
    for (v, f), m in ((orlicz2, 2.0), (orlicz4, 4.0)):
        assert bounds.check_orlicz_moments(v.magnitude(), f, m).passed


# --- sharpness example coordinates ----------------------------------------------

@pytest.mark.parametrize("n", [1, 3, 5])
def test_counterexample(n):
    r = bounds.counterexample_coordinate(n)
    assert r.T_n > 4 ** n
    assert r.c_n >= -2
    assert r.f_at >= 2 ** n - 2
    assert r.bracket[0] <= r.integral <= r.bracket[1]


def test_counterexample_large_n_keeps_log():
    r = bounds.counterexample_coordinate(12)
    assert r.f_at == math.inf and r.log_f_at > 700


def test_counterexample_invalid():
    with pytest.raises(InvalidArgument):
        bounds.counterexample_coordinate(0)
