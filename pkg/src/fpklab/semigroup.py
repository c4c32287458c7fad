"""Ornstein-Uhlenbeck semigroup, carré du champ operators and the semigroup
inequalities the integrability estimates rely on.

``T_t`` is evaluated through the Mehler representation

    T_t g(x) = E g(exp(-theta t) x + sqrt((1 - exp(-2 theta t)) / theta) Z),

with ``Z`` standard normal, using an inner Gauss-Hermite rule and a cubic
spline of ``g`` between grid nodes.  In 2D the kernel factorizes and the
1D operator is applied along each axis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from fpklab.errors import InvalidArgument
from fpklab.quad import (
    GaussQuadrature,
    Grid,
    GridFunction,
    _values,
    build_gauss_hermite,
    gradient_arrays,
    hessian_arrays,
)
from fpklab.report import BoundReport

logger = logging.getLogger(__name__)

MIN_INNER_NODES = 64
INTERIOR_FRACTION = 0.5


@dataclass(frozen=True)
class SemigroupTime:
    t: float

    def __post_init__(self):
        if not np.isfinite(self.t) or self.t < 0:
            raise InvalidArgument("semigroup time must be >= 0")


@dataclass(frozen=True)
class MehlerOperator:
    """``T_t`` for ``L = Laplace - theta <x, grad>`` on a uniform target grid."""

    theta: float
    grid: Grid
    inner: GaussQuadrature = field(default=None)

    def __post_init__(self):
        if self.theta <= 0:
            raise InvalidArgument("theta must be positive")
        inner = self.inner if self.inner is not None else build_gauss_hermite(MIN_INNER_NODES, 1.0)
        if inner.grid.size < MIN_INNER_NODES or inner.grid.dimension != 1:
            raise InvalidArgument(f"inner rule needs >= {MIN_INNER_NODES} 1D nodes")
        if inner.theta != 1.0:
            raise InvalidArgument("inner rule must integrate against the standard normal")
        object.__setattr__(self, "inner", inner)

    def coefficients(self, t: float) -> tuple:
        a = np.exp(-self.theta * t)
        sd = np.sqrt(-np.expm1(-2.0 * self.theta * t) / self.theta)
        return a, sd

    def _along_axis(self, values: np.ndarray, t: float, axis: int, targets) -> np.ndarray:
        nodes = self.grid.axes[axis]
        a, sd = self.coefficients(t)
        z, w = self.inner.grid.x, self.inner.weights
        pts = a * np.asarray(targets, dtype=float)[..., None] + sd * z
        clipped = np.clip(pts, nodes[0], nodes[-1])
        outside = pts != clipped
        if outside.any():
            # only mass leaving the grid from interior targets is worth a warning
            lost = np.where(outside, w, 0.0).sum(axis=-1)
            inner = np.abs(np.asarray(targets)) <= INTERIOR_FRACTION * self.grid.radius
            worst = float(np.max(lost[inner], initial=0.0))
            log = logger.warning if worst > 1e-9 else logger.debug
            log("Mehler evaluation left the grid at %d points (max interior kernel weight "
                "%.3g); using edge values", int(outside.sum()), worst)
        spline = CubicSpline(nodes, values, axis=axis)
        vals = spline(clipped)
        # vals has the (targets, inner) axes inserted at position `axis`
        vals = np.moveaxis(vals, axis + pts.ndim - 1, -1)
        return vals @ w

    def apply_array(self, values: np.ndarray, t: float) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if t == 0:
            return values.copy()
        out = values
        for k in range(self.grid.dimension):
            out = self._along_axis(out, t, k, self.grid.axes[k])
        return out

    def apply_at(self, g, t: float, points) -> np.ndarray:
        """``T_t g`` at arbitrary 1D points (grid values of ``g`` interpolated)."""
        if self.grid.dimension != 1:
            raise InvalidArgument("point evaluation is implemented for 1D grids")
        SemigroupTime(t)
        values = _values(g)
        pts = np.asarray(points, dtype=float)
        if t == 0:
            return CubicSpline(self.grid.x, values)(pts)
        return self._along_axis(values, t, 0, pts)


def apply(T: MehlerOperator, g: GridFunction, t) -> GridFunction:
    """Return ``T_t g`` on the operator's grid."""
    t = t.t if isinstance(t, SemigroupTime) else SemigroupTime(float(t)).t
    if not g.grid.same_as(T.grid):
        raise InvalidArgument("grid function and operator use different grids")
    return g.with_values(T.apply_array(g.values, t))


def generator(phi, grid: Grid, theta: float) -> np.ndarray:
    """``L phi = Laplace(phi) - theta <x, grad phi>`` by finite differences."""
    v = _values(phi)
    grads = gradient_arrays(v, grid)
    H = hessian_arrays(v, grid)
    out = np.zeros_like(v)
    for k, c in enumerate(grid.mesh()):
        out += H[k][k] - theta * c * grads[k]
    return out


def gamma(phi: GridFunction, psi: GridFunction) -> GridFunction:
    """Carré du champ ``<grad phi, grad psi>``."""
    gp = gradient_arrays(phi.values, phi.grid)
    gq = gradient_arrays(psi.values, psi.grid)
    return phi.with_values(sum(a * b for a, b in zip(gp, gq)))


def gamma2(phi: GridFunction, theta: float) -> GridFunction:
    """``||D^2 phi||_HS^2 + theta |grad phi|^2`` for the potential ``theta |x|^2 / 2``."""
    g = gradient_arrays(phi.values, phi.grid)
    H = hessian_arrays(phi.values, phi.grid)
    hs = sum(H[i][j] ** 2 for i in range(len(H)) for j in range(len(H)))
    return phi.with_values(hs + theta * sum(c * c for c in g))


def hermite_battery(grid: Grid, count: int = 20, degree: int = 6, seed: int = 0,
                    theta: float = 1.0, positive: bool = False) -> list:
    """Seeded random combinations of Hermite polynomials.

    Signed members are ``sum_j c_j He_j(sqrt(theta) x) / j!`` with
    ``c_j ~ U(-1, 1)``, ``1 <= j <= degree`` (tensor products with total
    degree <= ``degree`` in 2D).  Positive members are
    ``exp(psi * exp(-theta |x|^2 / 8))`` for a signed member ``psi``: smooth,
    bounded and bounded away from zero.
    """
    from numpy.polynomial.hermite_e import hermeval
    from math import factorial

    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    out = []
    for _ in range(count):
        if grid.dimension == 1:
            c = rng.uniform(-1, 1, degree + 1)
            c[0] = 0.0
            c = c / np.array([factorial(j) for j in range(degree + 1)])
            psi = hermeval(np.sqrt(theta) * mesh[0], c)
        else:
            psi = np.zeros(grid.shape)
            for j in range(degree + 1):
                for k in range(degree + 1 - j):
                    if j + k == 0:
                        continue
                    cj = np.zeros(j + 1)
                    cj[j] = 1.0
                    ck = np.zeros(k + 1)
                    ck[k] = 1.0
                    psi += (rng.uniform(-1, 1) / (factorial(j) * factorial(k))
                            * hermeval(np.sqrt(theta) * mesh[0], cj)
                            * hermeval(np.sqrt(theta) * mesh[1], ck))
        if positive:
            r2 = sum(m * m for m in mesh)
            psi = np.exp(psi * np.exp(-theta * r2 / 8.0))
        out.append(GridFunction(grid, psi))
    return out


def _interior(grid: Grid) -> np.ndarray:
    return grid.interior_mask(INTERIOR_FRACTION)


def _node_params(grid: Grid, mask: np.ndarray) -> list:
    pts = np.stack([c[mask] for c in grid.mesh()], axis=-1)
    return [p[0] if len(p) == 1 else tuple(p) for p in pts.tolist()]


def check_cd(phi: GridFunction, theta: float, tol: float = 1e-9) -> BoundReport:
    """Pointwise curvature-dimension inequality ``Gamma_2 >= theta Gamma``."""
    mask = _interior(phi.grid)
    lhs = theta * gamma(phi, phi).values[mask]
    rhs = gamma2(phi, theta).values[mask]
    return BoundReport.from_comparisons(
        "check_cd", _node_params(phi.grid, mask), lhs, rhs, rtol=tol, atol=tol,
        inputs={"theta": theta},
        notes=("interior nodes |x_i| <= R/2",),
    )


def check_variance_gradient(phi: GridFunction, t: float, theta: float,
                            T: MehlerOperator | None = None) -> BoundReport:
    """``(exp(2 theta t) - 1)/theta * Gamma(T_t phi) <= T_t phi^2 - (T_t phi)^2``."""
    if not 0 < t <= 5.0 / theta:
        raise InvalidArgument("need 0 < t <= 5/theta")
    T = T or MehlerOperator(theta, phi.grid)
    Tphi = apply(T, phi, t)
    Tphi2 = T.apply_array(phi.values ** 2, t)
    var = Tphi2 - Tphi.values ** 2
    grad_term = np.expm1(2 * theta * t) / theta * gamma(Tphi, Tphi).values
    mask = _interior(phi.grid)
    scale = float(np.max(np.abs(Tphi2[mask]))) if mask.any() else 1.0
    return BoundReport.from_comparisons(
        "check_variance_gradient", _node_params(phi.grid, mask), grad_term[mask], var[mask],
        rtol=1e-7, atol=1e-7 * max(scale, 1e-300),
        inputs={"t": t, "theta": theta}, constants={"scale": scale},
    )


def hypercontractive_exponent(p: float, s: float, t: float, theta: float) -> float:
    """``q`` with ``(q-1)/(p-1) = (exp(2 theta t)-1)/(exp(2 theta s)-1)``."""
    return 1.0 + (p - 1.0) * np.expm1(2 * theta * t) / np.expm1(2 * theta * s)


def check_hypercontractivity(phi: GridFunction, s: float, t: float, p: float, theta: float,
                             T: MehlerOperator | None = None) -> BoundReport:
    """``(T_s (T_{t-s} phi)^q)^{1/q} <= (T_t phi^p)^{1/p}`` at interior nodes."""
    if p <= 1:
        raise InvalidArgument("hypercontractivity needs p > 1")
    if not 0 < s < t:
        raise InvalidArgument("need 0 < s < t")
    if np.any(phi.values < 0):
        raise InvalidArgument("phi must be nonnegative")
    q = hypercontractive_exponent(p, s, t, theta)
    inputs = {"s": s, "t": t, "p": p, "theta": theta}
    if q < 1:
        return BoundReport.inapplicable("check_hypercontractivity", "exponent q < 1 out of range",
                                        inputs, {"q": q})
    T = T or MehlerOperator(theta, phi.grid)
    inner = T.apply_array(phi.values, t - s)
    lhs = np.maximum(T.apply_array(np.maximum(inner, 0.0) ** q, s), 0.0) ** (1.0 / q)
    rhs = np.maximum(T.apply_array(phi.values ** p, t), 0.0) ** (1.0 / p)
    mask = _interior(phi.grid)
    return BoundReport.from_comparisons(
        "check_hypercontractivity", _node_params(phi.grid, mask), lhs[mask], rhs[mask],
        rtol=1e-7, inputs=inputs, constants={"q": q},
    )


def check_gradient_commutation(g: GridFunction, s: float, theta: float,
                               T: MehlerOperator | None = None) -> BoundReport:
    """``|grad T_s g| <= exp(-theta s) T_s |grad g|`` at interior nodes."""
    if s <= 0:
        raise InvalidArgument("s must be positive")
    T = T or MehlerOperator(theta, g.grid)
    Tg = T.apply_array(g.values, s)
    lhs = np.sqrt(sum(c * c for c in gradient_arrays(Tg, g.grid)))
    abs_grad = np.sqrt(sum(c * c for c in gradient_arrays(g.values, g.grid)))
    rhs = np.exp(-theta * s) * T.apply_array(abs_grad, s)
    mask = _interior(g.grid)
    return BoundReport.from_comparisons(
        "check_gradient_commutation", _node_params(g.grid, mask), lhs[mask], rhs[mask],
        rtol=1e-7, inputs={"s": s, "theta": theta},
    )


def check_wang_harnack(h: GridFunction, t: float, pairs, theta: float = 1.0,
                       T: MehlerOperator | None = None) -> BoundReport:
    """``T_t h^{1/2}(y) <= (T_t h(x))^{1/2} exp(|x-y|^2 / 4t)`` for sampled pairs."""
    if t <= 0:
        raise InvalidArgument("t must be positive")
    if np.any(h.values < 0):
        raise InvalidArgument("h must be nonnegative")
    T = T or MehlerOperator(theta, h.grid)
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    xs, ys = pairs[:, 0], pairs[:, 1]
    lhs = T.apply_at(np.sqrt(h.values), t, ys)
    rhs = np.sqrt(np.maximum(T.apply_at(h.values, t, xs), 0.0)) * np.exp((xs - ys) ** 2 / (4 * t))
    return BoundReport.from_comparisons(
        "check_wang_harnack", [tuple(p) for p in pairs.tolist()], lhs, rhs, rtol=1e-7,
        inputs={"t": t, "theta": theta},
    )


def semigroup_law_defect(T: MehlerOperator, g, s: float, t: float) -> float:
    """``max |T_s T_t g - T_{s+t} g| / max |T_{s+t} g|`` over interior nodes."""
    vals = _values(g)
    a = T.apply_array(T.apply_array(vals, t), s)
    b = T.apply_array(vals, s + t)
    mask = _interior(T.grid)
    return float(np.max(np.abs(a - b)[mask]) / max(np.max(np.abs(b[mask])), 1e-300))


def symmetry_defect(T: MehlerOperator, g, h, t: float, q: GaussQuadrature) -> float:
    """``|int g T_t h - int h T_t g| / (||g||_2 ||h||_2)`` against ``gamma``."""
    gv, hv = _values(g), _values(h)
    w = q.weights
    lhs = float(np.sum(gv * T.apply_array(hv, t) * w))
    rhs = float(np.sum(hv * T.apply_array(gv, t) * w))
    scale = float(np.sqrt(np.sum(gv * gv * w) * np.sum(hv * hv * w)))
    return abs(lhs - rhs) / max(scale, 1e-300)
