"""Stationary densities of OU generators perturbed by a drift ``v``.

The stationary equation ``L_v^* (f gamma) = 0`` is solved exactly in 1D,
where ``f`` is an explicit exponential of a primitive of ``v``, and by an
exponentially fitted finite-volume scheme in 2D.  Densities are always taken
relative to the reference Gaussian ``gamma`` with covariance ``I/theta``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.sparse.linalg import splu

from fpklab.errors import (
    DiscretizationFailure,
    Inapplicable,
    InvalidArgument,
    InvariantViolation,
    NonNormalizableDrift,
    Unsupported,
)
from fpklab.quad import (
    GaussQuadrature,
    Grid,
    GridFunction,
    build_uniform,
    diff2,
    gradient_arrays,
    integrate,
)
from fpklab.report import BoundReport

logger = logging.getLogger(__name__)

DRIFT_KINDS = ("constant", "bounded", "compact-support", "orlicz")
PROVENANCES = ("closed-form-1d", "fd-2d", "analytic")
NORMALIZATION_TOL = {"closed-form-1d": 1e-8, "analytic": 1e-8, "fd-2d": 1e-6}
KERNEL_SHIFT = 1e-12
KERNEL_TOL = 1e-12
KERNEL_RESIDUAL_TOL = 1e-8
BOUNDEDNESS_RADII = (6.0, 8.0, 10.0)
BOUNDEDNESS_TOL = 1e-4
WEAK_FORM_SPACING = 0.02
SUBCELLS_PER_FEATURE = 20
MAX_REFINE = 64


@dataclass(frozen=True)
class DriftField:
    """Samples of a drift ``v`` on a grid together with its declared class.

    ``kind`` is one of ``constant``, ``bounded``, ``compact-support`` or
    ``orlicz``; ``m`` is the declared Orlicz exponent for the latter.  When
    ``func`` is given (a callable of the mesh coordinates returning the
    components) the drift can be resampled on other grids, and
    ``feature_width`` (the smallest length scale of ``v``, e.g. a
    mollification width) lets integrals resolve it by sub-sampling.
    """

    grid: Grid
    components: tuple
    kind: str
    sup_norm: float | None = None
    support_radius: float | None = None
    m: float | None = None
    name: str = "drift"
    params: dict = field(default_factory=dict)
    func: object = field(default=None, compare=False, repr=False)
    feature_width: float | None = None

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise InvalidArgument(f"unknown drift class {self.kind!r}; expected one of {DRIFT_KINDS}")
        comps = tuple(np.array(c, dtype=float) for c in self.components)
        if len(comps) != self.grid.dimension:
            raise InvalidArgument("drift needs one component per grid dimension")
        for c in comps:
            if c.shape != self.grid.shape:
                raise InvalidArgument("drift component does not match the grid")
            c.setflags(write=False)
        object.__setattr__(self, "components", comps)
        mag = self.magnitude()
        if self.kind == "compact-support":
            if self.support_radius is None:
                raise InvalidArgument("compact-support drift needs a support radius")
            # box norm, matching tensor-product bumps
            outside = np.logical_or.reduce(
                [np.abs(c) > self.support_radius + 1e-12 for c in self.grid.mesh()])
            if np.any(mag[outside] != 0.0):
                raise InvariantViolation("drift is nonzero outside its declared support")
        if self.kind in ("bounded", "constant", "compact-support") and self.sup_norm is not None:
            if np.max(mag) > self.sup_norm + 1e-12:
                raise InvariantViolation("drift exceeds its declared sup-norm")
        if self.kind == "orlicz" and (self.m is None or self.m < 2):
            raise InvalidArgument("Orlicz drift needs a declared exponent m >= 2")

    @classmethod
    def from_callable(cls, grid: Grid, fn, kind: str, **kw) -> "DriftField":
        comps = fn(*grid.mesh())
        if grid.dimension == 1 and not isinstance(comps, tuple):
            comps = (comps,)
        comps = tuple(np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in comps)
        return cls(grid, comps, kind, func=fn, **kw)

    def resample(self, grid: Grid) -> "DriftField":
        if self.func is None:
            raise Unsupported("drift has no analytic form to resample")
        return DriftField.from_callable(
            grid, self.func, self.kind, sup_norm=self.sup_norm,
            support_radius=self.support_radius, m=self.m, name=self.name, params=self.params,
            feature_width=self.feature_width)

    def resolution(self, default: float) -> float:
        """Grid spacing needed to integrate against this drift."""
        if self.func is None or self.feature_width is None:
            return default
        return min(default, self.feature_width / SUBCELLS_PER_FEATURE)

    def evaluate(self, *coords) -> tuple:
        """Components at arbitrary points (needs ``func``)."""
        if self.func is None:
            raise Unsupported("drift has no analytic form")
        out = self.func(*coords)
        if not isinstance(out, tuple):
            out = (out,)
        shape = np.broadcast(*coords).shape
        return tuple(np.broadcast_to(np.asarray(c, dtype=float), shape) for c in out)

    @property
    def values(self) -> np.ndarray:
        """The single component of a 1D drift."""
        if self.grid.dimension != 1:
            raise InvalidArgument("values is only defined for 1D drifts")
        return self.components[0]

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.components))

    def is_zero(self) -> bool:
        return bool(np.all(self.magnitude() == 0.0))

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "m": self.m,
                "sup_norm": self.sup_norm, "support_radius": self.support_radius,
                **{k: v for k, v in self.params.items()}}


@dataclass(frozen=True)
class DensityField:
    """Density ``f >= 0`` relative to the reference Gaussian of ``quadrature``."""

    quadrature: GaussQuadrature
    values: np.ndarray
    provenance: str = "analytic"
    normalization_residual: float = field(default=None)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidArgument(f"unknown provenance {self.provenance!r}")
        f = np.array(self.values, dtype=float)
        if f.shape != self.quadrature.grid.shape:
            raise InvalidArgument("density does not match the quadrature grid")
        if not np.all(np.isfinite(f)):
            raise InvariantViolation("density has non-finite values")
        if np.any(f < 0):
            raise InvariantViolation("density takes negative values")
        f.setflags(write=False)
        object.__setattr__(self, "values", f)
        resid = abs(float(np.sum(f * self.quadrature.weights)) - 1.0)
        object.__setattr__(self, "normalization_residual", resid)
        tol = NORMALIZATION_TOL[self.provenance]
        if resid > tol:
            raise InvariantViolation(
                f"density integrates to 1 {resid:+.3e} away (tolerance {tol:g})")

    @classmethod
    def normalized(cls, quadrature: GaussQuadrature, values, provenance: str = "analytic"):
        f = np.asarray(values, dtype=float)
        mass = float(np.sum(f * quadrature.weights))
        if not mass > 0:
            raise InvariantViolation("density has no mass on the grid")
        return cls(quadrature, f / mass, provenance)

    @property
    def grid(self) -> Grid:
        return self.quadrature.grid

    @property
    def theta(self) -> float:
        return self.quadrature.theta

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values)


@dataclass(frozen=True)
class PotentialSpec:
    """Confining potential: ``quadratic`` (``theta |x|^2 / 2``) or sampled ``general-1d``."""

    theta: float
    form: str = "quadratic"
    W: np.ndarray | None = None
    grid: Grid | None = None

    def __post_init__(self):
        if not self.theta > 0:
            raise InvalidArgument("theta must be positive")
        if self.form == "quadratic":
            return
        if self.form != "general-1d":
            raise InvalidArgument(f"unknown potential form {self.form!r}")
        if self.W is None or self.grid is None or self.grid.dimension != 1:
            raise InvalidArgument("general-1d potential needs W samples on a 1D grid")
        W = np.asarray(self.W, dtype=float)
        if W.shape != self.grid.shape:
            raise InvalidArgument("W samples do not match the grid")
        curv = diff2(W, self.grid.h)[1:-1]
        if curv.min() < self.theta - 1e-9:
            raise InvariantViolation(
                f"W'' drops to {curv.min():.6g} below the declared bound theta={self.theta}")

    def excess(self, x: np.ndarray) -> np.ndarray:
        """``theta x^2 / 2 - W(x)`` (zero for the quadratic potential)."""
        if self.form == "quadratic":
            return np.zeros_like(x)
        return 0.5 * self.theta * x * x - np.asarray(self.W, dtype=float)


def _factor(h: float, target: float, cap: int = MAX_REFINE) -> int:
    return int(min(cap, max(1, np.ceil(h / target - 1e-9))))


def _primitive(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``int_0^x v`` by composite Simpson, accumulated outward from the center."""
    mid = x.size // 2
    out = np.empty_like(x)
    out[mid:] = cumulative_simpson(v[mid:], x=x[mid:], initial=0.0)
    # mirror the left half so the accumulation also starts at the center
    left = cumulative_simpson(v[mid::-1], x=-x[mid::-1], initial=0.0)
    out[:mid + 1] = -left[::-1]
    return out


def stationary_1d(v: DriftField, pot: PotentialSpec, quadrature: GaussQuadrature) -> DensityField:
    """Exact stationary density ``f = exp(int_0^x v + theta x^2/2 - W) / Z``.

    Raises
    ------
    NonNormalizableDrift
        If the weighted density is still growing at the edge of the grid.
    """
    grid = quadrature.grid
    if grid.dimension != 1 or v.grid.dimension != 1:
        raise InvalidArgument("stationary_1d needs a 1D drift and grid")
    if grid.spacing != "uniform":
        raise Unsupported("stationary_1d needs a uniform grid")
    if not v.grid.same_as(grid):
        raise InvalidArgument("drift and quadrature use different grids")
    if abs(pot.theta - quadrature.theta) > 1e-15 * pot.theta:
        raise InvalidArgument("potential and reference measure disagree on theta")
    x = grid.x
    factor = _factor(grid.h, v.resolution(grid.h))
    if factor > 1:
        # resolve narrow drift features on a sub-grid, then sample back
        fine = np.linspace(x[0], x[-1], (x.size - 1) * factor + 1)
        prim = _primitive(fine, v.evaluate(fine)[0])[::factor]
    else:
        prim = _primitive(x, v.values)
    logf = prim + pot.excess(x)
    # Lebesgue-scale integrand, used to detect mass growing towards the edges
    logmu = logf - 0.5 * quadrature.theta * x * x
    peak = logmu.max()
    for edge, inward in ((0, 1), (-1, -2)):
        if logmu[edge] >= logmu[inward] and logmu[edge] - peak > np.log(1e-12):
            raise NonNormalizableDrift(
                "stationary density does not decay at the grid edge "
                f"(edge/peak ratio {np.exp(logmu[edge] - peak):.3e})")
    f = np.exp(logf - logf.max())
    return DensityField.normalized(quadrature, f, "closed-form-1d")


def _bernoulli(z: np.ndarray) -> np.ndarray:
    """``B(z) = z / (exp(z) - 1)`` with the removable singularity at 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-10
    out[nz] = z[nz] / np.expm1(z[nz])
    small = ~nz
    out[small] = 1.0 - 0.5 * z[small]
    return out


def _face_drift(v: DriftField, grid: Grid, axis: int, theta: float) -> np.ndarray:
    """Normal component of ``b = -theta x + v`` at the faces between nodes along ``axis``."""
    x0, x1 = grid.axes
    if axis == 0:
        xm = 0.5 * (x0[:-1] + x0[1:])
        X, Y = np.meshgrid(xm, x1, indexing="ij")
    else:
        ym = 0.5 * (x1[:-1] + x1[1:])
        X, Y = np.meshgrid(x0, ym, indexing="ij")
    if v.func is not None:
        comp = v.evaluate(X, Y)[axis]
    else:
        c = v.components[axis]
        comp = 0.5 * (c[:-1, :] + c[1:, :]) if axis == 0 else 0.5 * (c[:, :-1] + c[:, 1:])
    coord = X if axis == 0 else Y
    return -theta * coord + comp


def _assemble(v: DriftField, grid: Grid, theta: float) -> sp.csc_matrix:
    """Finite-volume operator ``A`` with ``(A rho)_i`` the net inflow into cell ``i``."""
    nx, ny = grid.shape
    h = grid.h
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []
    for axis in (0, 1):
        b = _face_drift(v, grid, axis, theta)
        # flux from node a to node c: J = (B(-b h) rho_a - B(b h) rho_c) / h, times face length h
        ka = _bernoulli(-b * h)
        kc = _bernoulli(b * h)
        # faces on the boundary rows/cols of the transverse axis are half length
        length = np.full(b.shape, h)
        if axis == 0:
            length[:, 0] = length[:, -1] = h / 2
            a, c = idx[:-1, :], idx[1:, :]
        else:
            length[0, :] = length[-1, :] = h / 2
            a, c = idx[:, :-1], idx[:, 1:]
        wa = (ka * length / h).ravel()
        wc = (kc * length / h).ravel()
        a, c = a.ravel(), c.ravel()
        # outflow of a -> c at rate wa, backflow c -> a at rate wc
        rows += [c, a, a, c]
        cols += [a, a, c, c]
        vals += [wa, -wa, wc, -wc]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nx * ny, nx * ny))
    return A.tocsc()


def _kernel_vector(A: sp.csc_matrix, max_iter: int = 50) -> np.ndarray:
    n = A.shape[0]
    lu = splu((A - KERNEL_SHIFT * sp.identity(n, format="csc")).tocsc())
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = lu.solve(x)
        y = y / y.sum()
        done = np.max(np.abs(y - x)) < KERNEL_TOL * np.max(np.abs(y))
        x = y
        if done:
            break
    else:
        raise DiscretizationFailure("inverse iteration did not converge")
    resid = np.max(np.abs(A @ x)) / (abs(A).max() * np.max(np.abs(x)))
    if resid > KERNEL_RESIDUAL_TOL or np.any(x <= 0):
        raise DiscretizationFailure(
            f"no positive kernel vector (residual {resid:.2e}, min {x.min():.2e})")
    return x


def stationary_2d(v: DriftField, theta: float, quadrature: GaussQuadrature) -> DensityField:
    """Scharfetter-Gummel finite-volume solve of ``div(grad rho - b rho) = 0``.

    ``b = -theta x + v`` is evaluated at face midpoints and the box boundary
    carries zero flux.  The nodal Lebesgue density ``rho`` is the kernel
    vector of the assembled operator; ``f = rho / gamma`` is renormalized
    against ``quadrature``.  For ``v = 0`` (and any constant ``v``) the
    scheme is exact at the nodes.
    """
    grid = quadrature.grid
    if grid.dimension != 2 or grid.spacing != "uniform":
        raise InvalidArgument("stationary_2d needs a 2D uniform grid")
    if not v.grid.same_as(grid):
        raise InvalidArgument("drift and quadrature use different grids")
    if v.kind == "orlicz" and v.sup_norm is None:
        raise InvalidArgument("stationary_2d needs a bounded drift")
    A = _assemble(v, grid, theta)
    rho = _kernel_vector(A).reshape(grid.shape)
    X, Y = grid.mesh()
    # divide by the unnormalized Gaussian; the constant goes into the normalization
    f = rho * np.exp(0.5 * theta * (X * X + Y * Y) - 0.5 * theta * grid.radius ** 2)
    return DensityField.normalized(quadrature, f, "fd-2d")


def l1_error(f: DensityField, exact, points: int = 4) -> float:
    """Continuous ``L^1(gamma)`` distance between the piecewise (bi)linear
    interpolant of ``f`` and the callable ``exact``.

    Each cell is integrated with a ``points``-node Gauss-Legendre rule per
    axis against the Gaussian density, so the result measures the grid
    solution as a function rather than at the nodes only.
    """
    grid = f.grid
    if grid.spacing != "uniform":
        raise Unsupported("l1_error needs a uniform grid")
    s, w = np.polynomial.legendre.leggauss(points)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    h = grid.h
    theta = f.theta
    F = f.values
    total = 0.0
    if grid.dimension == 1:
        x0 = grid.x[:-1]
        for sk, wk in zip(s, w):
            xs = x0 + sk * h
            interp = (1 - sk) * F[:-1] + sk * F[1:]
            dens = np.sqrt(theta / (2 * np.pi)) * np.exp(-0.5 * theta * xs * xs)
            total += wk * h * np.sum(np.abs(interp - exact(xs)) * dens)
        return float(total)
    x0, y0 = np.meshgrid(grid.axes[0][:-1], grid.axes[1][:-1], indexing="ij")
    for si, wi in zip(s, w):
        for sj, wj in zip(s, w):
            xs, ys = x0 + si * h, y0 + sj * h
            interp = ((1 - si) * (1 - sj) * F[:-1, :-1] + si * (1 - sj) * F[1:, :-1]
                      + (1 - si) * sj * F[:-1, 1:] + si * sj * F[1:, 1:])
            dens = theta / (2 * np.pi) * np.exp(-0.5 * theta * (xs * xs + ys * ys))
            total += wi * wj * h * h * np.sum(np.abs(interp - exact(xs, ys)) * dens)
    return float(total)


def solve(v: DriftField, quadrature: GaussQuadrature, pot: PotentialSpec | None = None):
    """Dispatch to the 1D closed form or the 2D finite-volume solver."""
    pot = pot or PotentialSpec(quadrature.theta)
    if quadrature.grid.dimension == 1:
        return stationary_1d(v, pot, quadrature)
    if pot.form != "quadratic":
        raise Unsupported("2D solves support the quadratic potential only")
    return stationary_2d(v, quadrature.theta, quadrature)


# --- weak form -------------------------------------------------------------

@dataclass(frozen=True)
class BumpSamples:
    """Values and analytic first/second derivatives of a test function on a grid."""

    value: np.ndarray
    grad: tuple
    hess: tuple

    @property
    def scale(self) -> float:
        g = np.sqrt(sum(c * c for c in self.grad))
        H = np.sqrt(sum(c * c for row in self.hess for c in row))
        return float(np.max(np.abs(self.value)) + np.max(g) + np.max(H))


@dataclass(frozen=True)
class BumpFunction:
    """Tensor product of tilted bumps ``(1 + a s) exp(-1/(1 - s^2))``, ``s = (x - c)/r``.

    Smooth and compactly supported, with derivatives in closed form.
    """

    center: tuple
    radius: tuple
    tilt: tuple
    label: str = ""

    def on(self, grid: Grid) -> BumpSamples:
        mesh = grid.mesh()
        parts = [_bump_1d(X, c, r, a) for X, c, r, a in zip(mesh, self.center, self.radius, self.tilt)]
        if grid.dimension == 1:
            val, d1, d2 = parts[0]
            return BumpSamples(val, (d1,), ((d2,),))
        (fx, fx1, fx2), (fy, fy1, fy2) = parts
        return BumpSamples(fx * fy, (fx1 * fy, fx * fy1),
                           ((fx2 * fy, fx1 * fy1), (fx1 * fy1, fx * fy2)))

    def scale(self, grid: Grid) -> float:
        """``sup |phi| + sup |grad phi| + sup |D^2 phi|`` sampled on ``grid``."""
        return self.on(grid).scale




def _bump_1d(x, c, r, a):
    s = (x - c) / r
    inside = np.abs(s) < 1
    u = np.where(inside, 1.0 - s * s, 1.0)
    e = np.where(inside, np.exp(-1.0 / u), 0.0)
    # derivatives in s of exp(-1/u) with u = 1 - s^2
    e1 = e * (-2.0 * s / u ** 2)
    e2 = e * ((2.0 * s / u ** 2) ** 2 - (2.0 / u ** 2 + 8.0 * s * s / u ** 3))
    p, p1 = 1.0 + a * s, a
    val = p * e
    d1 = (p1 * e + p * e1) / r
    d2 = (2 * p1 * e1 + p * e2) / r ** 2
    return val, d1, d2


def bump_battery(grid: Grid, count: int = 24, seed: int = 0) -> list:
    """Seeded bumps with random centers, radii and linear tilts.

    Radii lie in ``[1.5, 3]`` (capped at ``0.4 R``) and supports stay
    inside ``|x| <= min(6, 0.85 R)``, so the box edge is never touched.
    """
    if count < 20:
        raise InvalidArgument("the weak-form battery needs at least 20 test functions")
    rng = np.random.default_rng(seed)
    dim = grid.dimension
    limit = min(6.0, 0.85 * grid.radius)
    rmax = min(3.0, 0.4 * grid.radius)
    out = []
    for k in range(count):
        r = rng.uniform(min(1.5, rmax), rmax, dim)
        c = rng.uniform(-1.0, 1.0, dim) * (limit - r)
        a = rng.uniform(-0.8, 0.8, dim)
        out.append(BumpFunction(tuple(c), tuple(r), tuple(a), f"bump{k}"))
    return out


def _generator_of(phi: BumpSamples, grid: Grid, theta: float) -> np.ndarray:
    lap = sum(phi.hess[k][k] for k in range(grid.dimension))
    return lap - theta * sum(c * g for c, g in zip(grid.mesh(), phi.grad))


def _refine(f: DensityField, v: DriftField, factor: int):
    """Spline-interpolate ``f`` (and ``v`` unless analytic) onto a ``factor``-times finer grid."""
    grid = f.grid
    n = (grid.shape[0] - 1) * factor + 1
    q = build_uniform(grid.radius, n, f.theta, grid.dimension)
    if grid.dimension == 1:
        interp = lambda vals: CubicSpline(grid.x, vals)(q.grid.x)
    else:
        interp = lambda vals: RectBivariateSpline(grid.axes[0], grid.axes[1], vals)(
            q.grid.axes[0], q.grid.axes[1])
    fine_f = interp(f.values)
    if v.func is not None:
        comps = v.resample(q.grid).components
    else:
        comps = tuple(interp(c) for c in v.components)
    return q, fine_f, comps


def weak_residual(f: DensityField, v: DriftField, theta: float | None = None,
                  battery: list | None = None, seed: int = 0,
                  resolution: float | None = None) -> float:
    """Largest normalized defect of ``int (L phi) f dgamma + int <grad phi, v> f dgamma = 0``.

    Each defect is divided by ``sup |phi| + sup |grad phi| + sup |D^2 phi|``.
    Coarse grids are spline-refined to spacing ``<= resolution`` before
    integrating, since the trapezoid rule resolves the bumps only on a fine
    grid.
    """
    theta = f.theta if theta is None else theta
    grid = f.grid
    if not v.grid.same_as(grid):
        raise InvalidArgument("drift and density use different grids")
    battery = battery if battery is not None else bump_battery(grid, seed=seed)
    if len(battery) < 20:
        raise InvalidArgument("the weak-form battery needs at least 20 test functions")
    resolution = v.resolution(WEAK_FORM_SPACING) if resolution is None else resolution
    factor = _factor(grid.h, resolution, MAX_REFINE if grid.dimension == 1 else 8)
    if factor > 1:
        q, fvals, comps = _refine(f, v, factor)
    else:
        q, fvals, comps = f.quadrature, f.values, v.components
    w = q.weights * fvals
    worst = 0.0
    for phi in battery:
        b = phi.on(q.grid)
        drift = sum(g * c for g, c in zip(b.grad, comps))
        r = float(np.sum((_generator_of(b, q.grid, theta) + drift) * w))
        worst = max(worst, abs(r) / b.scale)
    return worst


def divergence_gamma(w: DriftField, theta: float) -> GridFunction:
    """``delta_gamma w = div w - theta <w, x>`` by finite differences."""
    grid = w.grid
    div = sum(gradient_arrays(c, grid)[k] for k, c in enumerate(w.components))
    return GridFunction(grid, div - theta * sum(c * x for c, x in zip(w.components, grid.mesh())))


def divergence_duality(w: DriftField, theta: float, quadrature: GaussQuadrature,
                       battery: list | None = None, seed: int = 0) -> float:
    """Largest ``|int <grad phi, w> dgamma + int phi delta_gamma w dgamma|`` over the battery."""
    battery = battery if battery is not None else bump_battery(w.grid, seed=seed)
    delta = divergence_gamma(w, theta).values
    worst = 0.0
    for phi in battery:
        b = phi.on(w.grid)
        lhs = integrate(sum(g * c for g, c in zip(b.grad, w.components)), quadrature)
        worst = max(worst, abs(lhs + integrate(b.value * delta, quadrature)))
    return worst


def divergence_form_residual(f: DensityField, v: DriftField, theta: float | None = None,
                             battery: list | None = None, seed: int = 0) -> float:
    """Weak defect of ``L f - delta_gamma(f v) = 0`` with both sides by finite differences.

    The default bumps are supported in ``|x| <= 6``, away from the one-sided
    stencils at the box edge when ``R >= 8``.
    """
    theta = f.theta if theta is None else theta
    grid = f.grid
    battery = battery if battery is not None else bump_battery(grid, seed=seed)
    grads = gradient_arrays(f.values, grid)
    lap = sum(diff2(f.values, grid.h, axis=k) for k in range(grid.dimension))
    Lf = lap - theta * sum(c * g for c, g in zip(grid.mesh(), grads))
    fv = DriftField(grid, tuple(f.values * c for c in v.components), "bounded")
    defect = Lf - divergence_gamma(fv, theta).values
    worst = 0.0
    for phi in battery:
        b = phi.on(grid)
        worst = max(worst, abs(integrate(b.value * defect, f.quadrature)) / b.scale)
    return worst


# --- boundedness -----------------------------------------------------------

def boundedness_check(f: DensityField, v: DriftField,
                      radii: tuple = BOUNDEDNESS_RADII) -> BoundReport:
    """Stability of ``sup f`` as the truncation box grows at fixed spacing.

    Raises
    ------
    Inapplicable
        Unless ``v`` is compactly supported (or identically zero).
    """
    inputs = {"drift": v.describe(), "radii": list(radii)}
    if v.kind != "compact-support" and not v.is_zero():
        raise Inapplicable(
            "boundedness needs a compactly supported drift; constant drifts give unbounded f",
            {"kind": v.kind})
    theta = f.theta
    h = f.grid.h
    dim = f.grid.dimension
    sups = []
    for R in radii:
        n = 2 * int(round(R / h)) + 1
        q = build_uniform(R, n, theta, dim)
        vr = v.resample(q.grid) if v.func is not None else _zero_drift(q.grid)
        sups.append(float(np.max(solve(vr, q).values)))
    change = abs(sups[-1] - sups[-2]) / sups[-1]
    return BoundReport.from_comparisons(
        "boundedness_check", [radii[-1]], [change], [BOUNDEDNESS_TOL], rtol=0.0, atol=0.0,
        inputs=inputs, constants={"sup_f": dict(zip([str(r) for r in radii], sups)),
                                  "sup_f_input": float(np.max(f.values))},
        notes=("lhs: relative change of sup f between the two largest boxes",),
    )


def _zero_drift(grid: Grid) -> DriftField:
    return DriftField(grid, tuple(np.zeros(grid.shape) for _ in range(grid.dimension)),
                      "constant", sup_norm=0.0, name="zero")
