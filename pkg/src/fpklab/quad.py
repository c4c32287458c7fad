"""Discrete Gaussian reference measures, grid integration and differentiation.

The reference measure is the centered Gaussian with covariance ``I/theta``,
the invariant measure of ``Lg = Laplace(g) - theta <x, grad g>``.  Two grid
families are provided:

* Gauss-Hermite nodes, for spectrally accurate moments and norms;
* uniform grids on ``[-R, R]^d`` with trapezoid weights times the Gaussian
  density, which finite differences, Mehler interpolation and the Hopf-Lax
  scan all need.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from fpklab.errors import InvalidArgument, Unsupported

DEFAULT_N_1D = 801
DEFAULT_N_2D = 161
TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Tensor grid, symmetric about the origin.

    Attributes
    ----------
    axes : tuple of ndarray
        Strictly increasing node arrays, one per axis (dimension 1 or 2).
    radius : float
        Truncation radius ``R``; nodes lie in ``[-R, R]``.
    spacing : str
        ``"uniform"`` or ``"gauss-hermite"``.
    """

    axes: tuple
    radius: float
    spacing: str = "uniform"

    def __post_init__(self):
        if len(self.axes) not in (1, 2):
            raise InvalidArgument("grid dimension must be 1 or 2")
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in axes:
            a.setflags(write=False)
            if a.ndim != 1 or a.size < 2:
                raise InvalidArgument("each axis needs at least two nodes")
            if np.any(np.diff(a) <= 0):
                raise InvalidArgument("grid nodes must be strictly increasing")
            if np.max(np.abs(a + a[::-1])) > 1e-12 * max(1.0, self.radius):
                raise InvalidArgument("grid nodes must be symmetric about 0")
            if self.spacing == "uniform":
                d = np.diff(a)
                if np.max(np.abs(d - d[0])) > 1e-12 * max(1.0, self.radius):
                    raise InvalidArgument("uniform grid spacing is not constant")
        object.__setattr__(self, "axes", axes)

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def x(self) -> np.ndarray:
        """Nodes of the first axis (the whole grid in 1D)."""
        return self.axes[0]

    @property
    def h(self) -> float:
        if self.spacing != "uniform":
            raise Unsupported("spacing is only defined on uniform grids")
        return float(self.axes[0][1] - self.axes[0][0])

    def mesh(self) -> list:
        return np.meshgrid(*self.axes, indexing="ij")

    def interior_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Nodes with every coordinate within ``fraction * R`` of the origin."""
        masks = [np.abs(c) <= fraction * self.radius + 1e-12 for c in self.mesh()]
        return np.logical_and.reduce(masks)

    def same_as(self, other: "Grid") -> bool:
        return (
            self.shape == other.shape
            and self.spacing == other.spacing
            and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
        )


@dataclass(frozen=True)
class GaussQuadrature:
    """Weights discretizing the Gaussian with covariance ``I/theta`` on a grid."""

    grid: Grid
    weights: np.ndarray
    theta: float
    truncated: bool = field(default=False)

    def __post_init__(self):
        if self.theta <= 0:
            raise InvalidArgument("theta must be positive")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != self.grid.shape:
            raise InvalidArgument("weights do not match grid shape")
        if np.any(w < 0):
            raise InvalidArgument("quadrature weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def density(self) -> np.ndarray:
        """Gaussian Lebesgue density at the grid nodes."""
        return gaussian_density(self.grid, self.theta)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on a grid; ``smooth`` flags derivative reliability."""

    grid: Grid
    values: np.ndarray
    smooth: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise InvalidArgument(
                f"values of shape {v.shape} do not match grid shape {self.grid.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn, smooth: bool = True) -> "GridFunction":
        return cls(grid, fn(*grid.mesh()), smooth)

    def with_values(self, values, smooth=None) -> "GridFunction":
        return GridFunction(self.grid, values, self.smooth if smooth is None else smooth)


def gaussian_density(grid: Grid, theta: float) -> np.ndarray:
    out = np.ones(grid.shape)
    for c in grid.mesh():
        out = out * np.sqrt(theta / (2 * np.pi)) * np.exp(-0.5 * theta * c * c)
    return out


def build_gauss_hermite(n: int, theta: float = 1.0, dim: int = 1) -> GaussQuadrature:
    """n-point Gauss-Hermite rule for the Gaussian with variance ``1/theta``.

    Exact for polynomials of degree ``<= 2n - 1``; weights sum to one.
    """
    if int(n) != n or n < 2:
        raise InvalidArgument("Gauss-Hermite rule needs n >= 2 nodes")
    if theta <= 0:
        raise InvalidArgument("theta must be positive")
    z, w = hermegauss(int(n))
    w = w / w.sum()
    z = z / np.sqrt(theta)
    # hermegauss nodes are symmetric only to rounding; enforce it exactly
    z = 0.5 * (z - z[::-1])
    w = 0.5 * (w + w[::-1])
    grid = Grid((z,) * dim, radius=float(z[-1]), spacing="gauss-hermite")
    weights = w
    if dim == 2:
        weights = np.outer(w, w)
    return GaussQuadrature(grid, weights, float(theta))


def build_uniform(R: float | None = None, n: int | None = None, theta: float = 1.0,
                  dim: int = 1) -> GaussQuadrature:
    """Uniform grid on ``[-R, R]^dim`` with trapezoid-times-density weights.

    Defaults: ``R = 8/sqrt(theta)``, ``n = 801`` (1D) or 161 per axis (2D).
    The result is flagged ``truncated`` when the weights lose more than
    ``1e-8`` of the Gaussian mass.
    """
    if theta <= 0:
        raise InvalidArgument("theta must be positive")
    if R is None:
        R = 8.0 / np.sqrt(theta)
    if n is None:
        n = DEFAULT_N_1D if dim == 1 else DEFAULT_N_2D
    if R <= 0:
        raise InvalidArgument("truncation radius must be positive")
    if int(n) != n or n % 2 == 0:
        raise InvalidArgument("uniform grids need an odd node count (center node at 0)")
    if n < 33:
        raise InvalidArgument("uniform grids need at least 33 nodes per axis")
    x = np.linspace(-R, R, int(n))
    x[n // 2] = 0.0
    x = 0.5 * (x - x[::-1])
    h = x[1] - x[0]
    trap = np.full(x.size, h)
    trap[0] = trap[-1] = h / 2
    dens = np.sqrt(theta / (2 * np.pi)) * np.exp(-0.5 * theta * x * x)
    w1 = trap * dens
    grid = Grid((x,) * dim, radius=float(R), spacing="uniform")
    weights = w1 if dim == 1 else np.outer(w1, w1)
    truncated = abs(weights.sum() - 1.0) > TRUNCATION_TOL
    return GaussQuadrature(grid, weights, float(theta), truncated)


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)


def integrate(g, q: GaussQuadrature) -> float:
    """Weighted sum ``sum_i g_i w_i`` approximating the Gaussian integral."""
    v = _values(g)
    if v.shape != q.weights.shape:
        raise InvalidArgument(f"shape {v.shape} does not match quadrature {q.weights.shape}")
    if isinstance(g, GridFunction) and not g.grid.same_as(q.grid):
        raise InvalidArgument("grid function lives on a different grid")
    return float(np.sum(v * q.weights))


# Central stencils: 6th order interior, tapering to 2nd order one-sided at the ends.
_D1_6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D1_4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_6 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_D2_4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _stencil(v: np.ndarray, coef: np.ndarray) -> np.ndarray:
    k = coef.size // 2
    n = v.shape[0]
    out = np.zeros((n - 2 * k,) + v.shape[1:])
    for j, c in enumerate(coef):
        if c != 0.0:
            out += c * v[j:n - 2 * k + j]
    return out


def diff1(v: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """First derivative along ``axis`` of samples on a uniform grid."""
    v = np.moveaxis(np.asarray(v, dtype=float), axis, 0)
    n = v.shape[0]
    if n < 7:
        raise InvalidArgument("need at least 7 nodes to differentiate")
    d = np.empty_like(v)
    d[3:n - 3] = _stencil(v, _D1_6)
    d[2] = _stencil(v[0:5], _D1_4)[0]
    d[n - 3] = _stencil(v[n - 5:n], _D1_4)[0]
    d[1] = (v[2] - v[0]) / 2.0
    d[n - 2] = (v[n - 1] - v[n - 3]) / 2.0
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / 2.0
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / 2.0
    return np.moveaxis(d / h, 0, axis)


def diff2(v: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Second derivative along ``axis`` on a uniform grid."""
    v = np.moveaxis(np.asarray(v, dtype=float), axis, 0)
    n = v.shape[0]
    if n < 7:
        raise InvalidArgument("need at least 7 nodes to differentiate")
    d = np.empty_like(v)
    d[3:n - 3] = _stencil(v, _D2_6)
    d[2] = _stencil(v[0:5], _D2_4)[0]
    d[n - 3] = _stencil(v[n - 5:n], _D2_4)[0]
    d[1] = v[2] - 2.0 * v[1] + v[0]
    d[n - 2] = v[n - 1] - 2.0 * v[n - 2] + v[n - 3]
    d[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
    d[n - 1] = 2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]
    return np.moveaxis(d / (h * h), 0, axis)


def _require_uniform(grid: Grid):
    if grid.spacing != "uniform":
        raise Unsupported("finite differences need a uniform grid")


def gradient(g: GridFunction):
    """Finite-difference gradient.

    Sixth-order central differences in the interior (exact for polynomials
    of degree <= 6), lower order near the two ends.  Returns a GridFunction
    in 1D and a tuple of per-axis GridFunctions in 2D.
    """
    _require_uniform(g.grid)
    h = g.grid.h
    comps = tuple(g.with_values(diff1(g.values, h, axis=k)) for k in range(g.grid.dimension))
    return comps[0] if g.grid.dimension == 1 else comps


def gradient_arrays(values: np.ndarray, grid: Grid) -> list:
    """Per-axis derivative arrays; the array-level counterpart of :func:`gradient`."""
    _require_uniform(grid)
    return [diff1(values, grid.h, axis=k) for k in range(grid.dimension)]


def hessian_arrays(values: np.ndarray, grid: Grid) -> list:
    """Second derivatives as a nested list ``H[i][j]``."""
    _require_uniform(grid)
    h = grid.h
    d = grid.dimension
    H = [[None] * d for _ in range(d)]
    for i in range(d):
        H[i][i] = diff2(values, h, axis=i)
    if d == 2:
        H[0][1] = H[1][0] = diff1(diff1(values, h, axis=0), h, axis=1)
    return H
