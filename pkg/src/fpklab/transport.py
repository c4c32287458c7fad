"""Kantorovich distances and the Hopf-Lax inf-convolution.

In 1D ``W_p`` is computed primally from the monotone (quantile) coupling.
The Hopf-Lax operator gives the dual side: for every ``phi``,
``p (int Q_1 phi dmu_a - int phi dmu_b)`` is a lower bound for ``W_p^p``.
In 2D an exact discrete transport problem is solved on a coarsened grid.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from fpklab import kernels
from fpklab.errors import InstanceTooLarge, InvalidArgument
from fpklab.quad import GaussQuadrature, Grid, GridFunction, _values, gradient_arrays
from fpklab.solver import DensityField

logger = logging.getLogger(__name__)

QUANTILE_SAMPLES = 2000
NORMALIZATION_TOL = 1e-6
SUPPORT_THRESHOLD = 1e-9
COARSE_SIDE = 64
MAX_ATOMS = COARSE_SIDE * COARSE_SIDE


@dataclass(frozen=True)
class QuantileCoupling:
    """Monotone coupling sampled at midpoints ``u_k`` of a uniform partition of (0, 1)."""

    u: np.ndarray
    qa: np.ndarray
    qb: np.ndarray
    p: float

    def __post_init__(self):
        for q in (self.qa, self.qb):
            if np.any(np.diff(q) < -1e-12):
                raise InvalidArgument("quantile arrays must be nondecreasing")

    def cost(self) -> float:
        """``int_0^1 |F_a^{-1} - F_b^{-1}|^p du`` by the midpoint rule."""
        return float(np.mean(np.abs(self.qa - self.qb) ** self.p))


@dataclass(frozen=True)
class HopfLaxField:
    """``Q_s phi`` on a grid."""

    grid: Grid
    values: np.ndarray
    s: float
    p: float


def _check_normalized(f: DensityField):
    mass = float(np.sum(f.values * f.quadrature.weights))
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise InvalidArgument(f"density is not normalized (mass {mass:.10g})")


def _quantile_function(f: DensityField):
    """Monotone cubic inverse of the CDF of ``f gamma``."""
    x = f.grid.x
    dens = f.values * f.quadrature.density()
    cdf = cumulative_simpson(dens, x=x, initial=0.0)
    # Simpson can wiggle by rounding where the density vanishes
    cdf = np.maximum.accumulate(cdf)
    cdf = cdf / cdf[-1]
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    return PchipInterpolator(cdf[keep], x[keep], extrapolate=False), cdf[keep]


def quantile_coupling(fa: DensityField, fb: DensityField, p: float,
                      samples: int = QUANTILE_SAMPLES) -> QuantileCoupling:
    if fa.grid.dimension != 1 or not fa.grid.same_as(fb.grid):
        raise InvalidArgument("quantile coupling needs two densities on the same 1D grid")
    _check_normalized(fa)
    _check_normalized(fb)
    u = (np.arange(samples) + 0.5) / samples
    qs = []
    for f in (fa, fb):
        Q, cdf = _quantile_function(f)
        inside = (u >= cdf[0]) & (u <= cdf[-1])
        if not inside.all():
            logger.info("clamping %d quantile levels to the grid ends", int((~inside).sum()))
        vals = Q(np.clip(u, cdf[0], cdf[-1]))
        qs.append(np.maximum.accumulate(vals))
    return QuantileCoupling(u, qs[0], qs[1], float(p))


def wp_1d(fa: DensityField, fb: DensityField, p: float,
          samples: int = QUANTILE_SAMPLES) -> float:
    """``W_p(fa gamma, fb gamma)`` from the quantile functions.

    Raises
    ------
    InvalidArgument
        If ``p < 1`` or either density is not normalized within ``1e-6``.
    """
    if not p >= 1:
        raise InvalidArgument("W_p needs p >= 1")
    return quantile_coupling(fa, fb, p, samples).cost() ** (1.0 / p)


def _grid_of(phi, grid: Grid | None) -> Grid:
    if grid is not None:
        return grid
    if isinstance(phi, GridFunction):
        return phi.grid
    raise InvalidArgument("pass a GridFunction or an explicit grid")


def hopf_lax(phi, s: float, p: float, grid: Grid | None = None) -> HopfLaxField:
    """``Q_s phi(x) = min_y phi(y) + |x - y|^p / (p s^(p-1))`` over the grid nodes."""
    if not s > 0:
        raise InvalidArgument("s must be positive")
    if not p > 1:
        raise InvalidArgument("p must exceed 1")
    grid = _grid_of(phi, grid)
    if grid.dimension != 1:
        raise InvalidArgument("hopf_lax is implemented on 1D grids")
    values = kernels.inf_convolution(_values(phi), grid.x, float(s), float(p))
    return HopfLaxField(grid, np.asarray(values), float(s), float(p))


def hamilton_jacobi_defect(phi, s: float, p: float, delta: float = 1e-3,
                           grid: Grid | None = None, kink_tol: float = 0.5):
    """Compare ``d/ds Q_s phi`` with ``-(1/q)|grad Q_s phi|^q``, ``q = p/(p-1)``.

    Returns ``(defect, mask)``: the absolute difference at nodes of the inner
    half of the grid where the discrete second derivative of ``Q_s phi``
    stays below ``kink_tol / h`` (kink-free nodes), and that mask.
    """
    grid = _grid_of(phi, grid)
    q = p / (p - 1.0)
    Qs = hopf_lax(phi, s, p, grid).values
    Qn = hopf_lax(phi, s + delta, p, grid).values
    dQ = (Qn - Qs) / delta
    grad = gradient_arrays(Qs, grid)[0]
    rhs = -np.abs(grad) ** q / q
    h = grid.h
    curv = np.abs(np.diff(Qs, 2)) / h ** 2
    smooth = np.ones_like(Qs, dtype=bool)
    bad = curv > kink_tol / h
    for shift in range(3):
        smooth[shift:shift + bad.size] &= ~bad
    mask = smooth & grid.interior_mask(0.5)
    return np.abs(dQ - rhs), mask


def dual_lower_bound(phi, fa: DensityField, fb: DensityField, p: float) -> float:
    """``p (int Q_1 phi d(fa gamma) - int phi d(fb gamma))``, a lower bound for ``W_p^p``."""
    if not fa.grid.same_as(fb.grid):
        raise InvalidArgument("densities live on different grids")
    phi_v = _values(phi)
    Q = hopf_lax(phi_v, 1.0, p, fa.grid).values
    wa = fa.values * fa.quadrature.weights
    wb = fb.values * fb.quadrature.weights
    return float(p * (np.sum(Q * wa) - np.sum(phi_v * wb)))


@dataclass(frozen=True)
class TransportEstimate:
    """``W_p`` on aggregated atoms with a bracket for the aggregation error.

    ``cell_diameter`` is the diameter of one aggregation block.
    """

    value: float
    lower: float
    upper: float
    p: float
    atoms: tuple
    cell_diameter: float

    def power(self) -> tuple:
        """``(value, lower, upper)`` raised to the ``p``-th power."""
        return tuple(max(0.0, b) ** self.p for b in (self.value, self.lower, self.upper))


def _aggregate(f: DensityField, block: int, threshold: float, p: float):
    """Block atoms at centers of mass, and ``W_p`` from the node measure to them.

    The second value is ``(sum_nodes m |x - c_B|^p)^(1/p)``, the cost of the
    coupling that moves every node mass to its block centroid.
    """
    grid = f.grid
    mass = f.values * f.quadrature.weights
    total = mass.sum()
    X, Y = grid.mesh()
    nx, ny = grid.shape
    bx, by = -(-nx // block), -(-ny // block)
    pad = ((0, bx * block - nx), (0, by * block - ny))

    def blocks(a):
        return np.pad(a, pad).reshape(bx, block, by, block)

    M = blocks(mass)
    m = M.sum(axis=(1, 3))
    with np.errstate(invalid="ignore", divide="ignore"):
        cx = blocks(X * mass).sum(axis=(1, 3)) / m
        cy = blocks(Y * mass).sum(axis=(1, 3)) / m
    dx = blocks(X) - np.nan_to_num(cx)[:, None, :, None]
    dy = blocks(Y) - np.nan_to_num(cy)[:, None, :, None]
    spread = float(np.sum(M * np.hypot(dx, dy) ** p) / total) ** (1.0 / p)
    keep = m >= threshold
    dropped = float(m[~keep].sum() / total)
    pts = np.stack([cx[keep], cy[keep]], axis=1)
    w = m[keep]
    return pts, w / w.sum(), spread, dropped


def _ot_module():
    # keep POT from probing heavyweight optional backends at import
    for name in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{name}", "1")
    import ot
    return ot


def wp_2d(fa: DensityField, fb: DensityField, p: float,
          threshold: float = SUPPORT_THRESHOLD, side: int = COARSE_SIDE) -> TransportEstimate:
    """Exact discrete ``W_p`` between block-aggregated 2D densities.

    Node masses are summed over square blocks so that at most ``side`` blocks
    remain per axis; each block becomes one atom at its center of mass.
    Atoms lighter than ``threshold`` are dropped and both measures are
    renormalized.  The network-simplex value is bracketed by the triangle
    inequality: each aggregation is at ``W_p`` distance at most
    ``(sum m |x - c_B|^p)^(1/p)`` from the node measure, and the dropped mass
    ``delta`` adds at most ``diam(box) delta^(1/p)``.

    Raises
    ------
    InstanceTooLarge
        More than ``side**2`` atoms survive.
    """
    if fa.grid.dimension != 2 or not fa.grid.same_as(fb.grid):
        raise InvalidArgument("wp_2d needs two densities on the same 2D grid")
    if not p >= 1:
        raise InvalidArgument("W_p needs p >= 1")
    grid = fa.grid
    block = max(1, -(-max(grid.shape) // side))
    xa, wa, ea, da = _aggregate(fa, block, threshold, p)
    xb, wb, eb, db = _aggregate(fb, block, threshold, p)
    if max(len(wa), len(wb)) > side * side:
        raise InstanceTooLarge(f"{max(len(wa), len(wb))} atoms exceed the cap of {side * side}")
    ot = _ot_module()
    cost = ot.dist(xa, xb, metric="euclidean") ** p
    plan, log = ot.emd(wa, wb, cost, numItermax=10_000_000, log=True)
    if log.get("warning"):
        raise InstanceTooLarge(f"network simplex did not finish: {log['warning']}")
    value = float(np.sum(plan * cost)) ** (1.0 / p)
    diam = float(block * grid.h * np.sqrt(2.0))
    # dropped light atoms and renormalization move at most that mass over the box diameter
    box = float(np.hypot(*(a[-1] - a[0] for a in grid.axes)))
    slack = ea + eb + box * (da + db) ** (1.0 / p)
    return TransportEstimate(value, max(0.0, value - slack), value + slack, float(p),
                             (len(wa), len(wb)), diam)
