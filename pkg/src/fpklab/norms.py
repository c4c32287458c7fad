"""Norms and functionals of densities and drifts.

Every integral is a quadrature sum against the reference Gaussian, optionally
weighted by a density ``f`` (i.e. against ``f gamma``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from fpklab.errors import DegenerateInput, InvalidArgument, NotInOrliczClass
from fpklab.quad import GaussQuadrature, _values, gradient_arrays
from fpklab.solver import DensityField

logger = logging.getLogger(__name__)

ORLICZ_TOL = 1e-10
ORLICZ_MAX_ITER = 200
ORLICZ_CEILING = 1e6
_EXP_CAP = 700.0


@dataclass(frozen=True)
class OrliczExponent:
    """``m`` in ``psi_m(t) = exp(t^m) - 1``; ``math.inf`` selects the sup-norm regime."""

    m: float

    def __post_init__(self):
        if not self.m >= 2:
            raise InvalidArgument("Orlicz exponent must satisfy m >= 2")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.m)


@dataclass(frozen=True)
class OrliczNorm:
    """Result of the Luxemburg bisection.

    Attributes
    ----------
    lam : float
        The norm.
    integral : float
        ``int psi_m(w / lam) d mu`` at ``lam`` (``<= 1``, within ``1e-8`` of 1).
    m : float
    weighting : str
        ``"f-gamma"`` or ``"gamma"``.
    """

    lam: float
    integral: float
    m: float
    weighting: str = "f-gamma"

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidArgument("Orlicz norm must be positive")

    def __float__(self):
        return float(self.lam)


def _weights(q: GaussQuadrature, f: DensityField | None) -> np.ndarray:
    if f is None:
        return q.weights
    if f.values.shape != q.weights.shape:
        raise InvalidArgument("density does not match the quadrature")
    return q.weights * f.values


def _psi_integral(w: np.ndarray, lam: float, m: float, weights: np.ndarray) -> float:
    live = weights > 0
    with np.errstate(over="ignore"):
        z = (w[live] / lam) ** m
    if np.any(z > _EXP_CAP):
        return math.inf
    return float(np.sum(np.expm1(z) * weights[live]))


def orlicz_norm(w, f: DensityField | None, q: GaussQuadrature, m) -> OrliczNorm:
    """Luxemburg norm ``inf{lam : int (exp((w/lam)^m) - 1) d mu <= 1}``.

    ``mu = f gamma`` when ``f`` is given, else ``gamma``.  Bisection stops
    when the bracket is narrower than ``1e-10`` (or at float resolution) and
    returns its upper end, so the attained integral never exceeds 1.

    Raises
    ------
    DegenerateInput
        ``w`` vanishes on the support of ``mu``.
    NotInOrliczClass
        The integral stays above 1 up to ``lam = 1e6 max(w)``.
    """
    m = m.m if isinstance(m, OrliczExponent) else float(m)
    OrliczExponent(m)
    if not math.isfinite(m):
        raise InvalidArgument("use the sup-norm directly for m = inf")
    w = np.abs(np.asarray(_values(w), dtype=float))
    if np.any(~np.isfinite(w)):
        raise NotInOrliczClass("w is not finite on the grid")
    weights = _weights(q, f)
    active = weights > 0
    top = float(np.max(w[active], initial=0.0))
    if top == 0.0:
        raise DegenerateInput("w vanishes on the support of the measure")
    # a level where the largest atom alone pushes the integral above 1
    wmin = float(np.min(weights[active & (w == top)]))
    lo = top / math.log1p(1.0 / wmin) ** (1.0 / m)
    while _psi_integral(w, lo, m, weights) <= 1.0:
        lo *= 0.5
        if lo < 1e-300:
            raise DegenerateInput("integral stays below 1 as lam -> 0")
    hi = max(lo, top)
    while _psi_integral(w, hi, m, weights) > 1.0:
        hi *= 2.0
        if hi > ORLICZ_CEILING * top:
            raise NotInOrliczClass(f"integral exceeds 1 for every lam <= {ORLICZ_CEILING:g} max|w|")
    for _ in range(ORLICZ_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= ORLICZ_TOL or mid in (lo, hi):
            break
        if _psi_integral(w, mid, m, weights) > 1.0:
            lo = mid
        else:
            hi = mid
    return OrliczNorm(hi, _psi_integral(w, hi, m, weights), m,
                      "gamma" if f is None else "f-gamma")


def lp_norm(g, p: float, q: GaussQuadrature, weight: DensityField | None = None) -> float:
    """``(int |g|^p d mu)^(1/p)`` with ``mu = gamma`` or ``weight * gamma``; ``p = inf`` gives the max."""
    if not p >= 1:
        raise InvalidArgument("L^p norms need p >= 1")
    g = np.abs(np.asarray(_values(g), dtype=float))
    weights = _weights(q, weight)
    if math.isinf(p):
        return float(np.max(g[weights > 0], initial=0.0))
    return float(np.sum(g ** p * weights) ** (1.0 / p))


def entropy(f: DensityField, q: GaussQuadrature | None = None) -> float:
    """``int f log f dgamma`` with ``0 log 0 = 0``."""
    q = q or f.quadrature
    v = f.values
    integrand = np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)
    return float(np.sum(integrand * q.weights))


def fisher_information(f: DensityField, q: GaussQuadrature | None = None) -> float:
    """``int |grad f|^2 / f dgamma``; nodes with ``f < 1e-300`` contribute 0."""
    q = q or f.quadrature
    v = f.values
    grads = gradient_arrays(v, f.grid)
    sq = sum(g * g for g in grads)
    live = v >= 1e-300
    integrand = np.where(live, sq / np.where(live, v, 1.0), 0.0)
    return float(np.sum(integrand * q.weights))


def c_p(p: float) -> float:
    """Offset ``max(1, e^(p/2 - 1))`` of the improved-integrability estimate."""
    return max(1.0, math.exp(p / 2.0 - 1.0))


def log_moment(f: DensityField, alpha: float, offset: float = 1.0,
               q: GaussQuadrature | None = None) -> float:
    """``int f log^alpha(offset + f) dgamma`` (``offset >= 1``)."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    if not offset >= 1:
        raise InvalidArgument("offset must be >= 1")
    q = q or f.quadrature
    v = f.values
    return float(np.sum(v * np.log(offset + v) ** alpha * q.weights))


def double_log_moment(f: DensityField, eps: float, kappa: float,
                      q: GaussQuadrature | None = None) -> float:
    """``int exp(eps [ln max(f, 1)]^kappa) dgamma`` on the (truncated) grid."""
    if not eps > 0 or not kappa > 0:
        raise InvalidArgument("eps and kappa must be positive")
    q = q or f.quadrature
    lf = np.log(np.maximum(f.values, 1.0))
    return float(np.sum(np.exp(eps * lf ** kappa) * q.weights))


def sobolev_gradient_norm(f: DensityField, p: float, q: GaussQuadrature | None = None) -> float:
    """``(int |grad f|^p dgamma)^(1/p)`` with finite-difference gradients."""
    if not p >= 1:
        raise InvalidArgument("p must be >= 1")
    q = q or f.quadrature
    grads = gradient_arrays(f.values, f.grid)
    mag = np.sqrt(sum(g * g for g in grads))
    return float(np.sum(mag ** p * q.weights) ** (1.0 / p))
