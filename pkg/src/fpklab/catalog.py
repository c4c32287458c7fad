"""Catalog of drift perturbations, one per hypothesis class of the estimates.

========================  ==================================================
key                       drift
========================  ==================================================
``constant``              ``c`` (a vector in 2D)
``tanh-bounded``          ``c tanh(x)`` per axis
``bump-compact``          ``c`` times a smooth indicator of ``[-r, r]``
                          (per axis in 2D), mollified over width 0.05
``orlicz-m``              ``m = 2``: ``c sign(x) sqrt(log(1 + |x|))``;
                          ``m > 2``: ``c (1 + x^2)^power`` (1D only)
========================  ==================================================

For ``orlicz-m`` with ``m > 2`` the default ``power = 1/m`` gives growth
``|x|^(2/m)``, the fastest power growth for which ``exp((|v|/lam)^m)`` is
integrable against Gaussian-type weights for large ``lam``.
"""
from __future__ import annotations

import math

import numpy as np

from fpklab.errors import ConfigError, InvalidArgument, Unsupported
from fpklab.quad import Grid
from fpklab.solver import DriftField

MOLLIFIER_WIDTH = 0.05


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tt)
    b = np.exp(-1.0 / (1.0 - tt))
    return np.where(t >= 1, 1.0, np.where(inside, a / (a + b), 0.0))


def smooth_indicator(x, r: float, width: float = MOLLIFIER_WIDTH):
    """1 on ``[-r, r]``, 0 outside ``[-r - width, r + width]``."""
    return smooth_step((r + width - np.abs(x)) / width)


def _constant(grid: Grid, c=0.5):
    cs = np.broadcast_to(np.asarray(c, dtype=float), (grid.dimension,)).copy()
    fn = (lambda x: cs[0] + 0.0 * x) if grid.dimension == 1 else \
        (lambda x, y: (cs[0] + 0.0 * x, cs[1] + 0.0 * y))
    return DriftField.from_callable(grid, fn, "constant", sup_norm=float(np.linalg.norm(cs)),
                                    name="constant", params={"c": cs.tolist()})


def _tanh(grid: Grid, c=0.5):
    c = float(c)
    fn = (lambda x: c * np.tanh(x)) if grid.dimension == 1 else \
        (lambda x, y: (c * np.tanh(x), c * np.tanh(y)))
    return DriftField.from_callable(grid, fn, "bounded", sup_norm=abs(c) * math.sqrt(grid.dimension),
                                    name="tanh-bounded", params={"c": c})


def _bump(grid: Grid, c=1.0, r=1.0, width=MOLLIFIER_WIDTH):
    c, r, width = float(c), float(r), float(width)
    if grid.dimension == 1:
        fn = lambda x: c * smooth_indicator(x, r, width)
    else:
        def fn(x, y):
            s = c * smooth_indicator(x, r, width) * smooth_indicator(y, r, width)
            return s, s
    return DriftField.from_callable(
        grid, fn, "compact-support", sup_norm=abs(c) * math.sqrt(grid.dimension),
        support_radius=r + width, name="bump-compact",
        params={"c": c, "r": r, "width": width}, feature_width=width)


def _orlicz(grid: Grid, c=0.4, m=2.0, power=None):
    c, m = float(c), float(m)
    if grid.dimension != 1:
        raise Unsupported("orlicz-m drifts are provided in 1D")
    if m < 2:
        raise InvalidArgument("orlicz-m needs m >= 2")
    if m == 2:
        fn = lambda x: c * np.sign(x) * np.sqrt(np.log1p(np.abs(x)))
        params = {"c": c, "m": m}
    else:
        power = 1.0 / m if power is None else float(power)
        fn = lambda x: c * (1.0 + x * x) ** power
        params = {"c": c, "m": m, "power": power}
    return DriftField.from_callable(grid, fn, "orlicz", m=m, name="orlicz-m", params=params)


CATALOG = {
    "constant": _constant,
    "tanh-bounded": _tanh,
    "bump-compact": _bump,
    "orlicz-m": _orlicz,
}


def available() -> list:
    return sorted(CATALOG)


def catalog_drift(key: str, params: dict | None, grid: Grid) -> DriftField:
    """Build the catalog drift ``key`` on ``grid``.

    Raises
    ------
    ConfigError
        Unknown key (the message lists the available ones) or bad parameters.
    """
    if key not in CATALOG:
        raise ConfigError(f"unknown drift {key!r}; available: {', '.join(available())}")
    try:
        return CATALOG[key](grid, **(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for drift {key!r}: {exc}") from None
