"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``FPKLAB_PURE_PYTHON=1`` is set.  Results agree with the extension to
rounding.
"""
import numpy as np
from scipy.special import erfc

_SQRT2 = np.sqrt(2.0)
_CHUNK = 256


def inf_convolution(phi, x, s, p):
    """``Q[i] = min_j phi[j] + |x[i] - x[j]|**p / (p * s**(p-1))`` by direct scan."""
    phi = np.ascontiguousarray(phi, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    scale = 1.0 / (p * s ** (p - 1.0))
    out = np.empty_like(x)
    for start in range(0, x.size, _CHUNK):
        xi = x[start:start + _CHUNK, None]
        cost = np.abs(xi - x[None, :]) ** p * scale
        out[start:start + _CHUNK] = np.min(phi[None, :] + cost, axis=1)
    return out


def gauss_interval(a, b):
    """Standard normal mass of ``[a, b]`` without cancellation in the tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    right = 0.5 * (erfc(a / _SQRT2) - erfc(b / _SQRT2))
    left = 0.5 * (erfc(-b / _SQRT2) - erfc(-a / _SQRT2))
    mid = 1.0 - 0.5 * erfc(-a / _SQRT2) - 0.5 * erfc(b / _SQRT2)
    return np.where(a >= 0, right, np.where(b <= 0, left, mid))


def superlevel_mass_1d(x, f, t, theta):
    """Gaussian mass of ``{f >= t}`` with ``f`` linearly interpolated per cell."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    sq = np.sqrt(theta)
    xa, xb = x[:-1], x[1:]
    fa, fb = f[:-1], f[1:]
    lo = np.where(fa >= t, xa, xb)
    hi = np.where(fb >= t, xb, xa)
    cross = (fa >= t) != (fb >= t)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xa + (t - fa) / (fb - fa) * (xb - xa)
    lo = np.where(cross & (fb >= t), xc, lo)
    hi = np.where(cross & (fa >= t), xc, hi)
    both = (fa >= t) & (fb >= t)
    lo = np.where(both, xa, lo)
    hi = np.where(both, xb, hi)
    active = both | cross
    mass = np.where(active, gauss_interval(sq * lo, sq * hi), 0.0)
    return float(mass.sum())


def _triangle_fraction(a, b, c, t):
    v = np.sort(np.stack([a, b, c]), axis=0)
    f1, f2, f3 = v
    frac = np.zeros_like(f1)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = (f3 - t) ** 2 / ((f3 - f1) * (f3 - f2))
        lower = 1.0 - (t - f1) ** 2 / ((f2 - f1) * (f3 - f1))
    frac = np.where((t > f1) & (t < f2), lower, frac)
    frac = np.where((t >= f2) & (t < f3), upper, frac)
    frac = np.where(t <= f1, 1.0, frac)
    return frac


def superlevel_mass_2d(x, y, F, t, theta):
    """Gaussian mass of ``{F >= t}``; each cell split into two linear triangles."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    sq = np.sqrt(theta)
    gx = gauss_interval(sq * x[:-1], sq * x[1:])
    gy = gauss_interval(sq * y[:-1], sq * y[1:])
    f00, f10 = F[:-1, :-1], F[1:, :-1]
    f01, f11 = F[:-1, 1:], F[1:, 1:]
    frac = 0.5 * (_triangle_fraction(f00, f10, f11, t) + _triangle_fraction(f00, f11, f01, t))
    return float(np.sum(np.outer(gx, gy) * frac))
