# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, erfc, sqrt, INFINITY

cnp.import_array()

cdef double SQRT2 = 1.4142135623730951


def inf_convolution(phi, x, double s, double p):
    cdef const double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i, j
    cdef double scale = 1.0 / (p * pow(s, p - 1.0))
    cdef double best, val, d
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] q = out
    cdef bint quadratic = p == 2.0
    with nogil:
        for i in range(n):
            best = INFINITY
            for j in range(n):
                d = fabs(xs[i] - xs[j])
                if quadratic:
                    val = ph[j] + d * d * scale
                else:
                    val = ph[j] + pow(d, p) * scale
                if val < best:
                    best = val
            q[i] = best
    return out


cdef inline double gauss_interval(double a, double b) nogil:
    if a >= 0:
        return 0.5 * (erfc(a / SQRT2) - erfc(b / SQRT2))
    if b <= 0:
        return 0.5 * (erfc(-b / SQRT2) - erfc(-a / SQRT2))
    return 1.0 - 0.5 * erfc(-a / SQRT2) - 0.5 * erfc(b / SQRT2)


def superlevel_mass_1d(x, f, double t, double theta):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] fs = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef double sq = sqrt(theta), total = 0.0
    cdef double fa, fb, xa, xb, xc
    with nogil:
        for i in range(n - 1):
            fa = fs[i]
            fb = fs[i + 1]
            xa = xs[i]
            xb = xs[i + 1]
            if fa >= t and fb >= t:
                total += gauss_interval(sq * xa, sq * xb)
            elif fa >= t or fb >= t:
                xc = xa + (t - fa) / (fb - fa) * (xb - xa)
                if fb >= t:
                    total += gauss_interval(sq * xc, sq * xb)
                else:
                    total += gauss_interval(sq * xa, sq * xc)
    return total


cdef inline double triangle_fraction(double a, double b, double c, double t) nogil:
    cdef double f1 = a, f2 = b, f3 = c, tmp
    if f1 > f2:
        tmp = f1; f1 = f2; f2 = tmp
    if f2 > f3:
        tmp = f2; f2 = f3; f3 = tmp
    if f1 > f2:
        tmp = f1; f1 = f2; f2 = tmp
    if t <= f1:
        return 1.0
    if t < f2:
        return 1.0 - (t - f1) * (t - f1) / ((f2 - f1) * (f3 - f1))
    if t < f3:
        return (f3 - t) * (f3 - t) / ((f3 - f1) * (f3 - f2))
    return 0.0


def superlevel_mass_2d(x, y, F, double t, double theta):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t nx = xs.shape[0], ny = ys.shape[0], i, j
    cdef double sq = sqrt(theta), total = 0.0, gx, frac
    gy_arr = np.empty(ny - 1, dtype=np.float64)
    cdef double[::1] gy = gy_arr
    with nogil:
        for j in range(ny - 1):
            gy[j] = gauss_interval(sq * ys[j], sq * ys[j + 1])
        for i in range(nx - 1):
            gx = gauss_interval(sq * xs[i], sq * xs[i + 1])
            for j in range(ny - 1):
                frac = 0.5 * (
                    triangle_fraction(Fv[i, j], Fv[i + 1, j], Fv[i + 1, j + 1], t)
                    + triangle_fraction(Fv[i, j], Fv[i + 1, j + 1], Fv[i, j + 1], t)
                )
                total += gx * gy[j] * frac
    return total
