"""Compare the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on
both backends with identical inputs, and the largest absolute difference
between the two outputs is reported alongside the speedup.
"""
import argparse
import timeit

import numpy as np

from fpklab import _fallback

try:
    from fpklab import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(n1, n2):
    x = np.linspace(-8.0, 8.0, n1)
    f = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    phi = np.sin(x) + 0.1 * x**2
    y = np.linspace(-8.0, 8.0, n2)
    X, Y = np.meshgrid(y, y, indexing="ij")
    F = np.exp(-0.5 * (X**2 + Y**2)) / (2 * np.pi)
    return {
        f"inf_convolution n={n1}": ("inf_convolution", (phi, x, 0.3, 2.0)),
        f"superlevel_mass_1d n={n1}": ("superlevel_mass_1d", (x, f, 1.5, 1.0)),
        f"superlevel_mass_2d n={n2}^2": ("superlevel_mass_2d", (y, y, F, 1.5, 1.0)),
    }


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n1", type=int, default=2001, help="1D grid size")
    ap.add_argument("--n2", type=int, default=161, help="2D grid size per axis")
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build with pip install -e .")
        return 1
    print(f"{'kernel':<30}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max diff':>12}")
    for label, (name, args) in cases(a.n1, a.n2).items():
        py, cy = getattr(_fallback, name), getattr(_kernels, name)
        diff = float(np.max(np.abs(np.asarray(py(*args)) - np.asarray(cy(*args)))))
        tp, tc = best_of(py, args, a.repeat), best_of(cy, args, a.repeat)
        print(f"{label:<30}{tp:>12.4g}{tc:>12.4g}{tp / tc:>10.1f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
