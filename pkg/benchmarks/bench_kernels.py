"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py

Both backends are loaded into the same process, timed on identical inputs,
and checked for agreement to near machine precision before any timing is
reported.  Set DELTAFORGE_KERNELS=py to see which backend the package itself
would select at import time.
"""

from __future__ import annotations

import time

import numpy as np

from deltaforge.numeric.kernels import BACKEND, FAMILIES, MAX_ORDER
from deltaforge.numeric.kernels import _pykernels

try:
    from deltaforge.numeric.kernels import _ckernels
except ImportError:
    _ckernels = None

REL_TOL = 1e-12
SIZES = (1_000, 100_000)
REPEATS = 7


def _agreement(family: str, eps: float, n: int, u: np.ndarray) -> float:
    a = _pykernels.family_values(family, eps, n, u)
    b = _ckernels.family_values(family, eps, n, u)
    scale = np.max(np.abs(a)) or 1.0
    return float(np.max(np.abs(a - b)) / scale)


def _best_time(fn, *args) -> float:
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    print(f"package-selected backend: {BACKEND}")
    if _ckernels is None:
        print("compiled backend not built; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    worst = 0.0
    rows = []
    for size in SIZES:
        u = rng.uniform(-5.0, 5.0, size=size)
        for family in FAMILIES:
            for n in range(MAX_ORDER + 1):
                worst = max(worst, _agreement(family, 1e-2, n, u))
                t_py = _best_time(_pykernels.family_values, family, 1e-2, n, u)
                t_c = _best_time(_ckernels.family_values, family, 1e-2, n, u)
                rows.append((family, n, size, t_py, t_c))

    print(f"max relative disagreement: {worst:.3e} (tolerance {REL_TOL:.0e})")
    assert worst <= REL_TOL, "backends disagree beyond tolerance"

    print(f"{'family':<10} {'n':>2} {'size':>8} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for family, n, size, t_py, t_c in rows:
        print(f"{family:<10} {n:>2} {size:>8} {t_py * 1e3:>12.3f} {t_c * 1e3:>14.3f} {t_py / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
