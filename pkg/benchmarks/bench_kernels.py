#!/usr/bin/env python3
"""Benchmark the hot kernels: numba @njit vs the pure-numpy fallback.

Run directly; both code paths are imported side by side, so no env flag is
needed here (SCARFORGE_NO_NUMBA=1 selects the numpy path for the package
itself).  A propagation-level comparison runs the same quasimode assembly
through each path via the dispatch table.
"""

import time

import numpy as np
from scipy.special import gammaln

from scarforge import _kernels


def timeit(fn, *args, repeat=5, warmup=1):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_matvec(dim=65536, nb=5):
    rng = np.random.default_rng(0)
    offsets = np.array([-4, -2, 0, 2, 4], dtype=np.int64)[:nb]
    data = np.zeros((nb, dim), dtype=np.complex128)
    for b, o in enumerate(offsets):
        m = dim - abs(int(o))
        data[b, :m] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    t_np = timeit(_kernels.banded_matvec_numpy, offsets, data, v)
    t_nb = timeit(_kernels.banded_matvec_numba, offsets, data, v) \
        if _kernels.HAVE_NUMBA else float("nan")
    print(f"banded_matvec dim={dim}: numpy {t_np * 1e6:8.1f} us   "
          f"numba {t_nb * 1e6:8.1f} us   speedup {t_np / t_nb:5.2f}x")


def bench_fold(m=200000, ntheta=4096):
    rng = np.random.default_rng(1)
    coeffs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    half_lgam = 0.5 * gammaln(np.arange(m, dtype=float) + 1.0)
    s = 37.0
    args = (coeffs, np.log(s), 0.5 * s * s, half_lgam, ntheta)
    t_np = timeit(_kernels.bargmann_fold_numpy, *args)
    t_nb = timeit(_kernels.bargmann_fold_numba, *args) \
        if _kernels.HAVE_NUMBA else float("nan")
    print(f"bargmann_fold m={m}:     numpy {t_np * 1e6:8.1f} us   "
          f"numba {t_nb * 1e6:8.1f} us   speedup {t_np / t_nb:5.2f}x")


def bench_pipeline():
    """End to end: one quasimode assembly at hbar = 1e-3 on each path."""
    import scarforge.qnf as qnf
    import scarforge.quasimode as quasimode

    coeffs = qnf.quadratic_model(1.0)
    chi = quasimode.optimize_cutoff(0.1)
    hb = 1e-3
    T = qnf.ehrenfest_time(0.1, 1.0, hb)
    dim = qnf.required_dim(1.0, T)
    Q = qnf.build_q_operator(coeffs, hb, dim)
    for name, mv in (("numba", _kernels.banded_matvec_numba),
                     ("numpy", _kernels.banded_matvec_numpy)):
        if name == "numba" and not _kernels.HAVE_NUMBA:
            continue
        _kernels.banded_matvec = mv
        import scarforge.krylov as krylov
        krylov.banded_matvec = mv
        t0 = time.perf_counter()
        _, rep = quasimode.build_quasimode(Q, coeffs, chi, T, 0.0, hb)
        print(f"quasimode assembly (hbar=1e-3, dim={dim}) [{name}]: "
              f"{time.perf_counter() - t0:6.2f} s   "
              f"norm_sq={rep.norm_sq:.6f}")


if __name__ == "__main__":
    print(f"numba available: {_kernels.HAVE_NUMBA} "
          f"(disabled={_kernels.NUMBA_DISABLED})")
    bench_matvec()
    bench_fold()
    bench_pipeline()
