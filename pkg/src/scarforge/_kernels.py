"""Hot numeric kernels: numba @njit versions with pure-numpy fallbacks.

The numpy path is selected either by setting the environment variable
``SCARFORGE_NO_NUMBA=1`` before import, or automatically when numba is
not importable.  Both paths accumulate in the same order (they differ only
by LLVM's fused multiply-adds, a few ulp); each path is deterministic
run-to-run, which is what the CSV byte-identity contract relies on.

Banded matrices are passed in packed form: an int64 array of diagonal
offsets and a complex128 array ``data[b, i]`` holding, for offset k >= 0,
the element ``A[i, i+k]`` and, for k < 0, the element ``A[i+|k|, i]``.
Rows are padded with zeros past the diagonal length.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("SCARFORGE_NO_NUMBA", "") not in ("", "0")

try:  # pragma: no cover - exercised via env flag in the benchmark
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by SCARFORGE_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


def banded_matvec_numpy(offsets, data, v, out=None):
    """w = A v for a packed banded matrix (see module docstring)."""
    n = v.shape[0]
    if out is None:
        out = np.zeros(n, dtype=np.complex128)
    else:
        out[:] = 0.0
    for b in range(offsets.shape[0]):
        k = int(offsets[b])
        if k >= 0:
            m = n - k
            out[:m] += data[b, :m] * v[k:]
        else:
            m = n + k
            out[-k:] += data[b, :m] * v[:m]
    return out


@njit(cache=True)
def _banded_matvec_jit(offsets, data, v, out):  # pragma: no cover - jit body
    n = v.shape[0]
    for i in range(n):
        out[i] = 0.0 + 0.0j
    for b in range(offsets.shape[0]):
        k = offsets[b]
        if k >= 0:
            m = n - k
            for i in range(m):
                out[i] += data[b, i] * v[i + k]
        else:
            m = n + k
            for i in range(m):
                out[i - k] += data[b, i] * v[i]
    return out


def banded_matvec_numba(offsets, data, v, out=None):
    if out is None:
        out = np.empty(v.shape[0], dtype=np.complex128)
    return _banded_matvec_jit(offsets, data, v, out)


def bargmann_fold_numpy(coeffs, log_s, s2_half, half_lgam, ntheta):
    """Fold coherent-overlap terms of one radius ring onto ntheta angular bins.

    Term m is coeffs[m] * exp(-s^2/2 + m*log s - lgamma(m+1)/2); folding
    index m mod ntheta makes the subsequent FFT over theta exact at the
    DFT nodes.  Terms below the double-precision floor are skipped.
    """
    m = coeffs.shape[0]
    out = np.zeros(ntheta, dtype=np.complex128)
    if not np.isfinite(log_s):  # s == 0 ring: only m = 0 survives
        out[0] = coeffs[0] * math.exp(-s2_half)
        return out
    ms = np.arange(m)
    ln = -s2_half + ms * log_s - half_lgam[:m]
    keep = ln > -745.0
    if not np.any(keep):
        return out
    vals = np.zeros(m, dtype=np.complex128)
    vals[keep] = coeffs[keep] * np.exp(ln[keep])
    pad = (-m) % ntheta
    if pad:
        vals = np.concatenate([vals, np.zeros(pad, dtype=np.complex128)])
    for row in vals.reshape(-1, ntheta):  # ascending m, same order as jit path
        out += row
    return out


@njit(cache=True)
def _bargmann_fold_jit(coeffs, log_s, s2_half, half_lgam, out):  # pragma: no cover
    m = coeffs.shape[0]
    ntheta = out.shape[0]
    for j in range(ntheta):
        out[j] = 0.0 + 0.0j
    if not np.isfinite(log_s):
        out[0] = coeffs[0] * math.exp(-s2_half)
        return out
    for i in range(m):
        ln = -s2_half + i * log_s - half_lgam[i]
        if ln > -745.0:
            out[i % ntheta] += coeffs[i] * math.exp(ln)
    return out


def bargmann_fold_numba(coeffs, log_s, s2_half, half_lgam, ntheta):
    out = np.empty(ntheta, dtype=np.complex128)
    return _bargmann_fold_jit(coeffs, log_s, s2_half, half_lgam, out)


if HAVE_NUMBA:
    banded_matvec = banded_matvec_numba
    bargmann_fold = bargmann_fold_numba
else:
    banded_matvec = banded_matvec_numpy
    bargmann_fold = bargmann_fold_numpy
