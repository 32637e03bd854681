"""Number-basis linear algebra: ladder operators, Weyl powers of x*xi,
dilation operators, and the squeezed states they generate.

Conventions (fixed against the symmetrization oracle, see weyl_oracle):
    a* = Op((x - i xi)/sqrt(2 hbar)),   Op_w(x xi) = (i hbar / 2)((a*)^2 - a^2)
so the dilation generator -i Op_w(x xi)/hbar = (1/2)((a*)^2 - a^2) is
hbar-free in the number basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm
from scipy.special import gammaln

from . import krylov


class InvalidDimensionError(ValueError):
    pass


class UnsupportedOrderError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """Requested parameters exceed what the truncated basis resolves."""


@dataclass(frozen=True)
class FockState:
    """Complex coefficients over the number basis {phi_m, 0 <= m < dim}."""

    coeffs: np.ndarray
    hbar: float

    @property
    def dim(self):
        return self.coeffs.shape[0]

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other):
        """<self, other> with the physics convention (conjugate first slot)."""
        n = min(self.dim, other.dim)
        return complex(np.vdot(self.coeffs[:n], other.coeffs[:n]))

    def normalized(self):
        return FockState(self.coeffs / self.norm(), self.hbar)

    def padded(self, dim):
        if dim <= self.dim:
            return self
        c = np.zeros(dim, dtype=np.complex128)
        c[: self.dim] = self.coeffs
        return FockState(c, self.hbar)


def vacuum(hbar, dim):
    c = np.zeros(dim, dtype=np.complex128)
    c[0] = 1.0
    return FockState(c, hbar)


def basis_state(m, hbar, dim):
    c = np.zeros(dim, dtype=np.complex128)
    c[m] = 1.0
    return FockState(c, hbar)


class BandedOperator:
    """Banded matrix in the number basis, stored as row-indexed diagonals.

    bands[o][i] = A[i, i+o], zero-padded outside validity.  Supports the
    small operator algebra the normal-form assembly needs (sums, products,
    scalar multiples) without densifying.
    """

    def __init__(self, dim, bands, hermitian=False):
        self.dim = int(dim)
        self.bands = {}
        for o, arr in bands.items():
            a = np.asarray(arr, dtype=np.complex128)
            if a.shape != (self.dim,):
                full = np.zeros(self.dim, dtype=np.complex128)
                if o >= 0:
                    full[: a.shape[0]] = a
                else:
                    full[-o: -o + a.shape[0]] = a
                a = full
            if np.any(a != 0):
                self.bands[int(o)] = a
        if not self.bands:
            self.bands = {0: np.zeros(self.dim, dtype=np.complex128)}
        self.hermitian = bool(hermitian)
        self._packed = None

    @property
    def offsets(self):
        return sorted(self.bands)

    def band(self, o):
        """Diagonal at offset o as a length dim-|o| array."""
        arr = self.bands.get(int(o))
        if arr is None:
            return np.zeros(self.dim - abs(o), dtype=np.complex128)
        if o >= 0:
            return arr[: self.dim - o].copy()
        return arr[-o:].copy()

    def packed(self):
        if self._packed is None:
            offs = np.array(self.offsets, dtype=np.int64)
            data = np.zeros((offs.shape[0], self.dim), dtype=np.complex128)
            for b, o in enumerate(offs):
                if o >= 0:
                    data[b, : self.dim - o] = self.bands[o][: self.dim - o]
                else:
                    data[b, : self.dim + o] = self.bands[o][-o:]
            self._packed = (offs, data)
        return self._packed

    def apply(self, v):
        if isinstance(v, FockState):
            return FockState(self.apply(v.coeffs), v.hbar)
        v = np.asarray(v, dtype=np.complex128)
        w = np.zeros(self.dim, dtype=np.complex128)
        for o, arr in self.bands.items():
            if o >= 0:
                w[: self.dim - o] += arr[: self.dim - o] * v[o:]
            else:
                w[-o:] += arr[-o:] * v[: self.dim + o]
        return w

    def to_dense(self):
        A = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for o, arr in self.bands.items():
            idx = np.arange(max(0, -o), self.dim - max(0, o))
            A[idx, idx + o] = arr[idx]
        return A

    def __add__(self, other):
        bands = {o: arr.copy() for o, arr in self.bands.items()}
        for o, arr in other.bands.items():
            bands[o] = bands.get(o, 0) + arr
        return BandedOperator(self.dim, bands,
                              hermitian=self.hermitian and other.hermitian)

    def scaled(self, c):
        herm = self.hermitian and abs(complex(c).imag) == 0.0
        return BandedOperator(self.dim, {o: c * a for o, a in self.bands.items()},
                              hermitian=herm)

    def __matmul__(self, other):
        if self.dim != other.dim:
            raise InvalidDimensionError("dimension mismatch")
        n = self.dim
        out = {}
        for oa, a in self.bands.items():
            for ob, b in other.bands.items():
                oc = oa + ob
                if abs(oc) >= n:
                    continue
                term = np.zeros(n, dtype=np.complex128)
                # C[i, i+oc] = A[i, i+oa] * B[i+oa, i+oa+ob]
                if oa >= 0:
                    term[: n - oa] = a[: n - oa] * b[oa:]
                else:
                    term[-oa:] = a[-oa:] * b[: n + oa]
                out[oc] = out.get(oc, 0) + term
        return BandedOperator(n, out)

    def adjoint(self):
        n = self.dim
        out = {}
        for o, a in self.bands.items():
            t = np.zeros(n, dtype=np.complex128)
            if o >= 0:
                t[o:] = np.conj(a[: n - o])
            else:
                t[: n + o] = np.conj(a[-o:])
            out[-o] = t
        return BandedOperator(n, out, hermitian=self.hermitian)

    def hermiticity_defect(self):
        """Max relative elementwise deviation between band(-k) and band(k)*."""
        scale = max(float(np.max(np.abs(a))) for a in self.bands.values())
        if scale == 0.0:
            return 0.0
        worst = 0.0
        for o in set(abs(k) for k in self.bands):
            up = self.band(o)
            lo = self.band(-o)
            worst = max(worst, float(np.max(np.abs(lo - np.conj(up)))) / scale)
        return worst

    def cropped(self, dim):
        if dim > self.dim:
            raise InvalidDimensionError("cannot crop to a larger dimension")
        bands = {}
        for o, arr in self.bands.items():
            if abs(o) < dim:
                bands[o] = arr[:dim].copy()
                if o < 0:
                    bands[o][:-o] = 0.0
        return BandedOperator(dim, bands, hermitian=self.hermitian)


def ladder_matrices(hbar, dim):
    """(a, a*) with (a v)_m = sqrt(m+1) v_{m+1}, a* the adjoint of a."""
    if dim < 4:
        raise InvalidDimensionError("dim must be at least 4")
    m = np.arange(dim, dtype=float)
    a = BandedOperator(dim, {+1: np.sqrt(m + 1.0)})
    a_star = BandedOperator(dim, {-1: np.sqrt(m)})
    return a, a_star


def op_xxi(hbar, dim):
    """Weyl quantization of x*xi: (i hbar/2)((a*)^2 - a^2), hermitian."""
    if dim < 4:
        raise InvalidDimensionError("dim must be at least 4")
    i = np.arange(dim, dtype=float)
    lower = 0.5j * hbar * np.sqrt(np.maximum(i - 1.0, 0.0) * i)   # A[i, i-2]
    upper = -0.5j * hbar * np.sqrt((i + 1.0) * (i + 2.0))          # A[i, i+2]
    return BandedOperator(dim, {-2: lower, +2: upper}, hermitian=True)


@lru_cache(maxsize=16)
def _xxi_polynomial(alpha):
    """Coefficients of Op_w((x xi)^alpha) as a polynomial in A = Op_w(x xi).

    Returns a tuple p with Op_w((x xi)^alpha) = sum_k p[k] hbar^{2k} A^{alpha-2k},
    exact Fractions, from the Moyal recursion
        P_{a+1} = P_a A - (a^2 hbar^2 / 4) P_{a-1}.
    """
    p_prev = (Fraction(1),)             # alpha = 0 -> identity
    p_cur = (Fraction(1),)              # alpha = 1 -> A
    if alpha == 0:
        return p_prev
    for a in range(1, alpha):
        kmax = a // 2 + 1
        nxt = [Fraction(0)] * ((a + 1) // 2 + 1)
        for k in range(len(p_cur)):
            nxt[k] += p_cur[k]
        for k in range(len(p_prev)):
            if k + 1 < len(nxt):
                nxt[k + 1] -= Fraction(a * a, 4) * p_prev[k]
        p_prev, p_cur = p_cur, tuple(nxt[: (a + 1) // 2 + 1])
    return p_cur


@dataclass(frozen=True)
class XXiPowerDecomposition:
    """Op_w((x xi)^alpha) through powers of Op_w(x xi) and its ground action."""

    alpha: int
    c_coeffs: np.ndarray          # c_{alpha,k}, 1 <= k <= alpha//2
    d_coeffs: np.ndarray          # d_{alpha,k}, 0 <= k <= alpha//2
    c_exact: tuple = field(default=(), repr=False)


def weyl_power_xxi(alpha, hbar, dim):
    """Op_w((x xi)^alpha) as a band matrix plus its power-expansion data.

    Matrix elements are those of the untruncated operator (the product
    recursion runs on an extended basis and is cropped), so interior rows
    agree with the symmetrization oracle to rounding.
    """
    if not 1 <= alpha <= 6:
        raise UnsupportedOrderError("alpha must lie in 1..6")
    if dim < 2 * alpha + 8:
        raise InvalidDimensionError(f"dim must be at least {2 * alpha + 8}")
    ext = dim + 2 * alpha + 2
    A = op_xxi(hbar, ext)
    poly = _xxi_polynomial(alpha)
    # Horner on banded operators: acc = sum_k p[k] hbar^{2k} A^{alpha-2k}
    acc = None
    power = BandedOperator(ext, {0: np.ones(ext)})  # A^0
    powers = [power]
    for _ in range(alpha):
        power = power @ A
        powers.append(power)
    for k, pk in enumerate(poly):
        term = powers[alpha - 2 * k].scaled(float(pk) * hbar ** (2 * k))
        acc = term if acc is None else acc + term
    op = acc.cropped(dim)
    op.hermitian = True
    c = np.array([float(poly[k]) for k in range(1, len(poly))])
    ground = acc.apply(np.eye(ext, dtype=np.complex128)[0])
    d = np.array([ground[2 * alpha - 4 * k] / hbar ** alpha
                  for k in range(alpha // 2 + 1)])
    return op, XXiPowerDecomposition(alpha, c, d, tuple(poly[1:]))


def xxi_power_on_ground(alpha, hbar, dim):
    """Op_w((x xi)^alpha) phi_0 as a FockState (support on indices 2 alpha - 4k)."""
    if alpha > 6:
        raise UnsupportedOrderError("alpha must be at most 6")
    op, _ = weyl_power_xxi(alpha, hbar, max(dim, 2 * alpha + 8))
    out = op.apply(np.eye(op.dim, dtype=np.complex128)[0])
    return FockState(out[:dim], hbar)


def weyl_oracle(alpha, hbar, dim):
    """Brute-force Weyl quantization of x^alpha xi^alpha by full symmetrization.

    Averages the operator product over every arrangement of alpha copies of
    x-hat and alpha copies of p-hat, built from the exact tridiagonal number
    basis matrices.  Independent of the Moyal recursion; interior rows
    (m <= dim/2) are exact.
    """
    from itertools import combinations

    if alpha > 4:
        raise UnsupportedOrderError("oracle supports alpha <= 4")
    ext = dim + 2 * alpha + 2
    r = np.sqrt(hbar / 2.0)
    m = np.arange(ext, dtype=float)
    up = np.sqrt(m + 1.0)[: ext - 1]
    xhat = np.zeros((ext, ext), dtype=np.complex128)
    xhat[np.arange(ext - 1), np.arange(1, ext)] = r * up        # a part
    xhat[np.arange(1, ext), np.arange(ext - 1)] = r * up        # a* part
    phat = np.zeros((ext, ext), dtype=np.complex128)
    phat[np.arange(ext - 1), np.arange(1, ext)] = -1j * r * up
    phat[np.arange(1, ext), np.arange(ext - 1)] = 1j * r * up
    total = np.zeros((ext, ext), dtype=np.complex128)
    slots = 2 * alpha
    for xpos in combinations(range(slots), alpha):
        word = np.eye(ext, dtype=np.complex128)
        xset = set(xpos)
        for s in range(slots):
            word = word @ (xhat if s in xset else phat)
        total += word
    total /= math.comb(slots, alpha)
    return total[:dim, :dim]


# ---------------------------------------------------------------------------
# dilation operators


def _dilation_generator_packed(dim):
    """Packed H = i K with K = ((a*)^2 - a^2)/2, so e^{beta K} = e^{-i beta H}."""
    i = np.arange(dim, dtype=float)
    t_low = 0.5 * np.sqrt(np.maximum(i - 1.0, 0.0) * i)    # K[i, i-2]
    offs = np.array([-2, 2], dtype=np.int64)
    data = np.zeros((2, dim), dtype=np.complex128)
    data[0, : dim - 2] = 1j * t_low[2:]      # H[i+2, i] = i K[i+2, i]
    data[1, : dim - 2] = -1j * t_low[2:]     # H[i, i+2] = -i K[i+2, i]
    return offs, data


def dilation_dim_for(beta, floor=400):
    """Default truncation for dilation work: squeezed support spreads ~ e^{2|b|}."""
    return max(floor, 4 * math.ceil(math.exp(2.0 * abs(beta))))


@lru_cache(maxsize=4)
def _dilation_sector_eig(internal, parity):
    """Eigendata of one parity sector of the dilation generator.

    In sector basis |2k + parity> the generator K is tridiagonal
    antisymmetric with t_k = sqrt((2k+1+p)(2k+2+p))/2; the phase map
    diag(i^k) turns i K into a real symmetric tridiagonal, whose
    eigensolve is O(n^2) and gets cached across beta values.
    """
    nsec = (internal - parity + 1) // 2
    k = np.arange(nsec - 1, dtype=float)
    t = 0.5 * np.sqrt((2 * k + 1 + parity) * (2 * k + 2 + parity))
    lam, W = eigh_tridiagonal(np.zeros(nsec), t)
    return lam, W


def _dilation_block_sector(beta, rows, cols, lam, W):
    """[e^{beta K_sector}]_{rows, cols} via the phase-mapped eigensolve."""
    phase_r = 1j ** np.arange(rows)
    phase_c = 1j ** np.arange(cols)
    core = (W[:rows] * np.exp(-1j * beta * lam)) @ W[:cols].conj().T
    return phase_r[:, None] * core * phase_c.conj()[None, :]


def dilation(beta, hbar, dim, *, internal_cap=32768, dense_cutoff=1200):
    """Dense dim x dim matrix of D_beta u(x) = e^{-beta/2} u(e^{-beta} x).

    Computed as exp of (-i beta / hbar) Op_w(x xi), which is hbar-free in the
    number basis.  The exponential runs at an internally grown truncation
    max(dim, 4 ceil(e^{2|beta|})) and the leading block is returned, so the
    entries are exact elements of the untruncated operator; if the growth
    would exceed internal_cap a TruncationWarning reports the estimated
    defect of the capped computation.
    """
    if abs(beta) > 12:
        raise ValueError("|beta| <= 12 supported")
    internal = max(dim, dilation_dim_for(beta, floor=dim))
    if internal > internal_cap:
        internal = internal_cap
        lam_e, We = _dilation_sector_eig(internal, 0)
        w0 = np.abs(We[0]) ** 2
        g = np.sum(w0 * np.exp(-1j * beta * lam_e))
        defect = abs(g - 1.0 / math.sqrt(math.cosh(beta)))
        warnings.warn(
            f"dilation at beta={beta} capped at internal dim {internal}; "
            f"estimated truncation defect {defect:.2e}",
            TruncationWarning,
        )
    if internal <= dense_cutoff:
        i = np.arange(internal, dtype=float)
        t = 0.5 * np.sqrt(np.maximum(i - 1.0, 0.0) * i)
        K = np.zeros((internal, internal))
        K[np.arange(2, internal), np.arange(internal - 2)] = t[2:]
        K[np.arange(internal - 2), np.arange(2, internal)] = -t[2:]
        return expm(beta * K)[:dim, :dim].astype(np.complex128)
    lam_e, We = _dilation_sector_eig(internal, 0)
    lam_o, Wo = _dilation_sector_eig(internal, 1)
    out = np.zeros((dim, dim), dtype=np.complex128)
    ne_r = (dim + 1) // 2
    no_r = dim // 2
    out[0::2, 0::2] = _dilation_block_sector(beta, ne_r, ne_r, lam_e, We)
    out[1::2, 1::2] = _dilation_block_sector(beta, no_r, no_r, lam_o, Wo)
    return out


def dilation_apply(beta, state, *, internal=None, tol=1e-13):
    """D_beta applied to a FockState via Lanczos stepping on the generator."""
    dim = state.dim if internal is None else max(state.dim, internal)
    v = state.padded(dim).coeffs
    offs, data = _dilation_generator_packed(dim)
    out = krylov.expm_action(offs, data, v, beta, tol=tol)
    return FockState(out, state.hbar)


def dilation_overlap_curve(m_row, m_col, betas, *, internal):
    """Fock-numeric <phi_m_row, D_beta phi_m_col> over a grid of beta values.

    Works through the cached sector eigendecomposition of the truncated
    generator, so the whole curve costs one tridiagonal eigensolve plus
    O(internal) per beta.  internal should follow dilation_dim_for for the
    largest |beta| requested.
    """
    betas = np.asarray(betas, dtype=float)
    if (m_row + m_col) % 2:
        return np.zeros(betas.shape, dtype=np.complex128)
    parity = m_row % 2
    lam, W = _dilation_sector_eig(internal, parity)
    k1 = (m_row - parity) // 2
    k2 = (m_col - parity) // 2
    weights = W[k1] * W[k2]
    phases = np.exp(-1j * np.outer(betas, lam))
    vals = phases @ weights
    return (1j ** k1) * np.conj(1j ** k2) * vals


def squeezed_vacuum(beta, hbar, dim):
    """Closed-form Fock coefficients of D_beta phi_0 (log-stable evaluation)."""
    mm = np.arange((dim + 1) // 2, dtype=float)
    th = math.tanh(abs(beta))
    if th == 0.0:
        return vacuum(hbar, dim)
    ln = (-0.5 * math.log(math.cosh(beta))
          + mm * math.log(th)
          + 0.5 * gammaln(2 * mm + 1) - mm * math.log(2.0) - gammaln(mm + 1))
    c = np.zeros(dim, dtype=np.complex128)
    vals = np.exp(ln)
    if beta < 0:
        vals = vals * (-1.0) ** mm
    c[0::2] = vals[: (dim + 1) // 2]
    return FockState(c, hbar)
