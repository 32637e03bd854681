"""Closed-form kernels behind the norm and width laws.

Everything here is hbar-free: dilation overlaps, the S1/S2/S3 integrals of
the time-averaging analysis, a self-contained complex Gamma, and Hermite
function evaluation in position space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

# Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficient set);
# relative accuracy ~1e-13 in the right half plane.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])


def complex_gamma(z):
    """Gamma(z) for complex argument (Lanczos sum, reflection for Re z < 1/2)."""
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    refl = z.real < 0.5
    zz = np.where(refl, 1.0 - z, z)
    acc = np.full_like(zz, _LANCZOS_C[0])
    for k in range(1, _LANCZOS_C.shape[0]):
        acc += _LANCZOS_C[k] / (zz - 1.0 + k)
    t = zz + _LANCZOS_G - 0.5
    g = math.sqrt(2.0 * math.pi) * t ** (zz - 0.5) * np.exp(-t) * acc
    out[~refl] = g[~refl]
    if np.any(refl):
        out[refl] = math.pi / (np.sin(math.pi * z[refl]) * g[refl])
    return out[0] if scalar else out


def _sech_half_transform_quadrature(q1, theta, moment=0, tol=1e-12, rule="gauss"):
    """integral over R of |r|^moment e^{i r theta} sech^{1/2}(q1 r) dr (real part).

    Integrand decays like e^{-q1 r / 2}; the range follows the tolerance.
    rule 'gauss' uses composite 20-point Gauss-Legendre panels, 'simpson' a
    fine composite Simpson rule (the two serve as independent cross-checks).
    """
    R = 2.0 * math.log(1.0 / tol) / q1 + 10.0
    theta = abs(theta)

    def f(r):
        return r ** moment * np.cos(r * theta) / np.sqrt(np.cosh(q1 * r))

    if rule == "gauss":
        panel = min(1.0, math.pi / (2.0 * (1.0 + theta)))
        nodes, weights = np.polynomial.legendre.leggauss(20)
        total = 0.0
        a = 0.0
        while a < R:
            b = min(a + panel, R)
            x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            total += 0.5 * (b - a) * float(np.sum(weights * f(x)))
            a = b
        return 2.0 * total
    if rule == "simpson":
        n = 2 * int(32 * R * (1.0 + theta)) + 2
        x = np.linspace(0.0, R, n + 1)
        y = f(x)
        h = x[1] - x[0]
        total = h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))
        return 2.0 * total
    raise ValueError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class S1Profile:
    """Overlap-transform profile S1 at expansion rate q1 and scaled detuning."""

    q1: float
    theta: float

    def value(self):
        return s1(self.q1, self.theta)


def s1(q1, theta):
    """S1(q1, theta) = |Gamma(1/4 + i theta/(2 q1))|^2 / (q1 sqrt(2 pi)).

    Equals the Fourier transform of (cosh q1 r)^{-1/2} at frequency theta.
    """
    if q1 <= 0:
        raise ValueError("q1 must be positive")
    g = complex_gamma(0.25 + 0.5j * np.asarray(theta, dtype=float) / q1)
    return np.abs(g) ** 2 / (q1 * math.sqrt(2.0 * math.pi))


def s1_quadrature(q1, theta, tol=1e-12, rule="gauss"):
    """Direct quadrature oracle for s1."""
    if q1 <= 0:
        raise ValueError("q1 must be positive")
    return _sech_half_transform_quadrature(q1, theta, 0, tol, rule)


def s2_s3(q1, rule="gauss"):
    """Subleading norm-law constants:

    S2 = 2 int |r| sech^{1/2}(q1 r) dr   (scales like q1^-2)
    S3 = (1/2) int r^2 sech^{1/2}(q1 r) dr   (scales like q1^-3)
    """
    if q1 <= 0:
        raise ValueError("q1 must be positive")
    s2 = 2.0 * _sech_half_transform_quadrature(q1, 0.0, 1, rule=rule)
    s3 = 0.5 * _sech_half_transform_quadrature(q1, 0.0, 2, rule=rule)
    return s2, s3


# ---------------------------------------------------------------------------
# dilation overlap kernels, exact bookkeeping over sinh^j cosh^{-k/2}


def _poly_negate(terms):
    return {(j, k): ((-1) ** j) * c for (j, k), c in terms.items()}


def _poly_dbeta(terms):
    """d/d beta in the basis sinh^j cosh^{-k/2} (k odd, Fraction coefficients)."""
    out = {}
    for (j, k), c in terms.items():
        if j > 0:
            key = (j - 1, k + 2)
            out[key] = out.get(key, Fraction(0)) + j * c
        key = (j + 1, k + 2)
        out[key] = out.get(key, Fraction(0)) + (j - Fraction(k, 2)) * c
    return {key: c for key, c in out.items() if c != 0}


@lru_cache(maxsize=None)
def _kernel_terms_raw(m_row, m_col):
    """Terms of sqrt(m_row! m_col!) <phi_m_row, D_beta phi_m_col>, both even.

    Raising the row index obeys K_{m+2} = m(m-1) K_{m-2} - 2 dK_m / dbeta,
    Fraction-exact in this basis; the m_row = 0 column comes from the
    beta -> -beta symmetry of the adjoint.
    """
    if m_row == 0 and m_col == 0:
        return (((0, 1), Fraction(1)),)
    if m_row == 0:
        # <phi_0, D_beta phi_m> = <phi_m, D_{-beta} phi_0>
        flipped = _poly_negate(dict(_kernel_terms_raw(m_col, 0)))
        return tuple(sorted(flipped.items()))
    mm = m_row - 2
    out = {}
    if mm >= 2:
        for key, c in _kernel_terms_raw(mm - 2, m_col):
            out[key] = out.get(key, Fraction(0)) + mm * (mm - 1) * c
    for key, c in _poly_dbeta(dict(_kernel_terms_raw(mm, m_col))).items():
        out[key] = out.get(key, Fraction(0)) - 2 * c
    return tuple(sorted((k, c) for k, c in out.items() if c != 0))


@dataclass(frozen=True)
class OverlapKernel:
    """Closed-form evaluator for <phi_m1, D_beta phi_m2> (even indices)."""

    m1: int
    m2: int
    terms: tuple
    zero: bool = False

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=float)
        if self.zero:
            return np.zeros_like(beta)
        sh = np.sinh(beta)
        ch = np.cosh(beta)
        scale = math.exp(-0.5 * (math.lgamma(self.m1 + 1) + math.lgamma(self.m2 + 1)))
        out = np.zeros_like(beta)
        for (j, k), c in self.terms:
            out += float(c) * sh ** j * ch ** (-0.5 * k)
        return out * scale


def overlap_kernel(m1, m2):
    """Kernel beta -> <phi_m1, D_beta phi_m2> built by exact differentiation
    of (cosh beta)^{-1/2} through the ladder recursion.

    Mixed-parity index pairs give the identically-zero kernel (flagged);
    both-odd pairs are outside the even-sector bookkeeping and rejected.
    """
    if m1 % 2 and m2 % 2:
        raise ValueError("odd-odd overlap kernels are not supported")
    if (m1 + m2) % 2:
        return OverlapKernel(m1, m2, (), zero=True)
    if m1 > 12 or m2 > 12 or m1 < 0 or m2 < 0:
        raise ValueError("indices must lie in 0..12")
    return OverlapKernel(m1, m2, _kernel_terms_raw(m1, m2))


def hermite_position(m, hbar, x_samples):
    """phi_m(x): normalized Hermite function, stable three-term recurrence."""
    if m > 64:
        raise ValueError("m must be at most 64")
    x = np.asarray(x_samples, dtype=float)
    u = x / math.sqrt(hbar)
    h0 = math.pi ** -0.25 * np.exp(-0.5 * u * u)
    if m == 0:
        return hbar ** -0.25 * h0
    h1 = math.sqrt(2.0) * u * h0
    if m == 1:
        return hbar ** -0.25 * h1
    hm2, hm1 = h0, h1
    for k in range(2, m + 1):
        hm = math.sqrt(2.0 / k) * u * hm1 - math.sqrt((k - 1) / k) * hm2
        hm2, hm1 = hm1, hm
    return hbar ** -0.25 * hm1
