"""Reduced normal-form Hamiltonians and their propagation.

The transverse operator is Q = sum_alpha q^alpha Op_w((x xi)^alpha); the
longitudinal factor is carried as metadata (energy q0 and a winding phase),
never discretized.  Propagation is exact Krylov evolution; the Dyson
expansion around the quadratic flow is assembled with exact (t, hbar)
polynomial bookkeeping, which is possible because every Op_w((x xi)^alpha)
scales as hbar^alpha times an hbar-free band matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import krylov
from ._kernels import bargmann_fold
from .fock import BandedOperator, FockState, dilation_apply, weyl_power_xxi

from scipy.special import gammaln


@dataclass(frozen=True)
class LongitudinalData:
    """Plane-wave factor data: winding n, reduced energy q0, action phase."""

    n: int
    q0: float
    action_phase: float = 0.0


@dataclass(frozen=True)
class NormalFormCoefficients:
    """The numbers q^alpha, alpha = 1..N, each a scalar or an hbar-polynomial
    (coefficient sequence, low order first), plus longitudinal metadata."""

    N: int
    q: tuple
    lambda0: float
    longitudinal: LongitudinalData
    e0: float | None = None
    e0_drift: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.N < 1 or len(self.q) != self.N:
            raise ValueError("need q^alpha for alpha = 1..N")
        if abs(self.q_alpha(1, 0.0) - self.lambda0) > 1e-12 * max(1.0, abs(self.lambda0)):
            raise ValueError("q^1 at hbar=0 must equal lambda0")

    def hbar_poly(self, alpha):
        qa = self.q[alpha - 1]
        if np.isscalar(qa):
            return (float(qa),)
        return tuple(float(c) for c in qa)

    def q_alpha(self, alpha, hbar):
        poly = self.hbar_poly(alpha)
        return float(sum(c * hbar ** i for i, c in enumerate(poly)))


def quadratic_model(lam=1.0, q0=0.0, n=0):
    """Pure dilation model: Q = lam Op_w(x xi)."""
    return NormalFormCoefficients(1, (lam,), lam, LongitudinalData(n, q0))


def make_coefficients(qs, q0=0.0, n=0, e0=None):
    """NormalFormCoefficients from a plain sequence (q^1, q^2, ...)."""
    qs = tuple(qs)
    lam0 = qs[0] if np.isscalar(qs[0]) else qs[0][0]
    nf = NormalFormCoefficients(len(qs), qs, float(lam0), LongitudinalData(n, q0), e0=e0)
    if e0 is not None:
        object.__setattr__(nf, "e0_drift", abs(q0 - e0))
    return nf


def ehrenfest_time(epsilon_prime, lam, hbar):
    """T = (1 - eps') |log hbar| / (2 lam)."""
    if not 0 <= epsilon_prime < 1 or lam <= 0 or not 0 < hbar < 1:
        raise ValueError("need 0 <= eps' < 1, lam > 0, 0 < hbar < 1")
    return (1.0 - epsilon_prime) * abs(math.log(hbar)) / (2.0 * lam)


def required_dim(lam, t, cap=262144):
    """Truncation comfortably holding a squeezed state at parameter lam*t."""
    need = 20.0 * math.exp(2.0 * abs(lam * t))
    return int(min(cap, max(256, 64 * math.ceil(need / 64))))


def build_q_operator(coeffs, hbar, dim):
    """Q^(N) = sum_alpha q^alpha(hbar) Op_w((x xi)^alpha), hermitian banded."""
    if dim < 2 * coeffs.N + 16:
        raise ValueError(f"dim must be at least {2 * coeffs.N + 16}")
    acc = None
    for alpha in range(1, coeffs.N + 1):
        qa = coeffs.q_alpha(alpha, hbar)
        if qa == 0.0:
            continue
        op, _ = weyl_power_xxi(alpha, hbar, dim)
        term = op.scaled(qa)
        acc = term if acc is None else acc + term
    if acc is None:
        acc = BandedOperator(dim, {0: np.zeros(dim)}, hermitian=True)
    acc.hermitian = True
    return acc


def _generator_packed(Q, hbar):
    offs, data = Q.packed()
    return offs, data / hbar


def propagate_exact(Q, psi0, t, *, tol=1e-12, overflow_tol=1e-8):
    """exp(-i t Q / hbar) psi0 with unitary Krylov stepping.

    Raises EhrenfestOverflowError when the evolving state pushes more than
    overflow_tol of its mass into the top quarter of the basis.
    """
    offs, data = _generator_packed(Q, psi0.hbar)
    out = krylov.expm_action(offs, data, psi0.coeffs, t,
                             tol=tol, overflow_tol=overflow_tol)
    return FockState(out, psi0.hbar)


def propagate_collect(Q, psi0, times, callback, *, tol=1e-12, overflow_tol=1e-8):
    """Stream exp(-i t Q/hbar) psi0 through callback(t, coeffs) at each time."""
    offs, data = _generator_packed(Q, psi0.hbar)
    krylov.propagate_times_parity(offs, data, psi0.coeffs, times,
                                  tol=tol, overflow_tol=overflow_tol,
                                  callback=callback)


# ---------------------------------------------------------------------------
# Dyson expansion around the quadratic flow


def _hbar_free_power_ops(coeffs, l):
    """Q_nq as a map hbar-power -> hbar-free banded operator, on a basis just
    large enough for l applications to the ground state."""
    dim = 2 * coeffs.N * (l + 1) + 2 * coeffs.N + 10
    terms = {}
    for alpha in range(2, coeffs.N + 1):
        m_alpha, _ = weyl_power_xxi(alpha, 1.0, dim)  # hbar = 1: the hbar-free factor
        for i, qi in enumerate(coeffs.hbar_poly(alpha)):
            if qi == 0.0:
                continue
            p = alpha + i
            cur = terms.get(p)
            terms[p] = m_alpha.scaled(qi) if cur is None else cur + m_alpha.scaled(qi)
    return dim, terms


@dataclass(frozen=True)
class DysonExpansion:
    """Coefficients c_m(t, hbar) of the squeezed-excited-state expansion.

    coefficients[m] maps (j, p) -> complex for the monomial t^j hbar^p; the
    polynomial degree in t is at most l.  min_hbar_order records the true
    leading hbar power of each c_m as computed (not asserted from a table).
    """

    l: int
    hbar: float
    coefficients: dict
    remainder_bound: float
    source: NormalFormCoefficients = field(repr=False, default=None)

    def c_m(self, m, t):
        terms = self.coefficients.get(m, {})
        return complex(sum(c * t ** j * self.hbar ** p for (j, p), c in terms.items()))

    def min_hbar_order(self, m):
        terms = self.coefficients.get(m, {})
        return min((p for (_, p), c in terms.items() if abs(c) > 1e-300), default=None)

    def degree_t(self, m):
        terms = self.coefficients.get(m, {})
        return max((j for (j, _), c in terms.items() if abs(c) > 1e-300), default=0)

    def reconstruct(self, t, dim):
        """U_q(t) (phi_0 + sum_m c_m(t) phi_{2m}) as a FockState."""
        combo = np.zeros(dim, dtype=np.complex128)
        combo[0] = 1.0
        for m in self.coefficients:
            combo[2 * m] += self.c_m(m, t)
        q1 = self.source.q_alpha(1, self.hbar)
        return dilation_apply(t * q1, FockState(combo, self.hbar))


def dyson_expand(coeffs, hbar, l):
    """Exact order-l expansion of exp(-i t Q_nq / hbar) phi_0 in (t, hbar).

    Because Q_nq commutes with the quadratic flow, the full evolution is
    U_q(t) exp(-i t Q_nq / hbar), and the latter Taylors into polynomials
    with the stated degrees.
    """
    if l > 4 or coeffs.N > 4:
        raise ValueError("supported range is l <= 4, N <= 4")
    dim, power_ops = _hbar_free_power_ops(coeffs, l)
    e0 = np.zeros(dim, dtype=np.complex128)
    e0[0] = 1.0
    layers = {0: e0}                     # hbar-power -> vector for (Q_nq)^j phi_0
    cmap = {}
    for j in range(1, l + 1):
        nxt = {}
        for p, vec in layers.items():
            for dp, op in power_ops.items():
                w = op.apply(vec)
                key = p + dp
                if key in nxt:
                    nxt[key] += w
                else:
                    nxt[key] = w
        layers = nxt
        pref = (-1j) ** j / math.factorial(j)
        for p, vec in layers.items():
            nz = np.nonzero(np.abs(vec) > 1e-300)[0]
            for idx in nz:
                m = idx // 2
                cmap.setdefault(m, {})[(j, p - j)] = (
                    cmap.get(m, {}).get((j, p - j), 0.0) + pref * vec[idx]
                )
    # remainder constant: sup over sample times of ||tail|| / (t hbar)^{l+1}
    cl = 0.0
    for t in (0.5, 1.0, 2.0):
        tail = _dyson_tail_norm(coeffs, hbar, t, l)
        cl = max(cl, tail / (abs(t) * hbar) ** (l + 1))
    return DysonExpansion(l, hbar, cmap, cl, source=coeffs)


def _build_q_nq(coeffs, hbar, dim):
    acc = None
    for alpha in range(2, coeffs.N + 1):
        qa = coeffs.q_alpha(alpha, hbar)
        if qa == 0.0:
            continue
        op, _ = weyl_power_xxi(alpha, hbar, dim)
        term = op.scaled(qa)
        acc = term if acc is None else acc + term
    return acc


def _dyson_tail_norm(coeffs, hbar, t, l, jmax=80):
    """|| sum_{j > l} (-i t / hbar)^j (Q_nq)^j phi_0 / j! ||, summed directly.

    Equals ||exact - order-l reconstruction|| without the cancellation of
    subtracting two propagated states, since U_q is unitary and commutes
    with Q_nq.
    """
    dim = 2 * coeffs.N * (l + 12) + 10
    qnq = _build_q_nq(coeffs, hbar, dim)
    if qnq is None:
        return 0.0
    z = -1j * t / hbar
    w = np.zeros(dim, dtype=np.complex128)
    w[0] = 1.0
    for j in range(1, l + 1):
        w = qnq.apply(w) * (z / j)
    acc = np.zeros(dim, dtype=np.complex128)
    for j in range(l + 1, jmax):
        w = qnq.apply(w) * (z / j)
        acc += w
        if np.linalg.norm(w) < 1e-18 * max(np.linalg.norm(acc), 1e-30):
            break
    return float(np.linalg.norm(acc))


def dyson_remainder_norm(coeffs, hbar, t, l, method="auto", dim=None):
    """||exp(-i t Q/hbar) phi_0 - U_q(t)(phi_0 + sum c_m phi_2m)||.

    'direct' subtracts the two propagated states; 'tail' sums the Taylor
    tail of the commuting factor, exact to rounding and usable when the
    difference sits below propagation accuracy.  'auto' picks 'direct'
    whenever the expected remainder is comfortably above the propagation
    tolerance.
    """
    if method == "auto":
        expect = (abs(t) * hbar) ** (l + 1)
        method = "direct" if expect > 1e-9 else "tail"
    if method == "tail":
        return _dyson_tail_norm(coeffs, hbar, t, l)
    if dim is None:
        dim = required_dim(coeffs.lambda0, t)
    exp = dyson_expand(coeffs, hbar, l)
    Q = build_q_operator(coeffs, hbar, dim)
    psi = propagate_exact(Q, vacuum_state(hbar, dim), t, tol=1e-13)
    recon = exp.reconstruct(t, dim)
    return float(np.linalg.norm(psi.coeffs - recon.coeffs))


def vacuum_state(hbar, dim):
    c = np.zeros(dim, dtype=np.complex128)
    c[0] = 1.0
    return FockState(c, hbar)


# ---------------------------------------------------------------------------
# Husimi localization


@dataclass(frozen=True)
class LocalizationReport:
    """Mass outside the microlocalization box at one instant."""

    epsilon_prime: float
    box_halfwidth: float
    outside_mass: float
    t: float = 0.0


def husimi_box_mass(state, half_x, half_xi=None, *, nrho=512, ntheta=4096):
    """Husimi mass of a Fock state inside the box |x|<=half_x, |xi|<=half_xi.

    Works on a polar phase-space grid: per radius ring the Bargmann series
    folds onto the angular bins (log-stable term evaluation) and an FFT
    gives the coherent overlap at every angle; the box indicator is applied
    at the grid points.  Needs a normalized state.
    """
    if half_xi is None:
        half_xi = half_x
    hbar = state.hbar
    c = state.coeffs
    rho_max = math.sqrt(2.0) * max(half_x, half_xi)
    s_max_sq = rho_max ** 2 / (2.0 * hbar)
    m_eff = min(c.shape[0], int(math.e ** 2 * s_max_sq) + 64)
    coeffs = np.ascontiguousarray(c[:m_eff])
    half_lgam = 0.5 * gammaln(np.arange(m_eff, dtype=float) + 1.0)
    drho = rho_max / nrho
    theta = 2.0 * math.pi * np.arange(ntheta) / ntheta
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    mass = 0.0
    for i in range(nrho):
        rho = (i + 0.5) * drho
        inside = (np.abs(rho * cos_t) <= half_x) & (np.abs(rho * sin_t) <= half_xi)
        if not np.any(inside):
            continue
        s = rho / math.sqrt(2.0 * hbar)
        G = bargmann_fold(coeffs, math.log(s), 0.5 * s * s, half_lgam, ntheta)
        f = np.fft.fft(G)
        mass += rho * drho * float(np.sum(np.abs(f[inside]) ** 2))
    mass *= (2.0 * math.pi / ntheta) / (2.0 * math.pi * hbar)
    return mass


def localization_mass(state, epsilon_prime, *, t=0.0, nrho=512, ntheta=4096):
    """Mass outside the hbar^{eps'/3} microlocalization box of a normalized state.

    The box is the footprint of the rescaled cutoff Theta(x/a, xi/a) with
    Theta identically one on [-1,1]^2 and supported in [-2,2]^2, so the
    integration square has halfwidth twice the reported box_halfwidth.
    """
    nrm = state.norm()
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    hbar = state.hbar
    b = hbar ** (epsilon_prime / 3.0)
    inside = husimi_box_mass(state, 2.0 * b, nrho=nrho, ntheta=ntheta)
    return LocalizationReport(epsilon_prime, b, max(0.0, 1.0 - inside), t)
