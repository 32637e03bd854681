"""Quantum pendulum on the circle: an honest model operator whose separatrix
top (x, xi) = (0, 0) is a hyperbolic fixed point at energy 1 with unit
expansion rate, used as the discrete-spectrum testbed and as a quadrature
oracle for the number-basis side.

Grid states use the plain l2 convention (sum |psi_j|^2 = 1); the grid is
x_j = 2 pi j / n on [0, 2 pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import hermite_position
from .quasimode import ResolutionError


@dataclass
class GridOperator:
    """H = -(hbar^2/2) d^2/dx^2 + cos x, spectral kinetic term."""

    n_grid: int
    hbar: float
    x: np.ndarray
    potential: np.ndarray
    kinetic: np.ndarray                    # hbar^2 k^2 / 2 in FFT layout
    _eig: tuple = field(default=None, repr=False)

    def apply(self, psi):
        return np.fft.ifft(self.kinetic * np.fft.fft(psi)) + self.potential * psi

    def dense(self):
        """Dense real-symmetric matrix (circulant kinetic + diagonal)."""
        n = self.n_grid
        first = np.fft.ifft(self.kinetic).real   # row 0 of the circulant
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return first[idx] + np.diag(self.potential)

    def eig(self):
        """Full eigendecomposition, computed once and cached."""
        if self._eig is None:
            if self.n_grid > 8192:
                raise ResolutionError("dense diagonalization capped at n_grid 8192")
            w, v = np.linalg.eigh(self.dense())
            self._eig = (w, v)
        return self._eig


def build_pendulum(hbar, n_grid=None):
    """Pendulum Hamiltonian; n_grid defaults to the power of two >= 6/hbar."""
    need = 6.0 / hbar
    if n_grid is None:
        n_grid = 2 ** int(math.ceil(math.log2(need)))
    if n_grid < need:
        raise ResolutionError(
            f"n_grid {n_grid} under-resolves momenta; need >= {int(math.ceil(need))}")
    x = 2.0 * math.pi * np.arange(n_grid) / n_grid
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)   # integer wavenumbers
    return GridOperator(n_grid, hbar, x, np.cos(x), 0.5 * (hbar * k) ** 2)


def grid_gaussian(op, center=(0.0, 0.0), n_images=3):
    """Periodized normalized Gaussian coherent state at the given center."""
    x0, xi0 = center
    hbar = op.hbar
    psi = np.zeros(op.n_grid, dtype=np.complex128)
    for mimg in range(-(n_images // 2), n_images // 2 + 1):
        d = op.x - x0 + 2.0 * math.pi * mimg
        psi += np.exp(-d * d / (2.0 * hbar) + 1j * xi0 * d / hbar)
    return psi / np.linalg.norm(psi)


def grid_evolve(op, psi, t, *, rtol=1e-9, n_steps=None):
    """Split-step spectral propagation of exp(-i t H / hbar) psi.

    The Strang step count doubles until the state changes by less than rtol,
    unless n_steps pins it.
    """
    if t == 0.0:
        return psi.copy()

    def run(ns):
        dt = t / ns
        expv = np.exp(-0.5j * dt * op.potential / op.hbar)
        expk = np.exp(-1j * dt * op.kinetic / op.hbar)
        out = psi.astype(np.complex128)
        for _ in range(ns):
            out = expv * np.fft.ifft(expk * np.fft.fft(expv * out))
        return out

    if n_steps is not None:
        return run(n_steps)
    ns = max(64, int(8.0 * abs(t) / op.hbar ** 0.5))
    cur = run(ns)
    while True:
        ns *= 2
        nxt = run(ns)
        if np.linalg.norm(nxt - cur) < rtol or ns > 2 ** 20:
            return nxt
        cur = nxt


@dataclass
class SpectralData:
    """Eigenpairs inside an energy window plus per-eigenvalue masses of psi."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray          # columns
    window: tuple
    boundary_flag: bool = False

    def masses(self, psi):
        overlaps = self.eigenvectors.conj().T @ psi
        return np.abs(overlaps) ** 2

    def project(self, psi, lo, hi):
        """Component of psi in the eigenspaces with lo <= E <= hi."""
        sel = (self.eigenvalues >= lo) & (self.eigenvalues <= hi)
        overlaps = self.eigenvectors[:, sel].conj().T @ psi
        return self.eigenvectors[:, sel] @ overlaps


def eig_window(op, e0, halfwidth):
    """All eigenpairs with |E - e0| <= halfwidth (flags boundary ties)."""
    w, v = op.eig()
    lo, hi = e0 - halfwidth, e0 + halfwidth
    slack = 1e-12 * max(1.0, abs(w[0]), abs(w[-1]))
    if lo < w[0] - slack or hi > w[-1] + slack:
        raise ResolutionError("window extends beyond the resolved spectrum")
    sel = (w >= lo) & (w <= hi)
    spacing = np.median(np.diff(w)) if w.shape[0] > 1 else 0.0
    boundary = bool(np.any(np.abs(w - lo) < 1e-9 + 0.0 * spacing)
                    or np.any(np.abs(w - hi) < 1e-9))
    return SpectralData(w[sel].copy(), v[:, sel].copy(), (lo, hi), boundary)


def energy_moments(op, psi):
    """(<H>, <H^2>) for a normalized grid state."""
    hpsi = op.apply(psi)
    e1 = float(np.vdot(psi, hpsi).real)
    e2 = float(np.vdot(hpsi, hpsi).real)
    return e1, e2


def grid_weyl_matrix_element(alpha, m1, m2, hbar, *, nx=None, ns=None, nxi=None):
    """<phi_m1, Op_w((x xi)^alpha) phi_m2> by direct quadrature on the line.

    Uses the cross-Wigner distribution of the analytic Hermite functions:
        W(x, xi) = (2 pi hbar)^-1  int phi_m2(x + s/2) conj(phi_m1(x - s/2))
                   e^{-i s xi / hbar} ds
    and integrates (x xi)^alpha against it.  Independent of the number-basis
    construction (no ladder algebra enters).
    """
    if alpha > 3 or m1 > 10 or m2 > 10:
        raise ValueError("oracle supports alpha <= 3, m <= 10")
    scale = math.sqrt(hbar) * (math.sqrt(2.0 * (max(m1, m2) + alpha) + 1.0) + 7.0)
    nx = nx or 160
    ns = ns or 320
    nxi = nxi or 160
    x = np.linspace(-scale, scale, nx)
    s = np.linspace(-2.0 * scale, 2.0 * scale, ns)
    xi = np.linspace(-scale, scale, nxi)
    dxw = x[1] - x[0]
    dsw = s[1] - s[0]
    dxiw = xi[1] - xi[0]
    # f2[i, j] = phi_m2(x_i + s_j / 2), f1 likewise on the shifted grid
    Xp = x[:, None] + 0.5 * s[None, :]
    Xm = x[:, None] - 0.5 * s[None, :]
    f2 = hermite_position(m2, hbar, Xp.ravel()).reshape(nx, ns)
    f1 = hermite_position(m1, hbar, Xm.ravel()).reshape(nx, ns)
    phase = np.exp(-1j * np.outer(s, xi) / hbar)      # (ns, nxi)
    W = (f2 * f1) @ phase * (dsw / (2.0 * math.pi * hbar))
    integrand = (x[:, None] * xi[None, :]) ** alpha * W
    val = complex(np.sum(integrand) * dxw * dxiw)
    if not np.isfinite(val):
        raise ArithmeticError("quadrature failed to converge")
    return val


def husimi_box_mass_circle(psi, hbar, x_half, xi_half, center=(0.0, 0.0),
                           *, n_xi=None):
    """Husimi mass of a circle state in the box |x - x0| <= x_half,
    |xi - xi0| <= xi_half.

    For each xi0 on a quadrature grid the coherent overlaps over all x0 grid
    shifts come from one circular correlation (FFT); the result integrates
    |<g, psi>|^2 dx0 dxi0 / (2 pi hbar) over the box.
    """
    n = psi.shape[0]
    x = 2.0 * math.pi * np.arange(n) / n
    dx = x[1] - x[0]
    x0c, xi0c = center
    if n_xi is None:
        n_xi = max(33, 2 * int(8.0 * xi_half / math.sqrt(hbar)) + 1)
    xi0s = np.linspace(xi0c - xi_half, xi0c + xi_half, n_xi)
    dxi = xi0s[1] - xi0s[0]
    # wrap to signed distance from 0 for the template
    d = np.where(x > math.pi, x - 2.0 * math.pi, x)
    psi_hat = np.fft.fft(psi)
    xmask = np.minimum(np.abs(x - x0c), 2.0 * math.pi - np.abs(x - x0c)) <= x_half
    total = 0.0
    for xi0 in xi0s:
        g = np.zeros(n, dtype=np.complex128)
        for mimg in (-1, 0, 1):
            dd = d + 2.0 * math.pi * mimg
            g += np.exp(-dd * dd / (2.0 * hbar) + 1j * xi0 * dd / hbar)
        g /= np.linalg.norm(g)
        # overlaps(x0_j) = sum_i conj(g(x_i - x0_j)) psi(x_i): circular correlation
        overlaps = np.fft.ifft(psi_hat * np.conj(np.fft.fft(g)))
        w = 1.0 if 0 < n_xi - 1 else 1.0
        total += float(np.sum(np.abs(overlaps[xmask]) ** 2)) * dxi * (
            0.5 if xi0 in (xi0s[0], xi0s[-1]) else 1.0) * w
    return total * dx / (2.0 * math.pi * hbar)
