"""Spectral-interval projection of the localized quasimode and the weight
optimization, plus the named experiment pipelines behind the CLI.

The chain: a quasimode of width C hbar/|log hbar| centered at E0 keeps mass
1 - (C/c2)^2 inside I = [E0 +- c2 hbar/|log hbar|]; splitting I into K
subintervals and keeping the heaviest one yields a quasimode of width
(c2/K) hbar/|log hbar| with mass at least (1/K)(1 - (C/c2)^2).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import grid1d, qnf, quasimode
from .analytic import overlap_kernel
from .fock import dilation_overlap_curve, dilation_dim_for


@dataclass(frozen=True)
class IntervalPartition:
    """K disjoint subintervals of I = [E0 +- c2 hbar / |log hbar|]."""

    e0: float
    c2: float
    K: int
    hbar: float

    @property
    def halfwidth(self):
        return self.c2 * self.hbar / abs(math.log(self.hbar))

    @property
    def sub_halfwidth(self):
        return self.halfwidth / self.K

    def centers(self):
        k = np.arange(1, self.K + 1)
        return self.e0 + self.halfwidth * (-1.0 + (2.0 * k - 1.0) / self.K)

    def edges(self):
        return self.e0 - self.halfwidth + 2.0 * self.halfwidth * np.arange(self.K + 1) / self.K


@dataclass(frozen=True)
class ScarWeightResult:
    chosen_k: int
    projected_mass: float
    mass_bound: float
    scar_mass: float
    width_achieved: float
    epsilon: float
    c2: float = 0.0
    K: int = 0
    center: float = 0.0
    interval_mass: float = 0.0


def project_and_select(spectral, partition, psi, *, hbar, c_gamma=None,
                       epsilon=None, scar_box=0.3):
    """Pick the heaviest subinterval (ties: smallest index) and project psi.

    psi is a normalized grid state; spectral must cover I.  The projected
    state's width about the subinterval center is bounded by the subinterval
    halfwidth by the spectral theorem, so the result is an
    epsilon hbar/|log hbar| quasimode whenever c2/K <= epsilon.
    """
    lo, hi = spectral.window
    if lo > partition.e0 - partition.halfwidth or hi < partition.e0 + partition.halfwidth:
        raise ValueError("spectral window does not cover the interval I")
    masses = spectral.masses(psi)
    evals = spectral.eigenvalues
    edges = partition.edges()
    interval_masses = np.zeros(partition.K)
    for k in range(partition.K):
        sel = (evals >= edges[k]) & (evals < edges[k + 1])
        if k == partition.K - 1:
            sel |= evals == edges[-1]
        interval_masses[k] = float(np.sum(masses[sel]))
    total = float(np.sum(interval_masses))
    if total <= 0.0:
        raise ValueError(
            "no spectral mass in I: the input is not a valid quasimode of "
            "the assumed width (this cannot occur for one)")
    k_best = int(np.argmax(interval_masses))    # argmax takes the smallest tie
    centers = partition.centers()
    e_k = float(centers[k_best])
    proj = spectral.project(psi, edges[k_best],
                            edges[k_best + 1] if k_best < partition.K - 1
                            else edges[-1] + 1e-300)
    pm = float(np.vdot(proj, proj).real)
    tilde = proj / math.sqrt(pm)
    sel = (evals >= edges[k_best]) & (evals <= edges[k_best + 1])
    wa = math.sqrt(float(np.sum((evals[sel] - e_k) ** 2 * masses[sel])) / pm)
    scar = grid1d.husimi_box_mass_circle(tilde, hbar, scar_box, scar_box)
    bound = 0.0
    if c_gamma is not None:
        bound = (1.0 / partition.K) * (1.0 - (c_gamma / partition.c2) ** 2)
    return ScarWeightResult(
        chosen_k=k_best + 1, projected_mass=pm, mass_bound=bound,
        scar_mass=scar, width_achieved=wa,
        epsilon=epsilon if epsilon is not None else 0.0,
        c2=partition.c2, K=partition.K, center=e_k, interval_mass=total)


def optimize_weight(epsilon, c_gamma):
    """Maximize (1/K)(1 - (C/c2)^2) over c2 > C and K = floor(c2/eps) + 1.

    Within a fixed K the bound grows with c2, so the optimum sits just below
    a breakpoint c2 = K eps; enumerating breakpoints is the exact 1D search.
    As eps/C -> 0 the optimum approaches c2 = sqrt(3) C with
    bound * C / eps -> 2 / (3 sqrt 3).
    """
    if not 0 < epsilon < c_gamma:
        raise ValueError("need 0 < epsilon < c_gamma")
    best = (0.0, 0, -1.0)
    k_lo = int(math.floor(c_gamma / epsilon)) + 1
    k_hi = int(math.ceil(10.0 * c_gamma / epsilon)) + 1
    for K in range(k_lo, k_hi + 1):
        c2 = min(K * epsilon * (1.0 - 1e-12), 10.0 * c_gamma)
        if c2 <= c_gamma or c2 <= (K - 1) * epsilon:
            continue
        val = (1.0 / K) * (1.0 - (c_gamma / c2) ** 2)
        if val > best[2]:
            best = (c2, K, val)
    if best[1] == 0:
        raise ValueError("no admissible (c2, K); epsilon too close to c_gamma")
    return best


# ---------------------------------------------------------------------------
# experiment pipelines


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, columns, rows):
    """RFC-4180 CSV, '.' decimal, 17 significant digits, CRLF lines."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    Path(path).write_bytes(("\r\n".join(lines) + "\r\n").encode())


def _check(name, value, expected, tol):
    ok = bool(abs(value - expected) <= tol)
    return {"name": name, "value": float(value), "expected": float(expected),
            "tol": float(tol), "pass": ok}


def _check_le(name, value, bound):
    return {"name": name, "value": float(value), "expected": float(bound),
            "tol": 0.0, "pass": bool(value <= bound)}


def pipeline_overlap_table(params, sink):
    sink.start("overlap_table.csv",
               ["m1", "m2", "beta", "analytic", "numeric_re", "numeric_im",
                "abs_err", "pass"])
    betas = np.arange(params["beta_min"], params["beta_max"] + 1e-12,
                      params["beta_step"])
    pairs = [(0, 0), (0, 2), (2, 2), (2, 0)]
    internal = min(int(params.get("internal_cap", 32768)),
                   dilation_dim_for(max(abs(b) for b in betas)))
    worst = 0.0
    for m1, m2 in pairs:
        numeric = dilation_overlap_curve(m1, m2, betas, internal=internal)
        kern = overlap_kernel(m1, m2)
        exact = kern(betas)
        for b, nu, ex in zip(betas, numeric, exact):
            err = abs(nu - ex)
            worst = max(worst, err)
            sink.add({"m1": m1, "m2": m2, "beta": b, "analytic": ex,
                      "numeric_re": nu.real, "numeric_im": nu.imag,
                      "abs_err": err, "pass": err <= params["tol"]})
    return [_check_le("max_abs_err_all_pairs", worst, params["tol"])]


def pipeline_dyson_order(params, sink):
    sink.start("dyson_order.csv", ["l", "hbar", "t", "err_norm"])
    coeffs = qnf.make_coefficients(tuple(params["q"]))
    t = params.get("t", 1.0)
    checks = []
    for l in params["l_list"]:
        errs = []
        for hb in params["hbar_list"]:
            e = qnf.dyson_remainder_norm(coeffs, hb, t, l)
            errs.append(e)
            sink.add({"l": l, "hbar": hb, "t": t, "err_norm": e})
        slope = np.polyfit(np.log(params["hbar_list"]), np.log(errs), 1)[0]
        checks.append({"name": f"slope_l{l}", "value": float(slope),
                       "expected": float(l + 1), "tol": 0.1,
                       "pass": bool(slope >= l + 1 - 0.1)})
    return checks


def pipeline_width_scan(params, sink):
    sink.start("width_scan.csv",
               ["hbar", "T", "norm_sq", "predicted_norm_sq", "width",
                "width_normalized", "pass"])
    coeffs = qnf.make_coefficients(tuple(params.get("q", (params.get("lambda", 1.0),))))
    rows = quasimode.width_scan(
        coeffs, params["epsilon_prime"], list(params["hbar_list"]),
        method=params.get("method", "fock"), rows_sink=sink.add)
    target = math.pi * coeffs.lambda0 * (1.0 + 2.0 * params["epsilon_prime"])
    ratios = [r["width_normalized"] for r in rows]
    checks = [
        _check("width_normalized_final", ratios[-1], target, 0.2 * target),
        {"name": "monotone_approach", "value": float(np.min(np.diff(ratios))),
         "expected": 0.0, "tol": 0.0,
         "pass": bool(np.all(np.diff(ratios) > 0) and all(r < target for r in ratios))},
    ]
    for r in rows:
        checks.append(_check_le(f"norm_law_hbar_{r['hbar']:g}",
                                abs(r["norm_sq"] / r["predicted_norm_sq"] - 1.0),
                                3.0 / r["T"]))
    return checks


def pipeline_cdvp_scan(params, sink):
    sink.start("cdvp_scan.csv",
               ["hbar", "log_h", "norm_sq", "width", "width_normalized"])
    rows = []
    for hb in params["hbar_list"]:
        x, phi, n2, w = quasimode.cdvp_state(params.get("theta", 0.0), hb,
                                             params.get("cutoff_radius", 1.0))
        rows.append({"hbar": hb, "log_h": abs(math.log(hb)), "norm_sq": n2,
                     "width": w,
                     "width_normalized": w * math.sqrt(abs(math.log(hb))) / hb})
        sink.add(rows[-1])
    logs = np.array([r["log_h"] for r in rows])
    n2s = np.array([r["norm_sq"] for r in rows])
    slope = float(np.polyfit(logs, n2s, 1)[0]) if len(rows) >= 2 else float("nan")
    wn = [r["width_normalized"] for r in rows]
    return [
        _check("norm_sq_slope_vs_log", slope if np.isfinite(slope) else -1e9,
               2.0, 0.1),
        _check_le("width_normalized_growth", wn[-1] / wn[0], 1.3),
    ]


def pipeline_optimize_cutoff(params, sink):
    sink.start("optimize_cutoff.csv",
               ["epsilon_prime", "grid_size", "quotient", "cap", "pass"])
    checks = []
    for ep in params["epsilon_prime_list"]:
        chi = quasimode.optimize_cutoff(ep, params.get("grid_size", 4097))
        cap = (math.pi / 2.0) * (1.0 + ep)
        sink.add({"epsilon_prime": ep, "grid_size": chi.grid_size,
                  "quotient": chi.quotient(), "cap": cap,
                  "pass": chi.quotient() <= cap})
        checks.append(_check_le(f"quotient_eps_{ep:g}", chi.quotient(), cap))
    arch = quasimode.make_arch(params.get("grid_size", 4097))
    checks.append(_check("arch_quotient", arch.quotient(), math.pi / 2.0, 1e-6))
    return checks


def scar_weight_single(hbar, epsilon_prime, epsilon, *, n_grid=None,
                       scar_box=0.3, dt_max=0.05):
    """Full pendulum pipeline at one hbar: time-averaged quasimode, spectral
    projection onto the optimized subinterval, Husimi scar mass."""
    op = grid1d.build_pendulum(hbar, n_grid)
    lam = 1.0
    T = qnf.ehrenfest_time(epsilon_prime, lam, hbar)
    chi = quasimode.optimize_cutoff(epsilon_prime)
    psi0 = grid1d.grid_gaussian(op)
    e_h, _ = grid1d.energy_moments(op, psi0)
    logh = abs(math.log(hbar))
    c_gamma = math.pi * lam * (1.0 + 3.0 * epsilon_prime)
    c2, K, bound = optimize_weight(epsilon, c_gamma)
    # time average on the grid; both half-axes reuse the state between nodes
    dt = min(dt_max, 1.0)
    if chi.mollify_width > 0.0:
        dt = min(dt, T * chi.mollify_width / 3.0)
    nh = max(2, int(math.ceil(T / dt)))
    h = T / nh
    acc = h * float(chi(0.0)) * psi0.astype(np.complex128)
    for sgn in (1.0, -1.0):
        cur = psi0.copy()
        tprev = 0.0
        for i in range(1, nh + 1):
            tt = sgn * i * h
            cur = grid1d.grid_evolve(op, cur, tt - tprev)
            tprev = tt
            w = h if i < nh else h / 2.0
            cval = float(chi(tt / T))
            acc += (w * cval * np.exp(1j * tt * e_h / hbar)) * cur
    nrm = np.linalg.norm(acc)
    psi = acc / nrm
    e1, e2 = grid1d.energy_moments(op, psi)
    width_in = math.sqrt(max(e2 - 2.0 * e_h * e1 + e_h ** 2, 0.0))
    # microlocalization of the input quasimode, box = footprint of the
    # hbar^{eps'/3}-rescaled cutoff at eps' = 0.3 (same convention as qnf)
    box = 2.0 * hbar ** 0.1
    husimi03 = grid1d.husimi_box_mass_circle(psi, hbar, box, box)
    spectral = grid1d.eig_window(op, e_h, 3.0 * c2 * hbar / logh)
    part = IntervalPartition(e_h, c2, K, hbar)
    res = project_and_select(spectral, part, psi, hbar=hbar,
                             c_gamma=c_gamma, epsilon=epsilon,
                             scar_box=scar_box)
    return res, {"width_input": width_in, "E_center": e_h, "T": T,
                 "c_gamma": c_gamma, "norm_sq": nrm ** 2,
                 "husimi_box_eps03": husimi03}


def pipeline_scar_weight(params, sink):
    sink.start("scar_weight.csv",
               ["hbar", "c2", "K", "chosen_k", "projected_mass", "mass_bound",
                "scar_mass"])
    checks = []
    for hb in params["hbar_list"]:
        res, extra = scar_weight_single(
            hb, params["epsilon_prime"], params["epsilon"],
            n_grid=params.get("n_grid"))
        logh = abs(math.log(hb))
        sink.add({"hbar": hb, "c2": res.c2, "K": res.K,
                  "chosen_k": res.chosen_k,
                  "projected_mass": res.projected_mass,
                  "mass_bound": res.mass_bound,
                  "scar_mass": res.scar_mass})
        checks.append(_check_le(
            f"width_guarantee_hbar_{hb:g}",
            res.width_achieved, params["epsilon"] * hb / logh))
        checks.append({
            "name": f"projected_mass_hbar_{hb:g}",
            "value": res.projected_mass,
            "expected": res.mass_bound, "tol": 0.05,
            "pass": bool(res.projected_mass >= res.mass_bound - 0.05)})
        checks.append({
            "name": f"scar_mass_hbar_{hb:g}", "value": res.scar_mass,
            "expected": 0.5 * res.projected_mass, "tol": 0.0,
            "pass": bool(res.scar_mass >= 0.5 * res.projected_mass)})
    return ("scar_weight.csv",
            ["hbar", "c2", "K", "chosen_k", "projected_mass", "mass_bound",
             "scar_mass"], rows, checks)


PIPELINES = {
    "overlap-table": pipeline_overlap_table,
    "dyson-order": pipeline_dyson_order,
    "width-scan": pipeline_width_scan,
    "cdvp-scan": pipeline_cdvp_scan,
    "scar-weight": pipeline_scar_weight,
    "optimize-cutoff": pipeline_optimize_cutoff,
}


class RowSink:
    """Accumulates pipeline rows so partial results survive a failure."""

    def __init__(self):
        self.csv_name = None
        self.columns = None
        self.rows = []

    def start(self, csv_name, columns):
        self.csv_name = csv_name
        self.columns = columns

    def add(self, row):
        self.rows.append(row)


def run_experiment(pipeline, params, out_dir):
    """Run a named pipeline, write its CSV and manifest.json into out_dir.

    Returns the manifest dict; overall pass is the conjunction of the
    pipeline's checks (the CLI turns it into the exit code).  On failure the
    rows computed so far are still written and the manifest carries the
    error with a failed 'completed' check.
    """
    if pipeline not in PIPELINES:
        raise KeyError(f"unknown pipeline {pipeline!r}; "
                       f"choose from {sorted(PIPELINES)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sink = RowSink()
    try:
        checks = PIPELINES[pipeline](params, sink)
    except Exception as exc:   # partial results still get written
        failure = f"{type(exc).__name__}: {exc}"
        checks = [{"name": "completed", "value": 0.0, "expected": 1.0,
                   "tol": 0.0, "pass": False, "error": failure}]
    if sink.csv_name is not None:
        write_csv(out / sink.csv_name, sink.columns, sink.rows)
    manifest = {
        "pipeline": pipeline,
        "params": {k: (list(v) if isinstance(v, (list, tuple)) else v)
                   for k, v in params.items()},
        "checks": checks,
        "wall_time_s": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")
    return manifest
