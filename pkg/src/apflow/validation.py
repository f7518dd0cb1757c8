"""Acceptance criteria as callable checks.

Each ``criterion_N`` returns a :class:`CriterionResult` with the measured
values, the tolerance applied, a pass flag and the wall time.  Tolerance
profiles scale the solver-error ceilings: ``default`` uses them as stated,
``strict`` divides them by ten.  Structural thresholds (ratio windows,
asymptotic ceilings, exact combinatorics) are never rescaled.  Runtime
ceilings are reported but do not affect the pass flag, since they depend on
the machine.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .apseries import (
    APSeries,
    classify_module,
    fourier_coefficient,
    is_subset,
    spectrum_convolution,
    zmodule_truncation,
)
from .basic_flow import solve_spectral, verify_bounds
from .cross_section import build_disk, build_rectangle
from .modal import check_identities, scaling_check, solve_W, womersley_reference
from .nonlinear_gate import admissible_psi, evaluate_gate, gate, nu0, verdict_sweep
from .time_domain import (
    StiffnessWarning,
    compare_with_spectral,
    decay_test,
    initial_condition,
    march,
    uloc_report,
    volterra_pressure,
    zero_flux_direction,
)

PROFILES = {"default": 1.0, "strict": 0.1}

# Fitted constants from the first green run (unit square, 41 modes per axis).
# They are regression values, not bounds from theory.
LOCKED = {
    "per_mode_c": (28.191022055464742, 1.1740616234511208, 28.49032873838367),
    "uloc_ratio": 499.91787336421623,
}
LOCK_RTOL = 1e-6


@dataclass
class ValidateConfig:
    square_modes: int = 41
    disk_points: int = 2048
    disk_modes: int = 200
    dt: float = 1e-3
    T: float = 40.0
    transient: float = 20.0
    n_series: int = 100
    seed: int = 20240601
    profile: str = "default"


@dataclass
class CriterionResult:
    id: int
    name: str
    measured: dict
    tolerance: dict
    passed: bool
    runtime: float
    runtime_limit: float = math.inf
    notes: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.id:2d} {self.name} ({self.runtime:.2f} s)"

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "passed": self.passed,
            "measured": _plain(self.measured), "tolerance": _plain(self.tolerance),
            "runtime_s": round(self.runtime, 3), "runtime_limit_s": self.runtime_limit,
            "notes": self.notes,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _timed(fn: Callable) -> Callable:
    def wrapper(cfg: ValidateConfig = None) -> CriterionResult:
        cfg = cfg or ValidateConfig()
        start = time.perf_counter()
        res = fn(cfg, PROFILES[cfg.profile])
        res.runtime = time.perf_counter() - start
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- shared fixtures ------------------------------------------------------


@lru_cache(maxsize=4)
def unit_square(M: int):
    return build_rectangle(1.0, 1.0, M)


@lru_cache(maxsize=4)
def unit_area_disk(points: int, modes: int):
    return build_disk(radial_modes=modes, radial_points=points, normalized=True)


@lru_cache(maxsize=2)
def _cos_runs(M: int, dt: float, T: float):
    sec, basis = unit_square(M)
    f = APSeries.cosine(1.0)
    probes = [[0.5, 0.5], [0.25, 0.6]]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StiffnessWarning)
        tsol = march(f, sec, basis, 1.0, dt, T, probe_points=probes)
        tv, pv = volterra_pressure(f, sec, basis, 1.0, T, dt=dt)
    ssol = solve_spectral(f, sec, basis, 1.0)
    return f, tsol, (tv, pv), ssol, probes


# -- criteria -------------------------------------------------------------


@_timed
def criterion_1(cfg, scale):
    """Modal identities on the unit square and the unit-area disk."""
    tol = 1e-8 * scale
    xis = (0.0, 0.5, 1.0, 10.0, 100.0, 1000.0)
    nus = (0.1, 1.0, 10.0)
    sq, bq = unit_square(cfg.square_modes)
    dk, bk = unit_area_disk(cfg.disk_points, cfg.disk_modes)
    worst = {}
    for label, sec, basis, route in (("square_eigen", sq, bq, "eigen"),
                                     ("disk_radial_fd", dk, bk, "fd"),
                                     ("disk_bessel_eigen", dk, bk, "eigen")):
        worst[label] = max(max(check_identities(solve_W(sec, basis, x, n, route)))
                           for x in xis for n in nus)
    return CriterionResult(1, "modal identity suite", worst, {"max_residual": tol},
                           all(v < tol for v in worst.values()), 0.0, 30.0)


@_timed
def criterion_2(cfg, scale):
    """Womersley profile on the disk of radius one: error and convergence order."""
    tol = 1e-4 * scale
    errs = {}
    for N in (cfg.disk_points, 2 * cfg.disk_points):
        sec, _ = build_disk(1.0, radial_modes=16, radial_points=N)
        W = solve_W(sec, None, 10.0, 1.0, "fd").W
        ref = womersley_reference(1.0, 10.0, 1.0, sec.points)
        errs[N] = sec.norm(W - ref) / sec.norm(ref)
    e1, e2 = errs[cfg.disk_points], errs[2 * cfg.disk_points]
    ratio = e1 / e2
    return CriterionResult(2, "Womersley oracle", {"rel_l2_error": e1, "rel_l2_error_2N": e2, "ratio": ratio},
                           {"rel_l2_error": tol, "ratio": [3.4, 4.6]},
                           e1 < tol and 3.4 <= ratio <= 4.6, 0.0, 10.0)


@_timed
def criterion_3(cfg, scale):
    """High-frequency limits of the modal norms and gain.

    The 0.05 ceiling measures distance from an asymptotic regime, not solver
    error, so the tolerance profile does not rescale it.
    """
    tol = 0.05
    out = {}
    ok = True
    sq, bq = unit_square(cfg.square_modes)
    dk, bk = unit_area_disk(cfg.disk_points, cfg.disk_modes)
    for label, sec, basis, route in (("square_eigen", sq, bq, "eigen"), ("disk_fd", dk, bk, "fd")):
        D = sec.measure
        norm_dev, gain_dev = [], []
        for xi in (1e2, 1e3, 1e4):
            r = solve_W(sec, basis, xi, 1.0, route)
            norm_dev.append(abs(xi**2 * r.n0 / D - 1.0))
            gain_dev.append(abs(xi * r.a_xi + 1j * D) / D)
        decreasing = all(b < a for a, b in zip(norm_dev, norm_dev[1:]))
        out[label] = {"norm_deviation": norm_dev, "gain_deviation": gain_dev, "decreasing": decreasing}
        ok &= decreasing and norm_dev[-1] < tol and gain_dev[-1] < tol
    return CriterionResult(3, "high-frequency asymptotics", out, {"at_1e4": tol}, ok, 0.0, 10.0)


@_timed
def criterion_4(cfg, scale):
    """Viscosity scaling of the modal profile (eigen route)."""
    tol = 1e-10 * scale
    sq, bq = unit_square(cfg.square_modes)
    defects = {f"xi={x},nu={n}": scaling_check(sq, bq, x, n, "eigen") for x in (1.0, 10.0) for n in (0.1, 7.0)}
    worst = max(defects.values())
    return CriterionResult(4, "scaling law", {"max_defect": worst, "defects": defects},
                           {"max_defect": tol}, worst < tol, 0.0, 5.0)


@_timed
def criterion_5(cfg, scale):
    """Pressure from the march, the spectral solve and the Volterra equation."""
    tol_spec, tol_volt = 1e-4 * scale, 1e-6 * scale
    f, tsol, (tv, pv), ssol, probes = _cos_runs(cfg.square_modes, cfg.dt, cfg.T)
    cmp = compare_with_spectral(tsol, ssol, cfg.transient, probes)
    volt = float(np.linalg.norm(pv - tsol.pi) / np.linalg.norm(tsol.pi))
    measured = {"march_vs_spectral": cmp["pi_rel_l2"], "probe_w_vs_spectral": cmp.get("w_probe_rel_l2"),
                "volterra_vs_march": volt, "periods_compared": cmp["periods"]}
    return CriterionResult(5, "cross-route pressure", measured,
                           {"march_vs_spectral": tol_spec, "volterra_vs_march": tol_volt},
                           cmp["pi_rel_l2"] < tol_spec and volt < tol_volt, 0.0, 120.0)


@_timed
def criterion_6(cfg, scale):
    """Flux constraint along the criterion-5 march."""
    f, tsol, *_ = _cos_runs(cfg.square_modes, cfg.dt, cfg.T)
    bound = 1e-10 * scale * float(np.max(np.abs(tsol.f)))
    worst = float(tsol.flux_residual.max())
    return CriterionResult(6, "flux constraint", {"max_flux_residual": worst}, {"bound": bound},
                           worst < bound, 0.0)


@_timed
def criterion_7(cfg, scale):
    """Steady Poiseuille pressure on the unit-area disk, every route."""
    tol = 1e-6 * scale
    dk, bk = unit_area_disk(cfg.disk_points, cfg.disk_modes)
    out = {}
    for nu in (1.0, 0.25):
        exact = 8.0 * math.pi * nu  # nu / chi0^2 with chi0^2 = 1/(8 pi)
        f = APSeries.constant(1.0)
        vals = {
            "spectral_fd": solve_spectral(f, dk, bk, nu, "fd").pi.coeffs[0].real,
            "spectral_eigen": solve_spectral(f, dk, bk, nu, "eigen").pi.coeffs[0].real,
        }
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StiffnessWarning)
            vals["march"] = march(f, dk, bk, nu, 1e-2, 1.0).pi[-1]
            vals["volterra"] = volterra_pressure(f, dk, bk, nu, 1.0, dt=1e-2)[1][-1]
        out[f"nu={nu}"] = {k: abs(v / exact - 1.0) for k, v in vals.items()}
    worst = max(v for d in out.values() for v in d.values())
    return CriterionResult(7, "steady Poiseuille", {"max_rel_error": worst, "by_route": out},
                           {"max_rel_error": tol}, worst < tol, 0.0)


@_timed
def criterion_8(cfg, scale):
    """Fitted estimate constants: finite, stable in nu, equal to the locked values."""
    sq, bq = unit_square(cfg.square_modes)
    f = APSeries.cosine(1.0) + APSeries.constant(1.0)
    sol = solve_spectral(f, sq, bq, 1.0)
    vb = verify_bounds(sol)
    _, tsol, *_ = _cos_runs(cfg.square_modes, cfg.dt, cfg.T)
    ul = uloc_report(tsol, APSeries.cosine(1.0))
    fitted = vb["sweep"]["fitted_c"]
    variation = max(vb["sweep"]["nu_variation"])
    locked_ok = bool(np.allclose(fitted, LOCKED["per_mode_c"], rtol=LOCK_RTOL)
                     and math.isclose(ul["ratio"], LOCKED["uloc_ratio"], rel_tol=LOCK_RTOL))
    finite = vb["finite"] and math.isfinite(ul["ratio"])
    measured = {"per_mode_c": fitted, "nu_variation": variation, "uloc_ratio": ul["ratio"],
                "ratio_lap_w": vb["ratio_lap_w"], "ratio_pi_dt_w": vb["ratio_pi_dt_w"],
                "matches_lock": locked_ok}
    return CriterionResult(8, "estimate ledgers", measured,
                           {"nu_variation": 0.2, "lock_rtol": LOCK_RTOL},
                           finite and variation < 0.2 and locked_ok, 0.0)


@_timed
def criterion_9(cfg, scale):
    """Decay of a zero-flux perturbation on the unit square."""
    sq, bq = unit_square(cfg.square_modes)
    f = APSeries.cosine(1.0)
    c0 = initial_condition(sq, bq, 1.0, 1.0)
    d = 0.1 * zero_flux_direction(bq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StiffnessWarning)
        rates = {nu: decay_test(sq, bq, nu, f, c0, c0 + d, T=2.0 / nu, dt=cfg.dt)["rate"]
                 for nu in (1.0, 2.0)}
    bound = 2.0 * bq.lambdas[0] * 0.95
    ratio = rates[2.0] / rates[1.0]
    return CriterionResult(9, "zero-flux decay",
                           {"rate_nu1": rates[1.0], "rate_nu2": rates[2.0], "ratio": ratio,
                            "bound_nu1": bound},
                           {"rate_floor": "2 nu lambda_1 * 0.95", "ratio": [1.9, 2.1]},
                           rates[1.0] >= bound and 1.9 <= ratio <= 2.1, 0.0)


@_timed
def criterion_10(cfg, scale):
    """Gate arithmetic: degenerate roots, threshold re-verification, monotone verdict."""
    roots_ok = all(admissible_psi(nu, 0.0, c) == (0.0, nu) for nu in (0.1, 1.0, 3.7, 50.0) for c in (0.5, 1.0, 2.0))
    f = APSeries.cosine(1.0)
    v0 = nu0(f.phi_star(), 1.0)
    reverify = {k: evaluate_gate(v0 * k, f.phi_star(), 1.0).verdict for k in (1.01, 2.0, 4.0)}
    sweep = verdict_sweep(f.phi_star(), 1.0, np.logspace(-2, 4, 601))
    g50 = gate(f, 50.0, 1.0)
    measured = {"degenerate_roots_exact": roots_ok, "nu0": v0, "reverified": reverify,
                "monotone": sweep["monotone"], "verdict_nu50": g50.verdict}
    return CriterionResult(10, "gate arithmetic", measured, {"exact": True},
                           roots_ok and all(reverify.values()) and sweep["monotone"], 0.0)


@_timed
def criterion_11(cfg, scale):
    """Z-module enumeration, classification and sum-set closure."""
    r2 = math.sqrt(2.0)
    n25 = zmodule_truncation([1.0, r2], 3).size
    lat = classify_module([2.0 / 3.0, 0.5])
    dense = classify_module([1.0, r2])
    closure = all(
        is_subset(spectrum_convolution(zmodule_truncation([1.0, r2], N), zmodule_truncation([1.0, r2], M)),
                  zmodule_truncation([1.0, r2], N + M))
        for N in range(1, 4) for M in range(1, 4)
    )
    kappa_ok = lat.classification == "lattice" and math.isclose(lat.kappa, 1.0 / 6.0, rel_tol=1e-12)
    measured = {"mu3_size": n25, "lattice_kind": lat.classification, "kappa": lat.kappa,
                "sqrt2_kind": dense.classification, "closure": closure}
    return CriterionResult(11, "module combinatorics", measured,
                           {"mu3_size": 25, "kappa": 1.0 / 6.0},
                           n25 == 25 and kappa_ok and dense.classification == "dense" and closure, 0.0)


def random_series(rng: np.random.Generator, max_terms: int = 5, max_freq: int = 6) -> APSeries:
    """Random real series on integer frequencies (periodic with period 2 pi)."""
    k = int(rng.integers(1, max_terms + 1))
    freqs = rng.choice(np.arange(0, max_freq + 1), size=k, replace=False)
    terms = []
    for x in freqs:
        re, im = rng.normal(size=2)
        terms.append((float(x), complex(re, 0.0 if x == 0 else im)))
    return APSeries.from_terms(terms)


def apseries_invariants(f: APSeries, R: float = 4 * math.pi, dt: float = math.pi / 256) -> dict:
    """Reconstruction, Parseval, realness and norm monotonicity for one series."""
    n = int(round(2 * R / dt)) + 1
    g = f.sample(-R, dt, n, derivative=False)
    recovered = np.array([fourier_coefficient(g, x, R) for x in f.freqs])
    recon = float(np.max(np.abs(recovered - f.coeffs)) / max(np.max(np.abs(f.coeffs)), 1e-300))
    parseval = abs(float(np.sum(np.abs(recovered) ** 2)) / f.besicovitch_norm(0) ** 2 - 1.0)
    _, residue = f.evaluate(np.linspace(-10, 10, 101), return_residue=True)
    realness = float(np.max(residue) / np.sum(np.abs(f.coeffs)))
    conj = bool(np.array_equal(f.freqs, -f.freqs[::-1]) and np.array_equal(f.coeffs, np.conj(f.coeffs[::-1])))
    norms = [f.besicovitch_norm(s) for s in (0.0, 0.5, 1.0, 1.5, 2.0)]
    monotone = all(b >= a for a, b in zip(norms, norms[1:]))
    return {"reconstruction": recon, "parseval": parseval, "realness": realness,
            "conjugate_symmetric": conj, "monotone": monotone}


@_timed
def criterion_12(cfg, scale):
    """Series invariants on randomized finite series."""
    rng = np.random.default_rng(cfg.seed)
    rows = [apseries_invariants(random_series(rng)) for _ in range(cfg.n_series)]
    worst = {k: max(r[k] for r in rows) for k in ("reconstruction", "parseval", "realness")}
    flags = {k: all(r[k] for r in rows) for k in ("conjugate_symmetric", "monotone")}
    tol = {"reconstruction": 1e-6 * scale, "parseval": 1e-6 * scale, "realness": 1e-12}
    ok = all(worst[k] < tol[k] for k in tol) and all(flags.values())
    return CriterionResult(12, "series invariants", {**worst, **flags, "series": cfg.n_series}, tol, ok, 0.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def run_all(cfg: ValidateConfig = None, only=None) -> list:
    cfg = cfg or ValidateConfig()
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        out.append(fn(cfg))
    return out
