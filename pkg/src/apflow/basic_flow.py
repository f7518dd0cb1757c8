"""Frequency-domain basic flow: flux series in, pressure and velocity out.

For each frequency of the flux, ``pi_xi = f_xi / a_xi`` and
``w_xi = pi_xi W_xi``.  The solution is the canonical representative whose
spectrum is that of the flux; B^2-null perturbations are not represented.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .apseries import APSeries
from .cross_section import CrossSection, EigenBasis
from .modal import ModalResponse, default_route, solve_W


@dataclass(frozen=True, eq=False)
class BasicFlowSolution:
    f: APSeries
    nu: float
    section: CrossSection
    basis: Optional[EigenBasis]
    route: str
    pi: APSeries
    responses: dict  # xi -> ModalResponse (both signs)
    pi_hat: dict  # xi -> complex
    ledgers: dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        return self.f.freqs

    def w_hat(self, xi: float) -> np.ndarray:
        return self.pi_hat[xi] * self.responses[xi].W

    @property
    def w_modes(self) -> dict:
        return {xi: self.w_hat(xi) for xi in self.frequencies.tolist()}

    def flux_residuals(self) -> np.ndarray:
        """``|int w_xi - f_xi| / |f_xi|`` per mode."""
        out = []
        for xi, fx in zip(self.f.freqs.tolist(), self.f.coeffs):
            flux = self.pi_hat[xi] * self.responses[xi].a_xi
            out.append(abs(flux - fx) / abs(fx))
        return np.array(out)

    def mode_table(self) -> list:
        rows = []
        res = self.flux_residuals()
        for k, xi in enumerate(self.f.freqs.tolist()):
            r = self.responses[xi]
            p = abs(self.pi_hat[xi])
            rows.append({
                "xi": xi,
                "abs_pi": p,
                "norm_w": p * math.sqrt(r.norm_sq),
                "norm_lap_w": p * math.sqrt(r.lap_sq),
                "flux_residual": float(res[k]),
            })
        return rows

    def report(self) -> dict:
        return {
            "nu": self.nu,
            "route": self.route,
            "section": {"kind": self.section.kind, "dims": list(self.section.dims),
                        "measure": self.section.measure},
            "representative": "canonical: spectrum of w and pi contained in the spectrum of f",
            "pi_terms": [[x, c.real, c.imag] for x, c in zip(*self.pi.positive_half())],
            "ledgers": self.ledgers,
            "modes": self.mode_table(),
        }


def _pressure_ledgers(f: APSeries, responses: dict, pi_hat: dict) -> dict:
    xs = f.freqs.tolist()
    p = np.array([abs(pi_hat[x]) for x in xs])
    norm = np.array([math.sqrt(responses[x].norm_sq) for x in xs])
    grad = np.array([math.sqrt(responses[x].grad_sq) for x in xs])
    lap = np.array([math.sqrt(responses[x].lap_sq) for x in xs])
    xa = np.abs(f.freqs)
    return {
        "lap_w_B2": float(np.sqrt(np.sum((p * lap) ** 2))),
        "dt_w_B2": float(np.sqrt(np.sum((xa * p * norm) ** 2))),
        "pi_B2": float(np.sqrt(np.sum(p**2))),
        "sum_lap_w": float(np.sum(p * lap)),
        "sum_pi_plus_dt_w": float(np.sum(p + xa * p * norm)),
        "grad_w_sup_upper": float(np.sum(p * grad)),
    }


def solve_spectral(f: APSeries, section: CrossSection, basis: Optional[EigenBasis], nu: float,
                   route: Optional[str] = None, workers: Optional[int] = None,
                   sup_samples: int = 2048) -> BasicFlowSolution:
    """Solve the basic flow for a finite flux series.

    Only nonnegative frequencies are solved; negative ones are the complex
    conjugates, which keeps ``w`` and ``pi`` exactly real.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    route = route or default_route(section, basis)
    pos, _ = f.positive_half()
    pos = pos.tolist()

    def one(xi):
        return solve_W(section, basis, xi, nu, route)

    if workers and workers > 1 and len(pos) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(one, pos))
    else:
        solved = [one(xi) for xi in pos]
    responses: dict = {}
    for xi, r in zip(pos, solved):
        responses[xi] = r
        if xi != 0:
            responses[-xi] = _conjugate(r)
    pi_hat = {}
    for xi, fx in zip(f.freqs.tolist(), f.coeffs):
        pi_hat[xi] = complex(fx / responses[xi].a_xi)
    # exact conjugate symmetry for the pressure series
    for xi in pos:
        if xi != 0:
            pi_hat[-xi] = pi_hat[xi].conjugate()
    pi = APSeries(f.freqs, np.array([pi_hat[x] for x in f.freqs.tolist()], dtype=complex))
    ledgers = _pressure_ledgers(f, responses, pi_hat)
    sol = BasicFlowSolution(f, nu, section, basis, route, pi, responses, pi_hat, ledgers)
    ledgers["grad_w_sup_lower"] = grad_sup_sampled(sol, sup_samples)
    return sol


def _conjugate(r: ModalResponse) -> ModalResponse:
    return ModalResponse(
        -r.xi, r.nu, r.route, np.conj(r.W), None if r.coeffs is None else np.conj(r.coeffs),
        r.a_xi.conjugate(), r.norm_sq, r.grad_sq, r.lap_sq, r.lap_integral.conjugate(),
        r.measure, r.residuals,
    )


def _gradient_gram(sol: BasicFlowSolution, xs) -> np.ndarray:
    """``G[j, k] = <grad W_xj, grad W_xk>``."""
    resp = [sol.responses[x] for x in xs]
    if sol.route == "eigen":
        C = np.array([r.coeffs for r in resp])
        return (C * sol.basis.lambdas) @ C.conj().T
    F = np.array([r.W for r in resp])
    KF = (sol.section.stiffness @ F.T).T
    return F.conj() @ KF.T


def grad_sup_sampled(sol: BasicFlowSolution, n: int = 2048, t_max: Optional[float] = None) -> float:
    """Lower bound for ``sup_t ||grad w(t)||`` by sampling ``t`` densely."""
    xs = sol.f.freqs.tolist()
    if not xs:
        return 0.0
    nz = [abs(x) for x in xs if x != 0]
    if t_max is None:
        t_max = 4 * 2 * math.pi / min(nz) if nz else 1.0
    t = np.linspace(0.0, t_max, n)
    p = np.array([sol.pi_hat[x] for x in xs])
    G = _gradient_gram(sol, xs)
    E = np.exp(1j * np.outer(t, xs)) * p
    vals = np.real(np.einsum("tj,jk,tk->t", E.conj(), G.T, E))
    return float(np.sqrt(max(np.max(vals), 0.0)))


def sample_solution(sol: BasicFlowSolution, times, probe_points=None) -> dict:
    """Time samples of ``pi``, the flux ``int w``, ``f`` and ``w`` at probes."""
    t = np.asarray(times, dtype=float)
    xs = sol.f.freqs.tolist()
    probes = np.zeros((0, 2)) if probe_points is None else np.atleast_2d(np.asarray(probe_points, float))
    if probes.size and not np.all(sol.section.contains(probes)):
        bad = probes[~sol.section.contains(probes)]
        raise ValueError(f"probe points outside the section: {bad.tolist()}")
    E = np.exp(1j * np.outer(t, xs)) if xs else np.zeros((t.size, 0))
    p = np.array([sol.pi_hat[x] for x in xs], dtype=complex)
    a = np.array([sol.responses[x].a_xi for x in xs], dtype=complex)
    pi_c = E @ p
    flux_c = E @ (p * a)
    out = {"t": t, "pi": pi_c.real, "flux": flux_c.real, "f": sol.f.evaluate(t)}
    scale = max(float(np.sum(np.abs(p))), 1e-300)
    residue = max(np.max(np.abs(pi_c.imag), initial=0.0) / scale,
                  np.max(np.abs(flux_c.imag), initial=0.0) / max(float(np.sum(np.abs(sol.f.coeffs))), 1e-300))
    if probes.size:
        if sol.route == "eigen":
            Ev = sol.basis.evaluate(probes)  # (m, P)
            vals = np.array([sol.responses[x].coeffs @ Ev for x in xs])
        else:
            vals = np.array([sol.section.interpolate(sol.responses[x].W, probes) for x in xs])
        wc = E @ (p[:, None] * vals) if xs else np.zeros((t.size, probes.shape[0]))
        wscale = max(float(np.sum(np.abs(p[:, None] * vals))), 1e-300) if xs else 1.0
        residue = max(residue, np.max(np.abs(wc.imag), initial=0.0) / wscale)
        out["w"] = wc.real
    out["imag_residue"] = float(residue)
    return out


def write_samples_csv(samples: dict, path) -> None:
    cols = ["t", "pi", "flux"]
    nprobe = samples["w"].shape[1] if "w" in samples else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols + [f"w@probe{j + 1}" for j in range(nprobe)])
        for i in range(samples["t"].size):
            row = [samples[c][i] for c in cols]
            if nprobe:
                row += list(samples["w"][i])
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# a-priori bounds


def per_mode_ratios(resp: ModalResponse) -> tuple:
    """The three ratios ``||Lap W|| / |a| / max(1, |xi|/nu)``,
    ``|xi| ||W|| / |a| / max(|xi|, nu)`` and ``1/|a| / max(|xi|, nu)``."""
    xi, nu = abs(resp.xi), resp.nu
    a = abs(resp.a_xi)
    r1 = math.sqrt(resp.lap_sq) / a / max(1.0, xi / nu)
    r2 = xi * math.sqrt(resp.norm_sq) / a / max(xi, nu)
    r3 = 1.0 / a / max(xi, nu)
    return r1, r2, r3


DEFAULT_SWEEP_XI = tuple([0.0] + np.logspace(-2, 3, 41).tolist())
DEFAULT_SWEEP_NU = (0.1, 1.0, 10.0)


def bound_sweep(section, basis, nus=DEFAULT_SWEEP_NU, xis=DEFAULT_SWEEP_XI,
                route: Optional[str] = None, workers: Optional[int] = None) -> dict:
    """Maximum per-mode ratios over a frequency grid, for each viscosity."""
    per_nu = {}
    for nu in nus:
        def one(xi, nu=nu):
            return per_mode_ratios(solve_W(section, basis, xi, nu, route))
        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                ratios = np.array(list(pool.map(one, xis)))
        else:
            ratios = np.array([one(x) for x in xis])
        per_nu[float(nu)] = ratios.max(axis=0).tolist()
    table = np.array(list(per_nu.values()))
    fitted = table.max(axis=0)
    variation = (table.max(axis=0) - table.min(axis=0)) / table.max(axis=0)
    return {
        "per_nu_max": per_nu,
        "fitted_c": fitted.tolist(),
        "nu_variation": variation.tolist(),
        "xi_range": [float(min(xis)), float(max(xis))],
    }


def verify_bounds(sol: BasicFlowSolution, f: Optional[APSeries] = None, nu: Optional[float] = None,
                  sweep_nus=DEFAULT_SWEEP_NU, sweep_xis=DEFAULT_SWEEP_XI,
                  workers: Optional[int] = None) -> dict:
    """Ratios of the solution norms to the flux norms, plus a (xi, nu) sweep.

    The constants of the estimates are not known in closed form; the
    sweep maximum is reported as an empirical constant.
    """
    f = sol.f if f is None else f
    nu = sol.nu if nu is None else nu
    L = sol.ledgers
    f_b2 = f.besicovitch_norm(0)
    fp_b2 = f.derivative().besicovitch_norm(0)
    denom1 = f_b2 + fp_b2 / nu
    denom2 = nu * f_b2 + fp_b2
    ratio_lap = L["lap_w_B2"] / denom1 if denom1 > 0 else 0.0
    ratio_pi = (L["pi_B2"] + L["dt_w_B2"]) / denom2 if denom2 > 0 else 0.0
    modes = [per_mode_ratios(sol.responses[x]) for x in sol.f.freqs.tolist()]
    sweep = bound_sweep(sol.section, sol.basis, sweep_nus, sweep_xis, sol.route, workers)
    report = {
        "ratio_lap_w": ratio_lap,
        "ratio_pi_dt_w": ratio_pi,
        "solution_mode_ratios_max": np.max(modes, axis=0).tolist() if modes else [0.0, 0.0, 0.0],
        "sweep": sweep,
        "finite": bool(np.all(np.isfinite(sweep["fitted_c"])) and math.isfinite(ratio_lap)
                       and math.isfinite(ratio_pi)),
        "nu_stable": bool(max(sweep["nu_variation"]) < 0.2),
    }
    return report


def regL1_sums(sol: BasicFlowSolution) -> dict:
    """l1 sums of the solution modes against the l1 sizes of the flux."""
    L = sol.ledgers
    f = sol.f
    s0 = float(np.sum(np.abs(f.coeffs)))
    s1 = float(np.sum(np.abs(f.freqs) * np.abs(f.coeffs)))
    nu = sol.nu
    d1 = s0 + s1 / nu
    d2 = nu * s0 + s1
    return {
        "sum_lap_w": L["sum_lap_w"],
        "sum_pi_plus_dt_w": L["sum_pi_plus_dt_w"],
        "sum_abs_pi": float(sum(abs(v) for v in sol.pi_hat.values())),
        "flux_l1": s0,
        "flux_l1_weighted": s1,
        "ratio_lap_w": L["sum_lap_w"] / d1 if d1 > 0 else 0.0,
        "ratio_pi_dt_w": L["sum_pi_plus_dt_w"] / d2 if d2 > 0 else 0.0,
    }


def embedding_beta(spectrum, s: float, gamma_grid, levels: int = 4) -> dict:
    """Heuristic convergence probe for ``sum_{xi != 0} |xi|^-gamma``.

    Partial sums are taken over nested truncations of the (finite)
    spectrum, keeping the smallest |xi| first; each truncation doubles the
    previous one.  A sum is called converging when successive increments
    shrink by a factor below 0.9.  The smallest converging gamma serves as
    an estimate of the critical exponent.  This is a finite-sample
    diagnostic, not a proof.
    """
    spec = np.asarray(list(spectrum), dtype=float)
    zero_mode = bool(np.any(spec == 0))
    nz = spec[spec != 0]
    order = np.argsort(np.abs(nz), kind="stable")
    mags = np.abs(nz[order])
    n = mags.size
    sizes = sorted({max(1, n >> k) for k in range(levels)})
    rows = {}
    for g in gamma_grid:
        terms = mags ** (-float(g))
        cum = np.cumsum(terms) if n else np.zeros(0)
        partial = [float(cum[k - 1]) for k in sizes] if n else [0.0]
        incs = np.diff(partial)
        if n == 0 or incs.size < 2 or np.all(incs == 0):
            verdict = "converging"
        else:
            ratios = incs[1:] / np.where(incs[:-1] == 0, np.inf, incs[:-1])
            verdict = "converging" if np.all(ratios < 0.9) else "diverging"
        rows[float(g)] = {"partial_sums": partial, "verdict": verdict}
    conv = [g for g, r in rows.items() if r["verdict"] == "converging"]
    beta_est = min(conv) if conv else math.inf
    return {
        "heuristic": True,
        "zero_mode_present": zero_mode,
        "truncation_sizes": sizes,
        "gammas": rows,
        "beta_estimate": beta_est,
        "verdict": "beta < 2s plausible" if beta_est < 2 * s else "beta < 2s implausible",
    }


def write_report_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")
