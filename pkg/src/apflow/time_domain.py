"""Initial-value route for the basic flow: Galerkin march and Volterra pressure.

The Galerkin coefficients obey ``c_j' + nu lambda_j c_j = pi(t) beta_j``
together with the flux constraint ``sum_j beta_j c_j = f(t)``.  Differentiating
the constraint eliminates the pressure,

    pi = (f' + nu sum_j lambda_j beta_j c_j) / |beta|^2,

which leaves a linear ODE ``c' = A c + beta f' / |beta|^2`` with
``A = -nu Lambda + nu beta (Lambda beta)^T / |beta|^2``.  It is integrated by
the trapezoid rule; ``I - dt/2 A`` is diagonal plus rank one, so each step
costs O(m).  After every step ``c`` is projected back onto the constraint.

Eliminating ``c`` instead gives a second-kind Volterra equation for ``pi``
with the decaying kernel ``(nu/|beta|^2) sum_j lambda_j beta_j^2
exp(-nu lambda_j (t - s))``.  It is solved by product integration with
exact exponential weights, as an independent check of the march.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .apseries import APSeries, SampledSignal, classify_module


class StiffnessWarning(UserWarning):
    pass


def _coeff_norms(basis):
    beta = np.asarray(basis.betas, dtype=float)
    bb = float(beta @ beta)
    if bb == 0:
        raise ValueError("the basis does not resolve the constant function (all beta = 0)")
    return np.asarray(basis.lambdas, dtype=float), beta, bb


def initial_condition(section, basis, nu: float, f0: float) -> np.ndarray:
    """Galerkin projection of the steady profile carrying flux ``f0``.

    ``c_j = f0 phi_j / sum_k phi_k beta_k`` with ``phi_j = beta_j / (nu lambda_j)``;
    the factor ``nu`` cancels.
    """
    lam, beta, _ = _coeff_norms(basis)
    phi = beta / (nu * lam)
    s = float(phi @ beta)
    if s == 0:
        raise ValueError("sum phi_k beta_k vanishes; the basis cannot carry a flux")
    return f0 * phi / s


def m0_diagnostic(section, basis, nu: float) -> dict:
    """Smallest ``m`` with ``||P_m phi - phi||^2 < chi0^4 / (6 nu^2)``.

    ``phi = Phi / nu`` and the tail is measured against the full basis,
    so the answer is relative to the resolution at hand.
    """
    lam, beta, _ = _coeff_norms(basis)
    chi0_sq = float(np.sum(beta**2 / lam))
    sq = (beta / lam) ** 2 / nu**2
    tail = sq.sum() - np.cumsum(sq)
    threshold = chi0_sq**2 / (6.0 * nu**2)
    ok = np.nonzero(tail < threshold)[0]
    return {"m0": int(ok[0]) + 1 if ok.size else None, "threshold": threshold,
            "chi0_sq": chi0_sq, "m": int(lam.size)}


# ---------------------------------------------------------------------------
# flux inputs


def _flux_on_grid(f, t0: float, dt: float, n: int):
    """Values and derivatives of the flux at ``t0 + k dt``, ``k < n``."""
    t = t0 + dt * np.arange(n)
    if isinstance(f, APSeries):
        return t, f.evaluate(t), f.derivative().evaluate(t)
    if isinstance(f, SampledSignal):
        if f.derivative is None:
            raise ValueError("the sampled flux must carry its derivative")
        ratio = dt / f.dt
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
            raise ValueError("the time step must be a whole multiple of the sampling step")
        off = (t0 - f.t0) / f.dt
        k0 = int(round(off))
        if k0 < 0 or abs(off - k0) > 1e-9 * max(1.0, abs(off)):
            raise ValueError("the march start is not on the sampling grid")
        idx = k0 + stride * np.arange(n)
        if idx[-1] >= len(f):
            raise ValueError(f"the sampled flux ends at t={f.times[-1]}, before {t[-1]}")
        return t, f.values[idx], f.derivative[idx]
    if isinstance(f, tuple) and len(f) == 2 and all(callable(g) for g in f):
        g, dg = f
        return t, np.broadcast_to(np.asarray(g(t), float), t.shape).copy(), \
            np.broadcast_to(np.asarray(dg(t), float), t.shape).copy()
    raise TypeError("flux must be an APSeries, a SampledSignal or a (f, f') pair of callables")


# ---------------------------------------------------------------------------
# march


@dataclass(frozen=True, eq=False)
class TimeDomainSolution:
    t0: float
    dt: float
    T: float
    m: int
    nu: float
    t: np.ndarray
    pi: np.ndarray
    flux: np.ndarray
    f: np.ndarray
    flux_residual: np.ndarray
    correction: np.ndarray
    energy: np.ndarray
    grad_energy: np.ndarray
    lap_energy: np.ndarray
    wt_energy: np.ndarray
    c: np.ndarray
    c_times: np.ndarray
    c_final: np.ndarray
    probes: Optional[np.ndarray] = None
    ledgers: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        cols = ["t", "pi", "flux", "flux_residual", "energy", "grad_energy"]
        data = [self.t, self.pi, self.flux, self.flux_residual, self.energy, self.grad_energy]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in zip(*data):
                w.writerow([repr(float(v)) for v in row])


def _unit_window_sup(values: np.ndarray, dt: float) -> float:
    k = max(1, int(round(1.0 / dt)))
    if values.size <= k:
        return float(np.trapezoid(values, dx=dt))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * dt)])
    return float(np.max(cum[k:] - cum[:-k]))


def march(f, section, basis, nu: float, dt: float, T: float, c0=None, t0: float = 0.0,
          projection: bool = True, store_every: Optional[int] = None,
          probe_points=None) -> TimeDomainSolution:
    """Trapezoid march of the index-reduced Galerkin system on ``[t0, t0 + T]``.

    ``f`` is an :class:`APSeries`, a :class:`SampledSignal` with derivative, or a
    pair ``(f, f')`` of vectorized callables.  ``c0`` defaults to
    :func:`initial_condition` at ``f(t0)``; a supplied ``c0`` is checked for
    flux compatibility.  Full coefficient vectors are kept every
    ``store_every`` steps (default: about 2000 snapshots); scalar ledgers are
    kept at every step.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    if not dt > 0 or not T > 0:
        raise ValueError("dt and T must be positive")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * T:
        raise ValueError("T must be a whole number of time steps")
    lam, beta, bb = _coeff_norms(basis)
    m = lam.size
    t, fv, dfv = _flux_on_grid(f, t0, dt, n + 1)
    fscale = max(float(np.max(np.abs(fv))), 1e-300)
    if c0 is None:
        c = initial_condition(section, basis, nu, float(fv[0]))
    else:
        c = np.array(c0, dtype=float)
        if c.shape != (m,):
            raise ValueError(f"initial coefficients must have length {m}")
        gap = abs(float(beta @ c) - fv[0])
        if gap > 1e-10 * max(fscale, float(np.sum(np.abs(beta * c)))):
            raise ValueError(f"initial data carry flux {beta @ c}, expected f(t0) = {fv[0]}")

    # stiff modes under the trapezoid rule are damped by |1 - z| / (1 + z) per step
    z = 0.5 * dt * nu * lam.max()
    damp = abs(1.0 - z) / (1.0 + z)
    if n > 0 and damp**n > 1e-6:
        warnings.warn(
            f"stiffest mode (dt nu lambda_max = {2 * z:.3g}) is damped only by {damp**n:.2e} over the run",
            StiffnessWarning,
        )

    lb = lam * beta
    D = 1.0 + 0.5 * dt * nu * lam  # diagonal of I - dt/2 A
    u = 0.5 * dt * nu * beta / bb
    Dinv_u = u / D
    sm_den = 1.0 - float(lb @ Dinv_u)  # > 0 since sum beta^2 / |beta|^2 = 1

    if store_every is None:
        store_every = max(1, math.ceil(n / 2000))
    stored = [c.copy()]
    stored_t = [t[0]]
    E = None
    if probe_points is not None:
        E = np.asarray(basis.evaluate(np.atleast_2d(probe_points)))  # (m, P)
        probes = np.empty((n + 1, E.shape[1]))

    pi = np.empty(n + 1)
    flux = np.empty(n + 1)
    res = np.empty(n + 1)
    corr = np.zeros(n + 1)
    energy = np.empty(n + 1)
    grad = np.empty(n + 1)
    lap = np.empty(n + 1)
    wt = np.empty(n + 1)

    def record(k, c):
        p = (dfv[k] + nu * float(lb @ c)) / bb
        pi[k] = p
        fl = float(beta @ c)
        flux[k] = fl
        res[k] = abs(fl - fv[k])
        c2 = c * c
        energy[k] = c2.sum()
        grad[k] = lam @ c2
        lap[k] = (lam * lam) @ c2
        cdot = -nu * lam * c + beta * p
        wt[k] = cdot @ cdot
        if E is not None:
            probes[k] = c @ E

    if projection:
        dc = (fv[0] - float(beta @ c)) / bb
        c = c + dc * beta
        corr[0] = abs(dc) * math.sqrt(bb)
    record(0, c)
    steady = bool(np.all(dfv == 0))
    for k in range(n):
        # right-hand side (I + dt/2 A) c + dt/2 beta (f'_k + f'_{k+1}) / |beta|^2
        Ac = -nu * lam * c + (nu * float(lb @ c) / bb) * beta
        rhs = c + 0.5 * dt * Ac + (0.5 * dt * (dfv[k] + dfv[k + 1]) / bb) * beta
        y = rhs / D
        c = y + Dinv_u * (float(lb @ y) / sm_den)
        if projection:
            dc = (fv[k + 1] - float(beta @ c)) / bb
            c = c + dc * beta
            corr[k + 1] = abs(dc) * math.sqrt(bb)
        record(k + 1, c)
        if (k + 1) % store_every == 0 or k + 1 == n:
            stored.append(c.copy())
            stored_t.append(t[k + 1])
    if not np.all(np.isfinite(c)):
        raise FloatingPointError("non-finite coefficients in the march; reduce dt")
    if steady and n >= 8:
        late = energy[n // 4:]
        growth = np.max(np.diff(late)) if late.size > 1 else 0.0
        if growth > 1e-9 * max(float(np.max(late)), 1e-300):
            raise RuntimeError("energy grows under a steady flux; the step is unstable")

    sol = TimeDomainSolution(
        t0=t0, dt=dt, T=n * dt, m=m, nu=nu, t=t, pi=pi, flux=flux, f=fv, flux_residual=res,
        correction=corr, energy=energy, grad_energy=grad, lap_energy=lap, wt_energy=wt,
        c=np.array(stored), c_times=np.array(stored_t), c_final=c.copy(),
        probes=probes if E is not None else None,
    )
    sol.ledgers.update({
        "uloc_grad_w_sq": _unit_window_sup(grad, dt),
        "uloc_lap_w_sq": _unit_window_sup(lap, dt),
        "uloc_wt_sq": _unit_window_sup(wt, dt),
        "uloc_pi_sq": _unit_window_sup(pi * pi, dt),
        "sup_grad_w": float(np.sqrt(grad.max())),
        "max_flux_residual": float(res.max()),
        "max_projection_correction": float(corr.max()),
        "stiffness_dt_nu_lambda_max": 2 * z,
    })
    return sol


# ---------------------------------------------------------------------------
# Volterra route


def _exp_moments(x: np.ndarray):
    """``M_k = int_0^1 exp(-x u) (1 - u)^k du`` for k = 0, 1, 2."""
    x = np.asarray(x, dtype=float)
    M = np.empty((3,) + x.shape)
    small = x < 0.5
    xs = x[small]
    acc = np.zeros((3,) + xs.shape)
    term = np.ones_like(xs)  # (-x)^j / j!
    for j in range(24):
        acc[0] += term / (j + 1)
        acc[1] += term / ((j + 1) * (j + 2))
        acc[2] += 2.0 * term / ((j + 1) * (j + 2) * (j + 3))
        term = term * (-xs) / (j + 1)
    M[:, small] = acc
    xl = x[~small]
    e = np.exp(-xl)
    M[0, ~small] = (1.0 - e) / xl
    M[1, ~small] = (xl - 1.0 + e) / xl**2
    M[2, ~small] = (xl * xl - 2.0 * xl + 2.0 - 2.0 * e) / xl**3
    return M


def _exp_weights(x: np.ndarray, h: float):
    """Weights of ``int_0^h e^{-mu (h - s)} p(s) ds`` for linear ``p``; ``x = mu h``.

    Returns ``(w0, w1)`` multiplying ``p(0)`` and ``p(h)``.
    """
    M0, M1, _ = _exp_moments(x)
    return h * (M0 - M1), h * M1


def _exp_weights_quadratic(x: np.ndarray, h: float):
    """Same integral with ``p`` quadratic through ``-h, 0, h``: weights of
    ``p(-h), p(0), p(h)``."""
    M0, M1, M2 = _exp_moments(x)
    return 0.5 * h * (M2 - M1), h * (M0 - M2), 0.5 * h * (M2 + M1)


def volterra_pressure(f, section, basis, nu: float, T: float, dt: Optional[float] = None,
                      c0=None, t0: float = 0.0, order: int = 2) -> tuple:
    """Solve the Volterra equation for ``pi`` on ``t0 + k dt``; returns ``(t, pi)``.

    ``pi(t) = g(t) + int_0^t K(t - s) pi(s) ds`` with

        K(r) = (nu/|beta|^2) sum_j lambda_j beta_j^2 exp(-nu lambda_j r)
        g(t) = f'(t)/|beta|^2 + (nu/|beta|^2) sum_j lambda_j beta_j c_j(0) exp(-nu lambda_j t).

    Each exponential mode of the kernel is integrated exactly against an
    interpolant of ``pi``, so the memory term is carried by m running sums
    instead of a growing history.  ``order=1`` interpolates linearly
    (trapezoidal product integration); ``order=2`` uses the quadratic through
    the last three points, with one linear step to start.  The kernel has
    total mass close to one, which amplifies interpolation errors at low
    frequencies; the quadratic rule keeps that amplified error small.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if dt is None:
        if not isinstance(f, SampledSignal):
            raise ValueError("dt is required unless the flux is a SampledSignal")
        dt = f.dt
    n = int(round(T / dt))
    lam, beta, bb = _coeff_norms(basis)
    t, fv, dfv = _flux_on_grid(f, t0, dt, n + 1)
    if c0 is None:
        c0 = initial_condition(section, basis, nu, float(fv[0]))
    c0 = np.asarray(c0, dtype=float)
    mu = nu * lam
    kappa = nu * lam * beta**2 / bb
    if lam.size < 4:
        warnings.warn("kernel sum truncated to very few modes", StiffnessWarning)
    E = np.exp(-mu * dt)
    l0, l1 = _exp_weights(mu * dt, dt)
    q_m, q_0, q_1 = _exp_weights_quadratic(mu * dt, dt)
    den_lin = 1.0 - float(kappa @ l1)
    den_quad = 1.0 - float(kappa @ q_1)
    decay = np.ones_like(mu)  # exp(-mu (t_k - t0))
    init = nu * lam * beta * c0 / bb
    S = np.zeros_like(mu)
    pi = np.empty(n + 1)
    pi[0] = dfv[0] / bb + float(init.sum())
    for k in range(n):
        decay = decay * E
        g = dfv[k + 1] / bb + float(init @ decay)
        if order == 1 or k == 0:
            partial = E * S + l0 * pi[k]
            pi[k + 1] = (g + float(kappa @ partial)) / den_lin
            S = partial + l1 * pi[k + 1]
        else:
            partial = E * S + q_m * pi[k - 1] + q_0 * pi[k]
            pi[k + 1] = (g + float(kappa @ partial)) / den_quad
            S = partial + q_1 * pi[k + 1]
    return t, pi


# ---------------------------------------------------------------------------
# ledgers and diagnostics


def uloc_report(sol: TimeDomainSolution, f=None) -> dict:
    """Uniform-local energy bound against the H1_uloc size of the flux.

    Left side: ``sup_t [nu ||grad w(t)||^2 + int_t^{t+1} (nu^2 ||Lap w||^2 +
    ||w_t||^2 + |pi|^2)]`` over grid-aligned windows.  Right side:
    ``(nu^2 + 1 + 1/nu) ||f||^2_{H1_uloc}``.
    """
    dt, nu = sol.dt, sol.nu
    if sol.T < 2.0 - 1e-12:
        raise ValueError("uloc_report needs a run of length at least 2")
    k = max(1, int(round(1.0 / dt)))
    dense = nu**2 * sol.lap_energy + sol.wt_energy + sol.pi**2
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dense[1:] + dense[:-1]) * dt)])
    windows = cum[k:] - cum[:-k]
    lhs_t = nu * sol.grad_energy[: windows.size] + windows
    lhs = float(np.max(lhs_t))
    if f is None:
        fvals, fder = sol.f, np.gradient(sol.f, dt)
    else:
        _, fvals, fder = _flux_on_grid(f, sol.t0, dt, sol.t.size)
    fw = np.concatenate([[0.0], np.cumsum(0.5 * ((fvals**2 + fder**2)[1:] + (fvals**2 + fder**2)[:-1]) * dt)])
    f_uloc_sq = float(np.max(fw[k:] - fw[:-k]))
    rhs = (nu**2 + 1.0 + 1.0 / nu) * f_uloc_sq
    return {
        "lhs": lhs,
        "f_h1_uloc_sq": f_uloc_sq,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else 0.0,
        "window": 1.0,
        "argmax_t": float(sol.t[int(np.argmax(lhs_t))]),
    }


def decay_test(section, basis, nu: float, f, w0_a, w0_b, T: float, dt: float = 1e-3,
               skip: float = 0.1, workers: int = 2) -> dict:
    """Fitted energy decay rate of the difference of two marches.

    ``w0_a`` and ``w0_b`` are Galerkin coefficient vectors.  The difference
    has zero flux, so its energy should decay at least like
    ``exp(-2 nu lambda_1 t)``.  The fit is a least-squares line through
    ``log ||d(t)||^2`` after dropping the first ``skip`` fraction of the run
    and any samples lost to rounding.
    """
    lam, _, _ = _coeff_norms(basis)
    a = np.asarray(w0_a, dtype=float)
    b = np.asarray(w0_b, dtype=float)
    bound = 2.0 * nu * lam[0]
    if np.array_equal(a, b):
        return {"rate": math.inf, "identical": True, "bound": bound, "passes": True}
    runs = [(a,), (b,)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        sols = list(pool.map(lambda c0: march(f, section, basis, nu, dt, T, c0=c0[0],
                                              store_every=1), runs))
    d = sols[0].c - sols[1].c
    t = sols[0].c_times
    e = np.einsum("ij,ij->i", d, d)
    keep = (t >= skip * T) & (e > 1e-250) & (e > 1e-28 * e[0])
    if keep.sum() < 3:
        raise ValueError("the difference decays below rounding before the fit window")
    slope, _ = np.polyfit(t[keep], np.log(e[keep]), 1)
    rate = -float(slope)
    return {"rate": rate, "identical": False, "bound": bound,
            "passes": bool(rate >= 0.95 * bound), "fit_points": int(keep.sum())}


def zero_flux_direction(basis) -> np.ndarray:
    """Unit coefficient vector ``(beta_2 e_1 - beta_1 e_2) / norm``."""
    beta = np.asarray(basis.betas, dtype=float)
    d = np.zeros_like(beta)
    d[0], d[1] = beta[1], -beta[0]
    return d / np.linalg.norm(d)


def _period(f: APSeries) -> Optional[float]:
    pos = f.freqs[f.freqs > 0]
    if pos.size == 0:
        return None
    spec = classify_module(pos.tolist())
    if spec.classification != "lattice":
        return None
    return 2 * math.pi / spec.kappa


def compare_with_spectral(tsol: TimeDomainSolution, ssol, t_start: float,
                          probe_points=None) -> dict:
    """Post-transient mismatch between the march and the spectral solution.

    Relative L2 errors are taken over each full period after ``t_start``
    (the whole tail when the flux is not periodic) and the largest is
    reported.
    """
    from .basic_flow import sample_solution

    period = _period(ssol.f)
    mask = tsol.t >= t_start - 1e-12
    t = tsol.t[mask]
    ref = sample_solution(ssol, t, probe_points)
    k = len(t) if period is None else int(round(period / tsol.dt))
    windows = [(i, i + k + 1) for i in range(0, len(t) - k, k)] or [(0, len(t))]

    def worst(a, b):
        out = 0.0
        for i, j in windows:
            den = np.linalg.norm(b[i:j])
            out = max(out, np.linalg.norm(a[i:j] - b[i:j]) / den if den > 0 else 0.0)
        return out

    report = {"pi_rel_l2": worst(tsol.pi[mask], ref["pi"]), "periods": len(windows),
              "period": period}
    if probe_points is not None and tsol.probes is not None:
        report["w_probe_rel_l2"] = max(worst(tsol.probes[mask][:, j], ref["w"][:, j])
                                       for j in range(ref["w"].shape[1]))
    return report
