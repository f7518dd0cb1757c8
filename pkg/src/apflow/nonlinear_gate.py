"""Scalar certificate for the nonlinear fixed point.

With ``a = c (1 + 1/nu)`` the admissible radii ``psi`` are those where

    q(psi) = psi^2 - (nu - 2 a phi) psi + c (1 + nu) phi + a^2 phi^2 <= 0,

and the fixed-point map contracts with constant
``K0 = (psi + a phi) / (nu - psi)``.  The certificate holds when a real
root pair exists, ``nu > psi + a phi``, ``K0 < 1`` and ``nu K0^2 < 1``,
with ``psi`` the smaller root.  ``c`` is an unquantified domain constant and
is always an explicit input.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .apseries import APSeries


def _a(nu: float, c: float) -> float:
    return c * (1.0 + 1.0 / nu)


def psi_quadratic(psi, nu: float, phi: float, c: float):
    a = _a(nu, c)
    return psi * psi - (nu - 2 * a * phi) * psi + c * (1 + nu) * phi + (a * phi) ** 2


def admissible_psi(nu: float, phi: float, c: float) -> tuple:
    """Real roots ``(psi_minus, psi_plus)`` of the quadratic, or ``()``.

    Roots are returned only when the discriminant is nonnegative and the
    linear coefficient ``nu - 2 a phi`` is positive, so both are >= 0.  The
    smaller root is computed as ``C / psi_plus`` to avoid cancellation.
    """
    if not nu > 0 or not c > 0 or phi < 0:
        raise ValueError("need nu > 0, c > 0, phi >= 0")
    a = _a(nu, c)
    B = nu - 2 * a * phi
    C = c * (1 + nu) * phi + (a * phi) ** 2
    disc = B * B - 4 * C
    if B <= 0 or disc < 0:
        return ()
    plus = 0.5 * (B + math.sqrt(disc))
    minus = C / plus
    return (minus, plus)


def contraction_constants(nu: float, psi: float, phi: float, c: float) -> tuple:
    """``(K0, nu K0^2)``."""
    if not nu > psi:
        raise ValueError(f"need nu > psi (nu={nu}, psi={psi})")
    K0 = (psi + _a(nu, c) * phi) / (nu - psi)
    return K0, nu * K0 * K0


def fixed_point_residual(nu: float, psi: float, phi: float, c: float) -> float:
    """``K0^2 (nu - psi)^2 - (nu psi - c (1+nu) phi)``, relative to ``nu psi``.

    Vanishes exactly when ``psi`` is a root of the quadratic, since
    ``K0 (nu - psi) = psi + a phi``.
    """
    K0, _ = contraction_constants(nu, psi, phi, c)
    lhs = (K0 * (nu - psi)) ** 2
    rhs = nu * psi - c * (1 + nu) * phi
    return abs(lhs - rhs) / max(abs(nu * psi), 1e-300)


@dataclass(frozen=True)
class GateReport:
    phi_star: float
    c: float
    nu: float
    psi_roots: tuple
    psi_star: Optional[float]
    K0: Optional[float]
    nuK0sq: Optional[float]
    margin: Optional[float]
    verdict: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["psi_roots"] = list(self.psi_roots)
        return d

    def to_json(self, path=None, extra: Optional[dict] = None) -> str:
        d = self.to_dict()
        if extra:
            d["input"] = extra
        text = json.dumps(d, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def evaluate_gate(nu: float, phi: float, c: float) -> GateReport:
    roots = admissible_psi(nu, phi, c)
    if not roots:
        return GateReport(phi, c, nu, (), None, None, None, None, False)
    psi = roots[0]
    margin = nu - (psi + _a(nu, c) * phi)
    if nu <= psi:
        return GateReport(phi, c, nu, roots, psi, None, None, margin, False)
    K0, nk = contraction_constants(nu, psi, phi, c)
    ok = margin > 0 and K0 < 1 and nk < 1
    return GateReport(phi, c, nu, roots, psi, K0, nk, margin, bool(ok))


def gate(f: APSeries, nu: float, c: float) -> GateReport:
    """Certificate for the flux ``f`` with ``phi_star = sum (1+|xi|)|f_xi|``."""
    return evaluate_gate(nu, f.phi_star(), c)


def nu0(phi: float, c: float, rtol: float = 1e-9) -> float:
    """Threshold viscosity: bisection on the verdict, returning the upper end.

    The verdict is false for small ``nu`` (the linear coefficient is
    negative) and true for large ``nu``; the bracket is grown geometrically
    from 1.  Returns 0 when ``phi = 0``.
    """
    if phi < 0 or not c > 0:
        raise ValueError("need phi >= 0 and c > 0")
    if phi == 0:
        return 0.0
    hi = 1.0
    while not evaluate_gate(hi, phi, c).verdict:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("no admissible viscosity found")
    lo = hi / 2.0
    while evaluate_gate(lo, phi, c).verdict:
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            return 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if evaluate_gate(mid, phi, c).verdict:
            hi = mid
        else:
            lo = mid
    return hi


def nu0_report(phi: float, c: float, factors=(1.0, 1.01, 2.0, 4.0)) -> dict:
    """``nu0`` with the verdict re-checked at the given multiples."""
    v = nu0(phi, c)
    checks = {repr(k): evaluate_gate(v * k, phi, c).verdict if v > 0 else True for k in factors}
    return {"phi_star": phi, "c": c, "nu0": v, "verified": checks,
            "all_verified": all(checks.values())}


def verdict_sweep(phi: float, c: float, nus) -> dict:
    """Verdicts over a viscosity grid and whether they ever switch back to false."""
    nus = sorted(float(v) for v in nus)
    verdicts = [evaluate_gate(v, phi, c).verdict for v in nus]
    seen = False
    violations = []
    for v, ok in zip(nus, verdicts):
        if seen and not ok:
            violations.append(v)
        seen = seen or ok
    return {"nu": nus, "verdict": verdicts, "monotone": not violations, "violations": violations}


def nu0_grid(phis, cs) -> np.ndarray:
    """``nu0`` on a (phi, c) grid, rows indexed by phi."""
    return np.array([[nu0(p, c) for c in cs] for p in phis])
