"""Per-frequency modal problem ``i xi W - nu Lap W = 1``, ``W = 0`` on the wall.

Two discretizations are available:

``eigen``
    ``W = sum_k beta_k / (i xi + nu lambda_k) e_k``.  All norms are exact
    coefficient sums; the forcing actually resolved is the projection of
    the constant function, whose squared norm is ``sum beta_k^2``.
``fd``
    Direct solve of ``(i xi M + nu K) W = M 1`` with the section's
    symmetric stiffness ``K`` and mass ``M = diag(weights)``.  The discrete
    forcing has squared norm ``sum(weights)``.

Because both discrete Laplacians are self-adjoint, the three integral
identities for ``W`` hold to rounding once ``|D|`` is read as the squared
norm of the resolved forcing (``ModalResponse.measure``).
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bessel import j0_scaled
from .cross_section import CrossSection, EigenBasis


class PrecisionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ModalResponse:
    xi: float
    nu: float
    route: str
    W: np.ndarray
    coeffs: Optional[np.ndarray]
    a_xi: complex
    norm_sq: float
    grad_sq: float
    lap_sq: float
    lap_integral: complex
    measure: float
    residuals: tuple

    # norms of the nu = 1 profile W~_{xi/nu} = nu W_xi
    @property
    def n0(self) -> float:
        return self.nu**2 * self.norm_sq

    @property
    def n1(self) -> float:
        return self.nu**2 * self.grad_sq

    @property
    def n2(self) -> float:
        return self.nu**2 * self.lap_sq

    def row(self) -> dict:
        return {
            "xi": self.xi, "re_a": self.a_xi.real, "im_a": self.a_xi.imag,
            "n0": self.n0, "n1": self.n1, "n2": self.n2,
            "res1": self.residuals[0], "res2": self.residuals[1], "res3": self.residuals[2],
        }


def _identity_residuals(xi, nu, a, norm_sq, grad_sq, lap_sq, lap_int, measure):
    r1 = abs(a - (nu * grad_sq - 1j * xi * norm_sq))
    r2 = abs(nu * lap_int - (1j * xi * a - measure))
    r3 = abs(nu**2 * lap_sq + xi**2 * norm_sq - measure)
    return (r1 / measure, r2 / measure, r3 / measure)


def default_route(section: CrossSection, basis: Optional[EigenBasis] = None) -> str:
    """Radial finite volumes on disks, the eigenbasis elsewhere when one is given."""
    if section.kind == "disk" or basis is None:
        return "fd"
    return "eigen"


def solve_W(section: CrossSection, basis: Optional[EigenBasis], xi: float, nu: float,
            route: Optional[str] = None) -> ModalResponse:
    """Solve the modal problem at frequency ``xi`` and viscosity ``nu``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    xi = float(xi)
    route = route or default_route(section, basis)
    if route == "eigen":
        if basis is None:
            raise ValueError("the eigen route needs a basis")
        lam, beta = basis.lambdas, basis.betas
        c = beta / (1j * xi + nu * lam)
        mag = np.abs(c) ** 2
        a = complex(np.sum(beta * c))
        norm_sq = float(np.sum(mag))
        grad_sq = float(np.sum(lam * mag))
        lap_sq = float(np.sum(lam**2 * mag))
        lap_int = complex(-np.sum(lam * beta * c))
        measure = basis.beta_sq_sum
        W = basis.synthesize(c)
    elif route == "fd":
        if not section.has_fd:
            raise ValueError(f"no finite-difference operator for a {section.kind} section")
        w = section.weights
        K = section.stiffness
        A = (sp.diags(1j * xi * w) + nu * K).tocsc()
        try:
            W = spla.spsolve(A, w.astype(complex))
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"modal solve failed at xi={xi}") from exc
        if not np.all(np.isfinite(W)):
            raise np.linalg.LinAlgError(f"modal solve produced non-finite values at xi={xi}")
        c = None
        KW = K @ W
        lapW = -KW / w
        a = complex(w @ W)
        norm_sq = float(np.real(np.vdot(W, w * W)))
        grad_sq = float(np.real(np.vdot(W, KW)))
        lap_sq = float(np.real(np.vdot(lapW, w * lapW)))
        lap_int = complex(-np.sum(KW))
        measure = float(np.sum(w))
    else:
        raise ValueError(f"unknown route {route!r}")
    res = _identity_residuals(xi, nu, a, norm_sq, grad_sq, lap_sq, lap_int, measure)
    return ModalResponse(xi, nu, route, W, c, a, norm_sq, grad_sq, lap_sq, lap_int, measure, res)


def check_identities(resp: ModalResponse, measure: Optional[float] = None) -> tuple:
    """Residuals of the three identities, each divided by the measure.

    1. ``a = nu |grad W|^2 - i xi |W|^2``
    2. ``nu int Lap W = i xi a - |D|``
    3. ``nu^2 |Lap W|^2 + xi^2 |W|^2 = |D|``

    ``measure`` defaults to the resolved forcing norm of the response;
    pass ``section.measure`` to see the discretization defect instead.
    """
    m = resp.measure if measure is None else measure
    return _identity_residuals(resp.xi, resp.nu, resp.a_xi, resp.norm_sq, resp.grad_sq,
                               resp.lap_sq, resp.lap_integral, m)


def womersley_reference(R: float, xi: float, nu: float, r):
    """Oscillatory pipe-flow profile on the disk of radius ``R``.

    ``(1 - J0(alpha r) / J0(alpha R)) / (i xi)`` with ``alpha = sqrt(-i xi / nu)``.
    """
    if xi == 0:
        raise ValueError("xi must be nonzero (use the Poiseuille profile at xi = 0)")
    r = np.asarray(r, dtype=float)
    alpha = np.sqrt(complex(-1j * xi / nu))
    jr = j0_scaled(alpha * r)
    jR = j0_scaled(alpha * R)
    log_abs_jR = math.log(abs(jR)) + abs((alpha * R).imag) if jR != 0 else -math.inf
    if log_abs_jR < math.log(1e-280):
        warnings.warn(f"|J0(alpha R)| below 1e-280 at xi={xi}, nu={nu}", PrecisionWarning)
    ratio = jr / jR * np.exp(np.abs((alpha * r).imag) - abs((alpha * R).imag))
    return (1.0 - ratio) / (1j * xi)


def scaling_check(section, basis, xi: float, nu: float, route: Optional[str] = None) -> float:
    """Relative L2 gap between ``W_xi`` at ``nu`` and ``W~_{xi/nu} / nu``."""
    w1 = solve_W(section, basis, xi, nu, route).W
    w2 = solve_W(section, basis, xi / nu, 1.0, route).W / nu
    return section.norm(w1 - w2) / section.norm(w1)


def gain_sweep(section, basis, nu: float, frequencies, route: Optional[str] = None,
               workers: Optional[int] = None) -> list:
    """Independent ``solve_W`` calls over ``frequencies``, sorted by xi."""
    freqs = sorted(float(x) for x in frequencies)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda x: solve_W(section, basis, x, nu, route), freqs))
    return [solve_W(section, basis, x, nu, route) for x in freqs]


GAIN_COLUMNS = ["xi", "re_a", "im_a", "n0", "n1", "n2", "res1", "res2", "res3"]


def write_gain_csv(responses, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAIN_COLUMNS)
        for resp in responses:
            row = resp.row()
            w.writerow([repr(float(row[k])) for k in GAIN_COLUMNS])
