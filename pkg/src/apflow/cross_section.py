"""Pipe cross-sections, their Dirichlet-Laplacian eigenbases, and the flux carrier.

Three kinds of section are supported:

* ``rectangle`` -- analytic tensor-sine eigenbasis; fields are sampled on a
  midpoint grid, on which the sines are exactly orthonormal.
* ``disk`` -- radially symmetric Bessel modes ``J0(j_k r / R)``.  The
  constant function is radial, so non-radial modes have zero mean and are
  never excited by the basic flow; they are left out.  Fields live on a
  cell-centred radial grid that also carries a symmetric finite-volume
  Laplacian (the "fd" route of :mod:`apflow.modal`).
* ``grid`` -- a raster of interior nodes with the 5-point Laplacian and
  homogeneous Dirichlet values on every node outside the raster.

In every case ``section.weights`` is the quadrature rule for fields on
``section.points`` and, where present, ``section.stiffness`` is a symmetric
matrix ``K`` with ``-Laplacian ~ diag(weights)^-1 K``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from .bessel import j0, j0_zeros


@dataclass(frozen=True, eq=False)
class CrossSection:
    kind: str
    dims: tuple
    measure: float
    points: np.ndarray
    weights: np.ndarray
    normalized: bool = False
    stiffness: Optional[sp.csr_matrix] = None
    mask: Optional[np.ndarray] = None
    resolution: dict = field(default_factory=dict)

    @property
    def npoints(self) -> int:
        return self.weights.size

    @property
    def has_fd(self) -> bool:
        return self.stiffness is not None

    def integrate(self, values):
        return self.weights @ values

    def inner(self, u, v):
        return np.sum(self.weights * u * np.conj(v))

    def norm(self, u) -> float:
        return float(np.sqrt(np.real(self.inner(u, u))))

    def radii(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.hypot(pts[:, 0], pts[:, 1])

    def contains(self, points) -> np.ndarray:
        """Strict interior test for probe points of shape (P, 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "rectangle":
            a, b = self.dims
            return (pts[:, 0] > 0) & (pts[:, 0] < a) & (pts[:, 1] > 0) & (pts[:, 1] < b)
        if self.kind == "disk":
            return self.radii(pts) < self.dims[0]
        h = self.dims[0]
        ny, nx = self.mask.shape
        j = np.rint(pts[:, 0] / h).astype(int) - 1
        i = np.rint(pts[:, 1] / h).astype(int) - 1
        ok = (i >= 0) & (i < ny) & (j >= 0) & (j < nx)
        out = np.zeros(len(pts), dtype=bool)
        out[ok] = self.mask[i[ok], j[ok]]
        return out

    def interpolate(self, values, points) -> np.ndarray:
        """Interpolate a field given on ``self.points`` to probe points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "disk":
            R = self.dims[0]
            rr = np.concatenate((self.points, [R]))
            vv = np.concatenate((values, [0.0]))
            r = self.radii(pts)
            return np.interp(r, rr, vv.real) + 1j * np.interp(r, rr, vv.imag)
        if self.kind == "grid":
            h = self.dims[0]
            ny, nx = self.mask.shape
            full = np.zeros((ny + 2, nx + 2), dtype=complex)
            full[1:-1, 1:-1][self.mask] = values
            xs = h * np.arange(nx + 2)
            ys = h * np.arange(ny + 2)
            interp = RegularGridInterpolator((ys, xs), full)
            return interp(np.column_stack((pts[:, 1], pts[:, 0])))
        raise ValueError("rectangle fields are evaluated from the eigenbasis")


class EigenBasis:
    """Dirichlet eigenpairs ``(lambda_k, e_k)`` and ``beta_k = (1, e_k)``.

    Modes are L2-orthonormal for ``section.weights``.  Subclasses provide
    synthesis on the section's sample points and evaluation at probes.
    """

    def __init__(self, section: CrossSection, lambdas, betas, labels):
        order = np.argsort(lambdas, kind="stable")
        self.section = section
        self.lambdas = np.asarray(lambdas, dtype=float)[order]
        self.betas = np.asarray(betas, dtype=float)[order]
        self.labels = [labels[k] for k in order]
        self._order = order

    @property
    def m(self) -> int:
        return self.lambdas.size

    @property
    def beta_sq_sum(self) -> float:
        return float(np.sum(self.betas**2))

    def synthesize(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs) @ self.modes

    def evaluate(self, points) -> np.ndarray:
        """Mode values at probe points, shape (m, P)."""
        raise NotImplementedError

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "lambda", "beta"])
            for k, (lam, beta) in enumerate(zip(self.lambdas, self.betas), 1):
                w.writerow([k, repr(float(lam)), repr(float(beta))])


class TensorSineBasis(EigenBasis):
    def __init__(self, section, M: int):
        a, b = section.dims
        p, q = np.meshgrid(np.arange(1, M + 1), np.arange(1, M + 1), indexing="ij")
        p, q = p.ravel(), q.ravel()
        lambdas = np.pi**2 * (p**2 / a**2 + q**2 / b**2)
        odd = (p % 2 == 1) & (q % 2 == 1)
        betas = np.where(odd, 8.0 * math.sqrt(a * b) / (np.pi**2 * p * q), 0.0)
        super().__init__(section, lambdas, betas, list(zip(p.tolist(), q.tolist())))
        self.p = p[self._order]
        self.q = q[self._order]
        self.a, self.b = a, b
        nx, ny = section.resolution["samples"]
        xs = (np.arange(nx) + 0.5) * a / nx
        ys = (np.arange(ny) + 0.5) * b / ny
        self._sx = np.sin(np.outer(np.arange(1, M + 1), xs) * np.pi / a)
        self._sy = np.sin(np.outer(np.arange(1, M + 1), ys) * np.pi / b)
        self._cx = np.cos(np.outer(np.arange(1, M + 1), xs) * np.pi / a)
        self._cy = np.cos(np.outer(np.arange(1, M + 1), ys) * np.pi / b)
        self.M = M
        self._norm = 2.0 / math.sqrt(a * b)

    def _grid(self, coeffs, fx, fy):
        coeffs = np.asarray(coeffs)
        C = np.zeros((self.M, self.M), dtype=coeffs.dtype)
        C[self.p - 1, self.q - 1] = coeffs
        return (self._norm * fx.T @ C @ fy).ravel()

    def synthesize(self, coeffs):
        return self._grid(coeffs, self._sx, self._sy)

    def gradient(self, coeffs):
        """(d/dx, d/dy) of the synthesized field on the sample grid."""
        coeffs = np.asarray(coeffs)
        gx = self._grid(coeffs * self.p * np.pi / self.a, self._cx, self._sy)
        gy = self._grid(coeffs * self.q * np.pi / self.b, self._sx, self._cy)
        return gx, gy

    @property
    def modes(self):
        sx, sy = self._sx[self.p - 1], self._sy[self.q - 1]
        return self._norm * np.einsum("kx,ky->kxy", sx, sy).reshape(self.m, -1)

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        sx = np.sin(np.outer(self.p, pts[:, 0]) * np.pi / self.a)
        sy = np.sin(np.outer(self.q, pts[:, 1]) * np.pi / self.b)
        return self._norm * sx * sy


class RadialBesselBasis(EigenBasis):
    def __init__(self, section, radial_modes: int, gauss_points: Optional[int] = None):
        R = section.dims[0]
        zeros = j0_zeros(radial_modes)
        lambdas = (zeros / R) ** 2
        # Gauss-Legendre in r: exact-to-rounding norms and means of the modes
        ng = gauss_points or max(256, 4 * radial_modes + 64)
        x, w = np.polynomial.legendre.leggauss(ng)
        r = 0.5 * R * (x + 1.0)
        wr = 0.5 * R * w * 2.0 * np.pi * r
        raw = j0(np.outer(zeros / R, r))
        norms = np.sqrt(raw**2 @ wr)
        means = raw @ wr / norms
        signs = np.sign(means)
        betas = np.abs(means)
        super().__init__(section, lambdas, betas, list(range(1, radial_modes + 1)))
        self.R = R
        self.zeros = zeros
        self._scale = signs / norms
        self.modes = self._scale[:, None] * j0(np.outer(zeros / R, section.points))

    def evaluate(self, points):
        r = self.section.radii(points)
        return self._scale[:, None] * j0(np.outer(self.zeros / self.R, r))


class GridBasis(EigenBasis):
    def __init__(self, section, m: int):
        h = section.dims[0]
        K = section.stiffness
        n = K.shape[0]
        if m > n:
            raise ValueError(f"requested {m} modes but the mask has {n} interior nodes")
        if n <= 1500 or m >= n - 1:
            vals, vecs = np.linalg.eigh(K.toarray())
            vals, vecs = vals[:m], vecs[:, :m]
        else:
            try:
                vals, vecs = spla.eigsh(K.tocsc(), k=m, sigma=0.0, which="LM")
            except spla.ArpackNoConvergence as exc:
                raise RuntimeError("eigensolver did not converge") from exc
        lambdas = vals / h**2
        modes = (vecs / h).T  # sum h^2 e^2 = 1
        betas = modes @ section.weights
        signs = np.where(betas < 0, -1.0, 1.0)
        modes = modes * signs[:, None]
        betas = betas * signs
        super().__init__(section, lambdas, betas, list(range(1, m + 1)))
        self.modes = modes[self._order]

    def evaluate(self, points):
        return np.stack([self.section.interpolate(e, points).real for e in self.modes])


# ---------------------------------------------------------------------------
# builders


def build_rectangle(a: float, b: float, modes_per_axis: int, samples: int = 64,
                    normalized: bool = False):
    """Rectangle ``(0,a) x (0,b)`` with the analytic tensor-sine basis.

    ``samples`` midpoints per axis carry field quadrature; it must exceed
    ``modes_per_axis`` for the sampled modes to stay orthonormal.
    """
    if modes_per_axis < 1:
        raise ValueError("modes_per_axis must be >= 1")
    if normalized:
        s = 1.0 / math.sqrt(a * b)
        a, b = a * s, b * s
    samples = max(samples, modes_per_axis + 1)
    xs = (np.arange(samples) + 0.5) * a / samples
    ys = (np.arange(samples) + 0.5) * b / samples
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack((X.ravel(), Y.ravel()))
    w = np.full(pts.shape[0], a * b / samples**2)
    section = CrossSection("rectangle", (a, b), a * b, pts, w, normalized,
                           resolution={"samples": (samples, samples), "modes_per_axis": modes_per_axis})
    return section, TensorSineBasis(section, modes_per_axis)


def _radial_stiffness(R: float, N: int):
    h = R / N
    faces = 2.0 * np.pi * np.arange(1, N) * h / h  # 2 pi r_{i+1/2} / h
    main = np.zeros(N)
    main[:-1] += faces
    main[1:] += faces
    main[-1] += 2.0 * np.pi * R / (0.5 * h)  # wall at half a cell from the last node
    return sp.diags([main, -faces, -faces], [0, 1, -1], format="csr")


def build_disk(R: float = 1.0, radial_modes: int = 200, radial_points: int = 2048,
               normalized: bool = False):
    """Disk of radius ``R`` with radial Bessel modes on a cell-centred grid."""
    if radial_modes < 1:
        raise ValueError("radial_modes must be >= 1")
    if radial_points < 64:
        raise ValueError("radial_points must be >= 64")
    # j_{0,k} ~ k pi, so mode k has about k/2 oscillations on [0, R]
    if radial_points < 5 * radial_modes:
        raise ValueError(
            f"radial_points={radial_points} cannot resolve {radial_modes} modes "
            "(need >= 10 points per oscillation)"
        )
    if normalized:
        R = 1.0 / math.sqrt(math.pi)
    h = R / radial_points
    r = (np.arange(radial_points) + 0.5) * h
    w = 2.0 * np.pi * r * h
    section = CrossSection("disk", (R,), math.pi * R**2, r, w, normalized,
                           stiffness=_radial_stiffness(R, radial_points),
                           resolution={"radial_points": radial_points, "radial_modes": radial_modes})
    return section, RadialBesselBasis(section, radial_modes)


def _grid_stiffness(mask: np.ndarray):
    idx = -np.ones(mask.shape, dtype=int)
    idx[mask] = np.arange(int(mask.sum()))
    rows, cols = [], []
    ny, nx = mask.shape
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        src = np.argwhere(mask)
        dst = src + (di, dj)
        ok = (dst[:, 0] >= 0) & (dst[:, 0] < ny) & (dst[:, 1] >= 0) & (dst[:, 1] < nx)
        src, dst = src[ok], dst[ok]
        inside = mask[dst[:, 0], dst[:, 1]]
        rows.append(idx[src[inside, 0], src[inside, 1]])
        cols.append(idx[dst[inside, 0], dst[inside, 1]])
    n = int(mask.sum())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    return (4.0 * sp.identity(n, format="csr") - A).tocsr()


def build_grid(mask, h: float, m: int, normalized: bool = False):
    """Generic section from a raster of interior nodes (5-point stencil).

    Raster entry ``(i, j)`` is the node at ``((j+1) h, (i+1) h)``; the raster
    is implicitly surrounded by Dirichlet nodes.  ``measure`` is
    ``h^2 * (interior count)``.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or not mask.any():
        raise ValueError("mask must be a nonempty 2-D boolean raster")
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise ValueError(f"mask is not connected ({ncomp} components)")
    n = int(mask.sum())
    if normalized:
        h = 1.0 / math.sqrt(n)
    ii, jj = np.nonzero(mask)
    pts = np.column_stack(((jj + 1) * h, (ii + 1) * h))
    w = np.full(n, h * h)
    section = CrossSection("grid", (h,), h * h * n, pts, w, normalized,
                           stiffness=_grid_stiffness(mask), mask=mask,
                           resolution={"h": h, "interior": n})
    return section, GridBasis(section, m)


def square_mask(n: int) -> np.ndarray:
    """Interior nodes of the unit square at spacing ``1/n``."""
    return np.ones((n - 1, n - 1), dtype=bool)


def l_shape_mask(n: int) -> np.ndarray:
    """L-shaped raster: the unit square minus its upper-right quarter."""
    if n < 4 or n % 2:
        raise ValueError("l_shape_mask needs an even n >= 4")
    mask = square_mask(n)
    # nodes on x = 1/2 or y = 1/2 inside the removed quarter are boundary nodes
    half = n // 2
    mask[half - 1:, half - 1:] = False
    return mask


def read_mask(path) -> np.ndarray:
    """Read a text raster: '1' interior, '0' exterior, one row per line."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if set(line) - {"0", "1"}:
            raise ValueError(f"{path}:{lineno}: raster rows may contain only '0' and '1'")
        rows.append([c == "1" for c in line])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: raster rows must be nonempty and of equal length")
    return np.array(rows, dtype=bool)


def write_mask(mask, path) -> None:
    Path(path).write_text("\n".join("".join("1" if v else "0" for v in row) for row in mask) + "\n")


# ---------------------------------------------------------------------------
# flux carrier


@dataclass(frozen=True, eq=False)
class FluxCarrier:
    """``Phi`` solves ``-Lap Phi = 1``, ``phi = Phi / nu``.

    ``chi0_sq`` is the eigen-sum ``sum beta^2 / lambda``; the other
    ``chi0_sq_*`` entries are independent evaluations reported for
    cross-checking.
    """

    nu: float
    Phi: np.ndarray
    phi: np.ndarray
    coeffs: np.ndarray
    chi0_sq: float
    eta0_sq: float
    chi0_sq_volume: float
    chi0_sq_energy: float
    Phi_direct: Optional[np.ndarray] = None
    chi0_sq_direct: Optional[float] = None
    direct_difference: Optional[float] = None
    beta_defect: float = 0.0

    def summary(self) -> dict:
        return {
            "nu": self.nu,
            "chi0_sq": self.chi0_sq,
            "eta0_sq": self.eta0_sq,
            "chi0_sq_volume": self.chi0_sq_volume,
            "chi0_sq_energy": self.chi0_sq_energy,
            "chi0_sq_direct": self.chi0_sq_direct,
            "direct_difference": self.direct_difference,
            "beta_sq_defect": self.beta_defect,
        }


def flux_carrier(section: CrossSection, basis: EigenBasis, nu: float = 1.0) -> FluxCarrier:
    if basis.m == 0:
        raise ValueError("empty eigenbasis")
    if nu <= 0:
        raise ValueError("nu must be positive")
    coeffs = basis.betas / basis.lambdas
    Phi = basis.synthesize(coeffs)
    chi0_sq = float(np.sum(basis.betas**2 / basis.lambdas))
    eta0_sq = float(np.sum(coeffs**2))
    volume = float(section.integrate(Phi))
    Phi_direct = chi_direct = diff = None
    if isinstance(basis, TensorSineBasis):
        gx, gy = basis.gradient(coeffs)
        energy = float(section.integrate(gx**2 + gy**2))
    else:
        energy = float(Phi @ (section.stiffness @ Phi))
    if section.has_fd:
        Phi_direct = spla.spsolve(section.stiffness.tocsc(), section.weights)
        chi_direct = float(section.integrate(Phi_direct))
        diff = section.norm(Phi - Phi_direct) / section.norm(Phi_direct)
    return FluxCarrier(
        nu=nu, Phi=Phi, phi=Phi / nu, coeffs=coeffs, chi0_sq=chi0_sq, eta0_sq=eta0_sq,
        chi0_sq_volume=volume, chi0_sq_energy=energy, Phi_direct=Phi_direct,
        chi0_sq_direct=chi_direct, direct_difference=diff,
        beta_defect=section.measure - basis.beta_sq_sum,
    )
