"""Real almost-periodic signals given by finite generalized Fourier series.

An :class:`APSeries` stores pairs (frequency, coefficient) and represents

    f(t) = sum_xi f_xi exp(i xi t),

with ``f_{-xi} = conj(f_xi)`` so that ``f`` is real.  Sampled signals
(:class:`SampledSignal`) carry the discrete versions used for windowed norms,
long-time means and almost-period scans.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

DEDUP_RTOL = 1e-12


def _merge_close(values: np.ndarray, tol: float) -> np.ndarray:
    """Sort and collapse runs of values closer than ``tol``."""
    if values.size == 0:
        return values
    v = np.sort(values)
    keep = np.concatenate(([True], np.diff(v) > tol))
    return v[keep]


def _symmetric_set(values: np.ndarray, tol: float) -> np.ndarray:
    """Deduplicate and force exact symmetry about 0 (mirror the positive half)."""
    v = _merge_close(np.asarray(values, dtype=float), tol)
    pos = v[v > tol]
    has_zero = bool(np.any(np.abs(v) <= tol))
    parts = [-pos[::-1]]
    if has_zero:
        parts.append(np.zeros(1))
    parts.append(pos)
    return np.concatenate(parts)


def _scale_tol(*arrays) -> float:
    scale = max((np.max(np.abs(a)) for a in arrays if np.size(a)), default=0.0)
    return DEDUP_RTOL * max(scale, 1.0e-300)


def is_subset(a, b, tol: Optional[float] = None) -> bool:
    """True if every element of ``a`` lies within ``tol`` of some element of ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0:
        return True
    if b.size == 0:
        return False
    if tol is None:
        tol = _scale_tol(a, b)
    idx = np.clip(np.searchsorted(b, a), 1, b.size - 1)
    near = np.minimum(np.abs(a - b[idx - 1]), np.abs(a - b[idx]))
    if b.size == 1:
        near = np.abs(a - b[0])
    return bool(np.all(near <= tol))


@dataclass(frozen=True, eq=False)
class APSeries:
    """Finite real almost-periodic series.

    ``freqs`` is sorted ascending; ``coeffs[k]`` is the coefficient of
    ``exp(i freqs[k] t)``.  Use :meth:`from_terms` to build one from loose
    input (duplicates merged, missing conjugates completed, zeros dropped).
    """

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if freqs.shape != coeffs.shape or freqs.ndim != 1:
            raise ValueError("freqs and coeffs must be 1-D arrays of equal length")
        if freqs.size:
            if np.any(np.diff(freqs) <= 0):
                raise ValueError("frequencies must be distinct and sorted")
            if np.any(coeffs == 0):
                raise ValueError("zero coefficients are not stored")
            if not np.array_equal(freqs, -freqs[::-1]):
                raise ValueError("spectrum is not symmetric")
            if not np.array_equal(coeffs, np.conj(coeffs[::-1])):
                raise ValueError("coefficients are not conjugate symmetric")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(cls, terms: Iterable, complete: bool = True) -> "APSeries":
        """Build from ``(xi, coefficient)`` pairs or a ``{xi: coefficient}`` map.

        With ``complete=True`` a term whose conjugate partner is absent gets
        one; a present partner must agree to rounding.  Frequencies within
        1e-12 * max|xi| of each other are treated as the same mode.
        """
        if isinstance(terms, dict):
            terms = terms.items()
        pairs = [(float(x), complex(c)) for x, c in terms]
        if not pairs:
            return cls(np.zeros(0), np.zeros(0, dtype=complex))
        xs = np.array([p[0] for p in pairs])
        tol = _scale_tol(xs)
        merged: dict[float, complex] = {}
        keys: list[float] = []
        for x, c in pairs:
            hit = next((k for k in keys if abs(k - x) <= tol), None)
            if hit is None:
                keys.append(x)
                merged[x] = c
            else:
                merged[hit] += c
        if complete:
            for x in list(keys):
                partner = next((k for k in keys if abs(k + x) <= tol), None)
                if partner is None:
                    keys.append(-x)
                    merged[-x] = np.conj(merged[x])
                elif partner != x:
                    a, b = merged[x], merged[partner]
                    if abs(a - np.conj(b)) > 1e-12 * max(abs(a), abs(b), 1e-300):
                        raise ValueError(f"terms at +-{abs(x)} are not complex conjugates")
        # exact symmetry: keep the nonnegative half, mirror it
        half = sorted(k for k in keys if k > tol)
        zero = [k for k in keys if abs(k) <= tol]
        freqs, coeffs = [], []
        for k in half:
            c = merged[k]
            if c != 0:
                freqs.append(k)
                coeffs.append(c)
        pos_f = np.array(freqs, dtype=float)
        pos_c = np.array(coeffs, dtype=complex)
        out_f = [-pos_f[::-1]]
        out_c = [np.conj(pos_c[::-1])]
        if zero:
            c0 = sum(merged[k] for k in zero)
            if abs(c0.imag) > 1e-12 * max(abs(c0), 1e-300):
                raise ValueError("the zero-frequency coefficient must be real")
            if c0.real != 0:
                out_f.append(np.zeros(1))
                out_c.append(np.array([c0.real], dtype=complex))
        out_f.append(pos_f)
        out_c.append(pos_c)
        return cls(np.concatenate(out_f), np.concatenate(out_c))

    @classmethod
    def constant(cls, q: float) -> "APSeries":
        return cls.from_terms([(0.0, q)])

    @classmethod
    def cosine(cls, xi: float, amplitude: float = 1.0, phase: float = 0.0) -> "APSeries":
        """``amplitude * cos(xi t + phase)``."""
        c = 0.5 * amplitude * np.exp(1j * phase)
        return cls.from_terms([(xi, c)])

    # -- basic algebra -------------------------------------------------
    def __len__(self) -> int:
        return self.freqs.size

    @property
    def spectrum(self) -> np.ndarray:
        return self.freqs.copy()

    def as_dict(self) -> dict:
        return dict(zip(self.freqs.tolist(), self.coeffs.tolist()))

    def __add__(self, other: "APSeries") -> "APSeries":
        return APSeries.from_terms(
            list(zip(self.freqs, self.coeffs)) + list(zip(other.freqs, other.coeffs))
        )

    def __mul__(self, alpha: float) -> "APSeries":
        alpha = float(alpha)
        if alpha == 0:
            return APSeries(np.zeros(0), np.zeros(0, dtype=complex))
        return APSeries(self.freqs, self.coeffs * alpha)

    __rmul__ = __mul__

    def derivative(self) -> "APSeries":
        keep = self.freqs != 0
        return APSeries(self.freqs[keep], 1j * self.freqs[keep] * self.coeffs[keep])

    def positive_half(self):
        """Frequencies >= 0 with their coefficients (one per conjugate pair)."""
        keep = self.freqs >= 0
        return self.freqs[keep], self.coeffs[keep]

    # -- evaluation ----------------------------------------------------
    def evaluate(self, t, return_residue: bool = False):
        """Sum of the series at ``t`` (scalar or array); real part returned.

        The imaginary residue is checked against 1e-12 * sum|f_xi|.
        """
        t_arr = np.asarray(t, dtype=float)
        if self.freqs.size == 0:
            val = np.zeros_like(t_arr)
            return (val, np.zeros_like(t_arr)) if return_residue else val
        phase = np.exp(1j * np.multiply.outer(t_arr, self.freqs))
        total = phase @ self.coeffs
        residue = np.abs(total.imag)
        bound = 1e-12 * np.sum(np.abs(self.coeffs))
        if np.any(residue > bound):
            raise ArithmeticError(f"imaginary residue {residue.max():.3e} exceeds {bound:.3e}")
        if return_residue:
            return total.real, residue
        return total.real

    def __call__(self, t):
        return self.evaluate(t)

    def sample(self, t0: float, dt: float, n: int, derivative: bool = True) -> "SampledSignal":
        t = t0 + dt * np.arange(n)
        d = self.derivative().evaluate(t) if derivative else None
        return SampledSignal(t0, dt, self.evaluate(t), d)

    # -- norms ---------------------------------------------------------
    def besicovitch_norm(self, s: float = 0.0) -> float:
        """``(sum (1+xi^2)^s |f_xi|^2)^(1/2)``; s = 0 is the B^2 seminorm."""
        if s < 0:
            raise ValueError("s must be >= 0")
        w = (1.0 + self.freqs**2) ** s
        return float(np.sqrt(np.sum(w * np.abs(self.coeffs) ** 2)))

    def phi_star(self) -> float:
        """``sum (1+|xi|) |f_xi|``, the l1 size of the series and its derivative."""
        return float(np.sum((1.0 + np.abs(self.freqs)) * np.abs(self.coeffs)))

    # -- text format ---------------------------------------------------
    def to_text(self) -> str:
        lines = ["# frequency re im"]
        for x, c in zip(*self.positive_half()):
            lines.append(f"{float(x)!r} {float(c.real)!r} {float(c.imag)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "APSeries":
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected '<frequency> <re> <im>', got {raw!r}")
            try:
                x, re, im = (float(p) for p in parts)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            terms.append((x, complex(re, im)))
        return cls.from_terms(terms)

    @classmethod
    def load(cls, path) -> "APSeries":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def evaluate(f: APSeries, t):
    return f.evaluate(t)


def besicovitch_norm(f: APSeries, s: float = 0.0) -> float:
    return f.besicovitch_norm(s)


def phi_star(f: APSeries) -> float:
    return f.phi_star()


# ---------------------------------------------------------------------------
# sampled signals


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled real signal, optionally with its derivative."""

    t0: float
    dt: float
    values: np.ndarray
    derivative: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if self.derivative is not None:
            d = np.asarray(self.derivative, dtype=float)
            if d.shape != v.shape:
                raise ValueError("derivative must have the same length as values")
            object.__setattr__(self, "derivative", d)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def span(self) -> float:
        return self.dt * (self.values.size - 1)

    @classmethod
    def from_function(cls, g, t0: float, dt: float, n: int, dg=None) -> "SampledSignal":
        t = t0 + dt * np.arange(n)
        return cls(t0, dt, g(t), None if dg is None else dg(t))

    def _index(self, t: float) -> int:
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k >= self.values.size or abs(self.t0 + k * self.dt - t) > 0.5 * self.dt + 1e-12:
            raise ValueError(f"time {t} outside the sampled span")
        return k

    def _steps(self, length: float) -> int:
        return max(1, int(round(length / self.dt)))


def _symmetric_window(g: SampledSignal, R: float):
    if R <= 0:
        raise ValueError("window half-width must be positive")
    lo, hi = -R, R
    t_first, t_last = g.t0, g.t0 + g.span
    slack = 1e-9 * max(1.0, abs(R))
    if lo < t_first - slack or hi > t_last + slack:
        raise ValueError(f"window [-{R}, {R}] exceeds sampled span [{t_first}, {t_last}]")
    return g._index(max(lo, t_first)), g._index(min(hi, t_last))


def mean_operator(g: SampledSignal, windows) -> np.ndarray:
    """Window means ``(1/2R) int_{-R}^{R} g`` by the composite trapezoid rule."""
    out = []
    for R in windows:
        i0, i1 = _symmetric_window(g, R)
        out.append(trapezoid(g.values[i0 : i1 + 1], dx=g.dt) / (2.0 * R))
    return np.array(out)


def fourier_coefficient(g: SampledSignal, lam: float, R: float) -> complex:
    """``(1/2R) int_{-R}^{R} g(t) exp(-i lam t) dt``.

    The minus sign makes ``sum a_lam exp(i lam t)`` reproduce ``g``.
    """
    i0, i1 = _symmetric_window(g, R)
    t = g.times[i0 : i1 + 1]
    integrand = g.values[i0 : i1 + 1] * np.exp(-1j * lam * t)
    return complex(trapezoid(integrand, dx=g.dt) / (2.0 * R))


def _window_integrals(values: np.ndarray, dt: float, k: int) -> np.ndarray:
    cum = cumulative_trapezoid(values, dx=dt, initial=0.0)
    return cum[k:] - cum[:-k]


def stepanov_norm(g: SampledSignal, p: float, r: float) -> float:
    """Sliding-window Stepanov norm, windows starting on the sample grid."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if r <= 0 or g.span < r - 1e-12:
        raise ValueError(f"sampled span {g.span} shorter than window {r}")
    k = g._steps(r)
    ints = _window_integrals(np.abs(g.values) ** p, g.dt, k)
    return float((np.max(ints) / (k * g.dt)) ** (1.0 / p))


def h1_uloc_norm(g: SampledSignal) -> float:
    """``sup_t (int_t^{t+1} |g|^2 + |g'|^2)^(1/2)`` over grid-aligned unit windows."""
    if g.derivative is None:
        raise ValueError("h1_uloc_norm needs the derivative samples")
    if g.span < 1.0 - 1e-12:
        raise ValueError(f"sampled span {g.span} shorter than one")
    k = g._steps(1.0)
    ints = _window_integrals(g.values**2 + g.derivative**2, g.dt, k)
    return float(np.sqrt(max(np.max(ints), 0.0)))


@dataclass(frozen=True)
class AlmostPeriodScan:
    shifts: np.ndarray
    defects: np.ndarray
    max_gap: float

    def __iter__(self):
        return iter(zip(self.shifts.tolist(), self.defects.tolist()))


def almost_period_scan(g: SampledSignal, eps: float, search_span: float) -> AlmostPeriodScan:
    """Grid shifts T in (0, search_span] with sup |g(t+T) - g(t)| <= eps.

    Every shift is compared on the same window (the first ``span -
    search_span`` of the record).  ``max_gap`` is the largest distance
    between consecutive accepted shifts, counting from T = 0; it is
    ``inf`` when nothing is accepted.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if g.span < 2 * search_span - 1e-9:
        raise ValueError("sampled span must cover twice the search span")
    K = int(math.floor(search_span / g.dt + 1e-9))
    n = g.values.size
    base = g.values[: n - K]
    shifts, defects = [], []
    for k in range(1, K + 1):
        d = float(np.max(np.abs(g.values[k : k + n - K] - base)))
        if d <= eps:
            shifts.append(k * g.dt)
            defects.append(d)
    shifts_arr = np.array(shifts)
    if shifts_arr.size:
        gaps = np.diff(np.concatenate(([0.0], shifts_arr)))
        max_gap = float(np.max(gaps))
    else:
        max_gap = math.inf
    return AlmostPeriodScan(shifts_arr, np.array(defects), max_gap)


# ---------------------------------------------------------------------------
# Z-modules generated by spectra


@dataclass(frozen=True)
class ModuleSpec:
    """Classification of the Z-module generated by a finite set of reals."""

    generators: tuple
    classification: str  # "lattice" | "dense" | "undecided"
    kappa: Optional[float] = None
    denominator_cap: int = 0


def zmodule_truncation(generators, N: int) -> np.ndarray:
    """``{sum a_i g_i : a_i in Z, sum |a_i| <= N}`` as a sorted symmetric array."""
    g = np.asarray(list(generators), dtype=float)
    if g.size == 0 or np.any(g == 0):
        raise ValueError("generators must be nonempty and nonzero")
    if N < 0:
        raise ValueError("N must be nonnegative")
    values = []
    for a in itertools.product(range(-N, N + 1), repeat=g.size):
        if sum(abs(x) for x in a) <= N:
            values.append(float(np.dot(a, g)))
    return _symmetric_set(np.array(values), DEDUP_RTOL * np.max(np.abs(g)))


def spectrum_convolution(sigma1, sigma2) -> np.ndarray:
    """Sum set ``{eta + theta}``, deduplicated like :func:`zmodule_truncation`."""
    a = np.asarray(list(sigma1), dtype=float)
    b = np.asarray(list(sigma2), dtype=float)
    if a.size == 0 or b.size == 0:
        return np.zeros(0)
    sums = np.add.outer(a, b).ravel()
    tol = _scale_tol(a, b)
    if np.array_equal(np.sort(a), np.sort(-a)) and np.array_equal(np.sort(b), np.sort(-b)):
        return _symmetric_set(sums, tol)
    return _merge_close(sums, tol)


_RATIONAL_RTOL = 64 * np.finfo(float).eps


def _as_rational(x: float, cap: int) -> Optional[Fraction]:
    fr = Fraction(x).limit_denominator(cap)
    if abs(float(fr) - x) <= _RATIONAL_RTOL * abs(x):
        return fr
    return None


def classify_module(generators, tol: float = 1e-6) -> ModuleSpec:
    """Decide whether the generated Z-module is a lattice ``kappa Z`` or dense.

    Ratios to the first generator are tested for rationality by continued
    fractions with denominators up to ``1/tol``; a ratio is accepted only
    when the convergent matches to a few ulps.  All rational gives a
    lattice whose spacing is the gcd of the generators; a rational match
    that needs a denominator above ``sqrt(1/tol)`` is reported as
    "undecided" since floating noise can mimic it.
    """
    g = [abs(float(x)) for x in generators]
    if not g or any(x == 0 for x in g):
        raise ValueError("generators must be nonempty and nonzero")
    cap = int(round(1.0 / tol))
    base = g[0]
    ratios = []
    undecided = False
    for x in g:
        fr = _as_rational(x / base, cap)
        if fr is None:
            return ModuleSpec(tuple(generators), "dense", None, cap)
        if fr.denominator > math.isqrt(cap):
            undecided = True
        ratios.append(fr)
    if undecided:
        return ModuleSpec(tuple(generators), "undecided", None, cap)
    num = 0
    den = 1
    for fr in ratios:
        num = math.gcd(num, fr.numerator)
        den = den * fr.denominator // math.gcd(den, fr.denominator)
    return ModuleSpec(tuple(generators), "lattice", base * num / den, cap)
