"""Bessel function J0 for complex arguments, and zeros of J0.

Power series for |z| <= 12, Hankel asymptotic expansion beyond.  The
``j0_scaled`` variant returns ``J0(z) * exp(-|Im z|)`` so that ratios of
J0 values with large imaginary arguments stay finite.
"""

import math

import numpy as np

SERIES_RADIUS = 12.0
_SERIES_TERMS = 80
_ASYMPTOTIC_TERMS = 60


def _series(z):
    # sum_k (-z^2/4)^k / (k!)^2, magnitude of partial sums bounded by I0(|z|)
    q = -0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * k)
        total = total + term
    return total


def _hankel_pq(z):
    """P and Q of the Hankel expansion, truncated at the smallest term."""
    p = np.ones_like(z)
    q = np.zeros_like(z)
    last = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    term = np.ones_like(z)
    for k in range(1, _ASYMPTOTIC_TERMS):
        # a_k / z^k built one factor at a time so large |z| cannot overflow
        term = term * (-(2 * k - 1) ** 2 / (8.0 * k)) / z
        mag = np.abs(term)
        active &= mag < last
        last = np.where(active, mag, last)
        sign = -1.0 if (k // 2) % 2 else 1.0
        contrib = np.where(active, sign * term, 0.0)
        if k % 2 == 0:
            p = p + contrib
        else:
            q = q + contrib
        if not active.any():
            break
    return p, q


def j0_scaled(z):
    """Return ``J0(z) * exp(-|Im z|)`` elementwise for complex or real ``z``."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    # J0 is even; fold into Re z >= 0 so the asymptotic branch is principal
    z = np.where(z.real < 0, -z, z)
    out = np.empty_like(z)
    small = np.abs(z) <= SERIES_RADIUS
    if small.any():
        zs = z[small]
        out[small] = _series(zs) * np.exp(-np.abs(zs.imag))
    if (~small).any():
        zl = z[~small]
        p, q = _hankel_pq(zl)
        chi = zl - 0.25 * np.pi
        damp = np.abs(zl.imag)
        cos_s = 0.5 * (np.exp(1j * chi - damp) + np.exp(-1j * chi - damp))
        sin_s = (np.exp(1j * chi - damp) - np.exp(-1j * chi - damp)) / 2j
        out[~small] = np.sqrt(2.0 / (np.pi * zl)) * (p * cos_s - q * sin_s)
    return out[0] if scalar else out


def j0(z):
    """Bessel function of the first kind of order zero."""
    z = np.asarray(z)
    val = j0_scaled(z) * np.exp(np.abs(np.asarray(z, dtype=complex).imag))
    if not np.iscomplexobj(z):
        return val.real
    return val


def j0_zeros(n, tol=1e-15):
    """First ``n`` positive zeros of J0, by bisection on the real J0.

    All zeros are bisected together; McMahon's estimate +-0.5 brackets
    each one since consecutive zeros are about pi apart.
    """
    k = np.arange(1, n + 1)
    guess = (k - 0.25) * math.pi + 1.0 / (8.0 * (k - 0.25) * math.pi)
    lo, hi = guess - 0.5, guess + 0.5
    flo = j0(lo)
    if np.any(flo * j0(hi) > 0):
        raise RuntimeError("failed to bracket the zeros of J0")
    while np.any(hi - lo > tol * hi):
        mid = 0.5 * (lo + hi)
        fm = j0(mid)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    return 0.5 * (lo + hi)
