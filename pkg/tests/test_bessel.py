import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given
from hypothesis import strategies as st

from apflow.bessel import j0, j0_scaled, j0_zeros


def test_real_axis_matches_scipy():
    x = np.linspace(-60, 60, 4001)
    assert np.max(np.abs(j0(x) - sps.j0(x))) < 1e-12
    assert j0(np.array([1.0])).dtype == float


def test_known_values():
    assert j0(0.0) == 1.0
    assert abs(j0(2.404825557695773)) < 1e-15


@given(st.floats(0, 80), st.floats(-np.pi, np.pi))
def test_complex_argument_against_scipy(r, theta):
    z = r * np.exp(1j * theta)
    ref = sps.jv(0, z) * np.exp(-abs(z.imag))
    got = j0_scaled(z)
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-300) + 1e-14


def test_scaled_form_survives_huge_imaginary_parts():
    # J0 itself overflows here; the scaled value behaves like (2 pi |z|)^(-1/2)
    z = np.sqrt(-1j * 1e8) * 3.0
    val = j0_scaled(z)
    assert np.isfinite(val)
    assert abs(abs(val) - 1 / np.sqrt(2 * np.pi * abs(z))) / abs(val) < 1e-3


def test_even_symmetry():
    z = np.array([3 + 4j, 20 - 7j, 0.5 + 0.1j])
    assert np.allclose(j0_scaled(z), j0_scaled(-z), rtol=1e-14)


def test_zeros_match_scipy():
    z = j0_zeros(300)
    assert np.max(np.abs(z - sps.jn_zeros(0, 300))) < 1e-12
    assert np.all(np.diff(z) > 3.0)


def test_zero_count_zero():
    assert j0_zeros(0).size == 0
