import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from apflow.cross_section import (
    build_disk,
    build_grid,
    build_rectangle,
    flux_carrier,
    l_shape_mask,
    read_mask,
    square_mask,
    write_mask,
)


def odd_partial_sum(M, power=2):
    odd = np.arange(1, M + 1, 2, dtype=float)
    return np.sum(1.0 / odd**power)


# -- rectangle ---------------------------------------------------------------


def test_square_fundamental_mode(square):
    _, basis = square
    assert basis.labels[0] == (1, 1)
    assert basis.lambdas[0] == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert basis.betas[0] == pytest.approx(8 / math.pi**2, rel=1e-14)


def test_square_even_mode_has_no_mean(square):
    _, basis = square
    k = basis.labels.index((2, 1))
    assert basis.betas[k] == 0.0


def test_square_beta_sum_matches_closed_form(square):
    # sum over odd p, q <= 41 of 64 / (pi^4 p^2 q^2) factorises
    _, basis = square
    oracle = 64 / math.pi**4 * odd_partial_sum(41) ** 2
    assert basis.beta_sq_sum == pytest.approx(oracle, rel=1e-13)
    assert 0.98 < basis.beta_sq_sum < 1.0


def test_rectangle_eigenvalues_scale():
    _, b1 = build_rectangle(1.0, 2.0, 6)
    _, b2 = build_rectangle(3.0, 6.0, 6)
    np.testing.assert_allclose(b2.lambdas, b1.lambdas / 9, rtol=1e-13)
    np.testing.assert_allclose(b2.betas, 3 * b1.betas, rtol=1e-13)


def test_rectangle_modes_orthonormal(small_square):
    section, basis = small_square
    E = basis.modes
    G = (E * section.weights) @ E.T
    np.testing.assert_allclose(G, np.eye(basis.m), atol=1e-12)


def test_rectangle_normalized_has_unit_area():
    section, _ = build_rectangle(2.0, 0.5, 4, normalized=True)
    assert section.measure == pytest.approx(1.0, rel=1e-14)


def test_rectangle_rejects_zero_modes():
    with pytest.raises(ValueError):
        build_rectangle(1, 1, 0)


# -- disk --------------------------------------------------------------------


def test_disk_fundamental(unit_disk):
    _, basis = unit_disk
    assert basis.lambdas[0] == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=1e-12)
    assert basis.lambdas[0] == pytest.approx(5.7832, abs=1e-4)


def test_disk_eigenvalues_against_scipy_zeros(unit_disk):
    _, basis = unit_disk
    np.testing.assert_allclose(basis.lambdas[:50], jn_zeros(0, 50) ** 2, rtol=1e-12)


def test_disk_beta_sum_approaches_area(unit_disk):
    # beta_k^2 = 4 pi / j_k^2, so the tail after m modes is about 4/(pi m)
    _, basis = unit_disk
    defect = math.pi - basis.beta_sq_sum
    assert 0 < defect < 4 / (math.pi * basis.m) * 1.05
    j = jn_zeros(0, basis.m)
    assert basis.beta_sq_sum == pytest.approx(np.sum(4 * math.pi / j**2), rel=1e-12)


def test_disk_radius_scaling():
    _, b1 = build_disk(1.0, 20, 256)
    _, b2 = build_disk(2.0, 20, 256)
    np.testing.assert_allclose(b2.lambdas, b1.lambdas / 4, rtol=1e-13)


def test_disk_radial_guard():
    with pytest.raises(ValueError, match="points per oscillation"):
        build_disk(1.0, radial_modes=200, radial_points=512)
    with pytest.raises(ValueError):
        build_disk(1.0, radial_modes=0)


def test_disk_modes_orthonormal():
    section, basis = build_disk(1.0, 20, 1024)
    E = basis.modes
    G = (E * section.weights) @ E.T
    np.testing.assert_allclose(G, np.eye(basis.m), atol=2e-5)


# -- grid --------------------------------------------------------------------


def test_grid_square_close_to_analytic():
    _, basis = build_grid(square_mask(64), 1 / 64, 3)
    assert basis.lambdas[0] == pytest.approx(2 * math.pi**2, rel=1e-2)


def test_grid_single_cell():
    h = 0.1
    _, basis = build_grid(np.ones((1, 1), dtype=bool), h, 1)
    assert basis.lambdas[0] == pytest.approx(4 / h**2, rel=1e-14)


def test_grid_convergence_order():
    errs = [abs(build_grid(square_mask(n), 1 / n, 1)[1].lambdas[0] - 2 * math.pi**2)
            for n in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_lshape_refinement_trend():
    lam = [build_grid(l_shape_mask(n), 1 / n, 1)[1].lambdas[0] for n in (16, 32, 64)]
    assert lam[0] > lam[1] > lam[2]
    # regression lock of the refinement study
    np.testing.assert_allclose(lam, [38.772648854205094, 38.694025904148496, 38.62480728058879],
                               rtol=1e-9)


def test_grid_rejects_disconnected_mask():
    mask = np.zeros((5, 5), dtype=bool)
    mask[0, 0] = mask[4, 4] = True
    with pytest.raises(ValueError, match="not connected"):
        build_grid(mask, 0.1, 1)


def test_grid_rejects_too_many_modes():
    with pytest.raises(ValueError):
        build_grid(square_mask(4), 0.25, 20)


def test_grid_modes_orthonormal():
    section, basis = build_grid(l_shape_mask(16), 1 / 16, 10)
    E = basis.modes
    G = (E * section.weights) @ E.T
    np.testing.assert_allclose(G, np.eye(basis.m), atol=1e-12)
    assert np.all(basis.betas >= 0)


def test_mask_round_trip(tmp_path):
    mask = l_shape_mask(12)
    path = tmp_path / "l.mask"
    write_mask(mask, path)
    np.testing.assert_array_equal(read_mask(path), mask)


def test_mask_rejects_bad_characters(tmp_path):
    path = tmp_path / "bad.mask"
    path.write_text("0110\n01x0\n")
    with pytest.raises(ValueError, match=":2:"):
        read_mask(path)


@settings(max_examples=20)
@given(st.integers(1, 6), st.integers(1, 6))
def test_grid_rectangle_eigenvalues_exact(nx, ny):
    # discrete sine eigenvalues of the 5-point operator on an (ny, nx) raster
    h = 0.2
    _, basis = build_grid(np.ones((ny, nx), dtype=bool), h, 1)
    expect = (4 * math.sin(math.pi / (2 * (nx + 1))) ** 2
              + 4 * math.sin(math.pi / (2 * (ny + 1))) ** 2) / h**2
    assert basis.lambdas[0] == pytest.approx(expect, rel=1e-12)


# -- flux carrier ------------------------------------------------------------


def test_disk_flux_carrier(unit_disk):
    section, basis = unit_disk
    fc = flux_carrier(section, basis, 1.0)
    R = 1.0
    assert fc.chi0_sq == pytest.approx(math.pi * R**4 / 8, rel=1e-5)
    assert fc.chi0_sq_direct == pytest.approx(math.pi * R**4 / 8, rel=1e-6)
    exact = (R**2 - section.points**2) / 4
    assert np.max(np.abs(fc.Phi_direct - exact)) < 1e-6
    assert section.norm(fc.Phi - exact) / section.norm(exact) < 1e-3


def test_square_flux_carrier(square):
    section, basis = square
    fc = flux_carrier(section, basis, 1.0)
    p, q = basis.p, basis.q
    odd = (p % 2 == 1) & (q % 2 == 1)
    oracle = np.sum(64 / (math.pi**6 * (p * q) ** 2 * (p**2 + q**2))[odd])
    assert fc.chi0_sq == pytest.approx(oracle, rel=1e-13)
    assert fc.chi0_sq == pytest.approx(0.0351439, abs=1e-6)
    assert fc.chi0_sq_energy == pytest.approx(fc.chi0_sq, rel=1e-10)
    assert np.all(fc.Phi > 0)


def test_flux_carrier_scales_with_viscosity(unit_disk):
    section, basis = unit_disk
    fc = flux_carrier(section, basis, 10.0)
    assert section.integrate(fc.phi) == pytest.approx(fc.chi0_sq / 10, rel=1e-5)


def test_grid_flux_carrier_positive():
    section, basis = build_grid(l_shape_mask(16), 1 / 16, 40)
    fc = flux_carrier(section, basis, 1.0)
    assert np.all(fc.Phi_direct > 0)
    assert fc.chi0_sq_direct >= fc.chi0_sq  # partial sums increase to the full value


def test_flux_carrier_errors(unit_disk):
    section, basis = unit_disk
    with pytest.raises(ValueError):
        flux_carrier(section, basis, 0.0)


def test_basis_csv(tmp_path, small_square):
    _, basis = small_square
    path = tmp_path / "eigs.csv"
    basis.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (basis.m, 3)
    np.testing.assert_array_equal(data[:, 1], basis.lambdas)
    np.testing.assert_array_equal(data[:, 2], basis.betas)
