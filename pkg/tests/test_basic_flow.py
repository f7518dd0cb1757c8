import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apflow.apseries import APSeries
from apflow.basic_flow import (
    embedding_beta,
    per_mode_ratios,
    regL1_sums,
    sample_solution,
    solve_spectral,
    verify_bounds,
    write_report_json,
    write_samples_csv,
)
from apflow.cross_section import flux_carrier

SMALL_SWEEP = dict(sweep_nus=(0.1, 1.0, 10.0), sweep_xis=(0.0, 0.1, 1.0, 10.0, 100.0))


def test_steady_poiseuille_square(square):
    section, basis = square
    nu, q = 1.0, 1.0
    sol = solve_spectral(APSeries.constant(q), section, basis, nu)
    chi = flux_carrier(section, basis, nu).chi0_sq
    assert sol.pi_hat[0.0].real == pytest.approx(nu * q / chi, rel=1e-13)
    assert sol.pi_hat[0.0].real == pytest.approx(1 / 0.0351439, rel=1e-5)
    np.testing.assert_allclose(sol.w_hat(0.0).real, q / chi * flux_carrier(section, basis, 1.0).Phi,
                               rtol=1e-12)


@pytest.mark.parametrize("nu", [0.3, 4.0])
def test_steady_pressure_scales_with_viscosity(disk, nu):
    section, basis = disk
    sol = solve_spectral(APSeries.constant(2.0), section, basis, nu)
    chi = float(section.integrate(flux_carrier(section, basis, 1.0).Phi_direct))
    assert sol.pi_hat[0.0].real == pytest.approx(nu * 2.0 / chi, rel=1e-10)
    assert sol.pi_hat[0.0].real == pytest.approx(16 * math.pi * nu, rel=1e-6)


def test_cosine_pressure_modes(square):
    section, basis = square
    from apflow.modal import solve_W

    sol = solve_spectral(APSeries.cosine(1.0), section, basis, 1.0)
    assert sorted(sol.pi_hat) == [-1.0, 1.0]
    a = solve_W(section, basis, 1.0, 1.0).a_xi
    assert sol.pi_hat[1.0] == pytest.approx(0.5 / a, rel=1e-14)
    assert sol.pi_hat[-1.0] == np.conj(sol.pi_hat[1.0])
    assert np.max(sol.flux_residuals()) < 1e-8


def test_superposition(square):
    section, basis = square
    f1 = APSeries.cosine(1.0, 2.0)
    f2 = APSeries.from_terms([(0.0, 0.5), (math.sqrt(2), 0.25 + 0.1j)])
    s1 = solve_spectral(f1, section, basis, 0.7)
    s2 = solve_spectral(f2, section, basis, 0.7)
    s12 = solve_spectral(f1 + f2, section, basis, 0.7)
    for xi in s12.pi_hat:
        expect = s1.pi_hat.get(xi, 0) + s2.pi_hat.get(xi, 0)
        assert abs(s12.pi_hat[xi] - expect) <= 1e-12 * abs(expect)


def test_threaded_solve_is_identical(square):
    section, basis = square
    f = APSeries.from_terms([(0.0, 1.0), (1.0, 0.5), (2.0, 0.25j), (math.pi, 0.1)])
    a = solve_spectral(f, section, basis, 1.0)
    b = solve_spectral(f, section, basis, 1.0, workers=4)
    assert a.pi_hat == b.pi_hat


def test_fd_route_equation_residual(disk):
    section, basis = disk
    f = APSeries.cosine(3.0) + APSeries.constant(1.0)
    sol = solve_spectral(f, section, basis, 0.5, "fd")
    w, K = section.weights, section.stiffness
    for xi in sol.pi_hat:
        wh = sol.w_hat(xi)
        r = 1j * xi * wh + 0.5 * (K @ wh) / w - sol.pi_hat[xi]
        assert section.norm(r) < 1e-8 * abs(sol.pi_hat[xi])
    assert np.max(sol.flux_residuals()) < 1e-12


def test_sampled_flux_reproduces_cosine(disk):
    section, basis = disk
    sol = solve_spectral(APSeries.cosine(1.0), section, basis, 1.0)
    t = np.linspace(0, 2 * math.pi, 401)
    s = sample_solution(sol, t, [[0.0, 0.0], [0.3, 0.1]])
    err = np.linalg.norm(s["flux"] - np.cos(t)) / np.linalg.norm(np.cos(t))
    assert err < 1e-6
    assert s["imag_residue"] < 1e-10
    assert s["w"].shape == (401, 2)


def test_steady_probe_is_constant(square):
    section, basis = square
    sol = solve_spectral(APSeries.constant(1.0), section, basis, 1.0)
    s = sample_solution(sol, np.linspace(0, 10, 7), [[0.5, 0.5]])
    assert np.ptp(s["w"]) == 0.0
    assert s["w"][0, 0] > 0


def test_probe_outside_raises(square, disk):
    for section, basis in (square, disk):
        sol = solve_spectral(APSeries.constant(1.0), section, basis, 1.0)
        with pytest.raises(ValueError, match="outside"):
            sample_solution(sol, [0.0], [[2.0, 2.0]])
    with pytest.raises(ValueError):
        sample_solution(sol, [0.0], [[section.dims[0], 0.0]])  # on the wall


def test_samples_csv(tmp_path, small_square):
    section, basis = small_square
    sol = solve_spectral(APSeries.cosine(2.0), section, basis, 1.0)
    s = sample_solution(sol, np.linspace(0, 1, 5), [[0.5, 0.5]])
    path = tmp_path / "samples.csv"
    write_samples_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,pi,flux,w@probe1"
    assert len(lines) == 6


def test_steady_bound_ratio(square):
    section, basis = square
    sol = solve_spectral(APSeries.constant(1.0), section, basis, 1.0)
    rep = verify_bounds(sol, **SMALL_SWEEP)
    chi = flux_carrier(section, basis, 1.0).chi0_sq
    # the resolved forcing has squared norm sum beta^2
    assert rep["ratio_lap_w"] == pytest.approx(math.sqrt(basis.beta_sq_sum) / chi, rel=1e-12)
    assert rep["finite"] and rep["nu_stable"]


def test_homogeneity_of_ledgers(square):
    section, basis = square
    f = APSeries.cosine(1.0) + APSeries.constant(0.5)
    a = solve_spectral(f, section, basis, 1.0)
    b = solve_spectral(f * 2.0, section, basis, 1.0)
    for k, v in a.ledgers.items():
        assert b.ledgers[k] == pytest.approx(2 * v, rel=1e-12), k


def test_bound_sweep_is_bounded_and_nu_stable(square):
    section, basis = square
    sol = solve_spectral(APSeries.cosine(1.0), section, basis, 1.0)
    rep = verify_bounds(sol)
    assert rep["finite"]
    assert rep["nu_stable"]
    assert all(0 < c < 100 for c in rep["sweep"]["fitted_c"])


def test_per_mode_ratios_are_invariant_under_scaling(square):
    section, basis = square
    from apflow.modal import solve_W

    r1 = per_mode_ratios(solve_W(section, basis, 3.0, 1.0))
    r2 = per_mode_ratios(solve_W(section, basis, 30.0, 10.0))
    np.testing.assert_allclose(r1, r2, rtol=1e-12)


def test_regL1_single_steady_mode(square):
    section, basis = square
    nu, q = 2.0, -3.0
    sol = solve_spectral(APSeries.constant(q), section, basis, nu)
    chi = flux_carrier(section, basis, 1.0).chi0_sq
    sums = regL1_sums(sol)
    assert sums["sum_abs_pi"] == pytest.approx(nu / chi * abs(q), rel=1e-13)


def test_regL1_empty_flux(square):
    section, basis = square
    sol = solve_spectral(APSeries.from_terms([]), section, basis, 1.0)
    sums = regL1_sums(sol)
    assert all(v == 0 for v in sums.values())


def test_regL1_quasiperiodic(square):
    section, basis = square
    f = APSeries.cosine(1.0) + APSeries.cosine(math.sqrt(2))
    sol = solve_spectral(f, section, basis, 1.0)
    sums = regL1_sums(sol)
    env = verify_bounds(sol, **SMALL_SWEEP)
    assert all(math.isfinite(v) for v in sums.values())
    assert sums["ratio_lap_w"] <= max(env["sweep"]["fitted_c"])


def test_parseval_ledger(square):
    section, basis = square
    f = APSeries.from_terms([(0.0, 1.0), (1.0, 0.5 + 0.5j), (5.0, 0.1)])
    sol = solve_spectral(f, section, basis, 1.0)
    assert sol.ledgers["pi_B2"] == pytest.approx(sol.pi.besicovitch_norm(0), rel=1e-14)


def test_report_json(tmp_path, small_square):
    import json

    section, basis = small_square
    sol = solve_spectral(APSeries.cosine(1.0), section, basis, 1.0)
    path = tmp_path / "r.json"
    write_report_json(sol.report(), path)
    data = json.loads(path.read_text())
    assert data["representative"].startswith("canonical")
    assert len(data["modes"]) == 2


def test_embedding_beta_classical_series():
    spec = [k for k in range(-10**4, 10**4 + 1) if k != 0]
    rep = embedding_beta(spec, 1.0, [0.5, 2.0])
    assert rep["heuristic"] is True
    assert rep["gammas"][2.0]["partial_sums"][-1] == pytest.approx(math.pi**2 / 3, abs=1e-3)
    assert rep["gammas"][2.0]["verdict"] == "converging"
    assert rep["gammas"][0.5]["verdict"] == "diverging"
    assert rep["beta_estimate"] == 2.0
    assert rep["verdict"] == "beta < 2s implausible"


def test_embedding_beta_small_finite_spectrum():
    rep = embedding_beta([0.0, 1.0, -1.0, 2.5], 0.5, [0.1, 1.0, 3.0])
    assert rep["zero_mode_present"]
    assert all(r["verdict"] == "converging" for r in rep["gammas"].values())


@settings(max_examples=20)
@given(st.lists(st.tuples(st.just(0.0) | st.floats(0.05, 50.0), st.floats(-2, 2), st.floats(-2, 2)),
                min_size=1, max_size=4))
def test_flux_identity_property(small_square, terms):
    section, basis = small_square
    terms = [(x, complex(re, im if x > 0 else 0.0)) for x, re, im in terms if abs(re) + abs(im) > 1e-3]
    if not terms:
        return
    f = APSeries.from_terms(terms)
    sol = solve_spectral(f, section, basis, 1.0)
    assert np.max(sol.flux_residuals(), initial=0.0) < 1e-8
    s = sample_solution(sol, np.linspace(0, 5, 11))
    assert s["imag_residue"] < 1e-10
