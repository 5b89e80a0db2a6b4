import numpy as np
import pytest

from qtoa.analysis import (
    arrival_report,
    coalescence_time,
    deformation_sweep,
    density_profile,
    parity_kernel_residual,
    reflected_potential_eigen_check,
    run_arrival,
    tke_residual,
)
from qtoa.core import Free, Harmonic, PhysicalParams, Sinusoidal
from qtoa.errors import NoArrivalError
from qtoa.kernels import KernelFactor, Ordering, assemble_kernel
from qtoa.propagator import ObservableSeries
from qtoa.spectral import Classification, build_grid, build_operator_matrix, select_eigenpairs, solve_spectrum

UNIT = PhysicalParams()


def synthetic(times, mean, var, density=None, grid=None):
    t = np.asarray(times, dtype=float)
    return ObservableSeries(t, np.asarray(mean, float), np.asarray(var, float), np.ones_like(t), density, grid)


def test_minimum_variance_parabola_refined():
    t = np.linspace(0.0, 1.0, 11)
    rep = arrival_report(synthetic(t, 0.2 - t, (t - 0.53) ** 2 + 0.1), 0.5)
    assert rep.t_minvar == pytest.approx(0.53, abs=1e-12)
    assert rep.min_variance == pytest.approx(0.1, abs=1e-12)
    assert rep.t_cross == pytest.approx(0.2, abs=1e-12)
    assert rep.minvar_deviation == pytest.approx(0.06)
    assert rep.mean_q_at_tau == pytest.approx(-0.3)


def test_crossing_nearest_tau_is_chosen():
    t = np.linspace(0.0, 4.0, 401)
    rep = arrival_report(synthetic(t, np.cos(np.pi * t), (t - 2.1) ** 2 + 1), 2.4)
    assert rep.t_cross == pytest.approx(2.5, abs=1e-3)


def test_arrival_point_shift():
    t = np.linspace(0.0, 1.0, 51)
    a = arrival_report(synthetic(t, 1.0 - t, (t - 0.5) ** 2 + 1), 0.5)
    b = arrival_report(synthetic(t, 3.0 - t, (t - 0.5) ** 2 + 1), 0.5, arrival_point=2.0)
    assert a.t_cross == pytest.approx(b.t_cross)


def test_time_shift_invariance():
    t = np.linspace(0.0, 1.0, 51)
    var = (t - 0.37) ** 2 + 0.2
    a = arrival_report(synthetic(t, 0 * t, var), 0.4)
    b = arrival_report(synthetic(t + 5.0, 0 * t, var), 5.4)
    assert b.t_minvar - 5.0 == pytest.approx(a.t_minvar, abs=1e-12)


def test_symmetric_state_has_no_crossing():
    t = np.linspace(0.0, 1.0, 11)
    rep = arrival_report(synthetic(t, 1e-9 * np.sin(t), (t - 0.5) ** 2 + 1), 0.5, classification=Classification.ANTINODAL)
    assert rep.t_cross is None and rep.cross_deviation is None
    assert rep.classification == "antinodal"
    assert rep.to_dict()["t_cross"] is None


def test_monotone_variance_is_no_arrival():
    t = np.linspace(0.0, 1.0, 11)
    with pytest.raises(NoArrivalError):
        arrival_report(synthetic(t, 0 * t, 1 + t), 0.5)
    with pytest.raises(ValueError):
        arrival_report(synthetic(t[:2], [0, 0], [1, 1]), 0.5)


def test_coalescence_of_two_peaks():
    grid = build_grid(4.0, 200)
    q = grid.points
    times = np.linspace(0.0, 1.0, 11)
    sep = 2.0 * np.abs(times - 0.6) + 0.5
    dens = np.array([np.exp(-((q - s) ** 2) / 0.02) + np.exp(-((q + s) ** 2) / 0.02) for s in sep])
    series = synthetic(times, 0 * times, 1 + (times - 0.6) ** 2, dens, grid)
    assert coalescence_time(series) == pytest.approx(0.6)
    assert arrival_report(series, 0.6).coalescence == pytest.approx(0.6)


def test_density_profile_of_gaussian():
    grid = build_grid(5.0, 1000)
    q = grid.points
    sigma = 0.5
    psi = np.exp(-((q - 1.0) ** 2) / (4 * sigma**2))
    prof = density_profile(psi, grid)
    assert prof.peak == pytest.approx(1.0, abs=1e-4)
    assert prof.peak_position == pytest.approx(1.0, abs=grid.spacing)
    assert prof.fwhm == pytest.approx(2 * np.sqrt(2 * np.log(2)) * sigma, rel=1e-4)


def test_tke_free_particle_vanishes():
    rep = tke_residual(KernelFactor(Ordering.WEYL, Free(), UNIT), Free(), UNIT)
    assert rep.residual < 1e-6
    assert rep.diagonal_error < 1e-12 and rep.antidiagonal_error < 1e-12


def test_tke_weyl_harmonic_second_order():
    f = KernelFactor(Ordering.WEYL, Harmonic(), UNIT)
    a = tke_residual(f, Harmonic(), UNIT, h=1e-3)
    b = tke_residual(f, Harmonic(), UNIT, h=5e-4)
    assert a.residual < 1e-5
    assert 3.5 <= a.residual / b.residual <= 4.5


@pytest.mark.parametrize("scheme", [Ordering.SYMMETRIC, Ordering.BORN_JORDAN])
def test_tke_discriminates_other_orderings(scheme):
    rep = tke_residual(KernelFactor(scheme, Harmonic(), UNIT), Harmonic(), UNIT)
    assert rep.residual > 0.1
    assert rep.diagonal_error < 1e-8


def test_parity_kernel_residuals():
    grid = build_grid(3.0, 64)
    for V, bound in [(Free(), 1e-12), (Harmonic(), 1e-10)]:
        K = assemble_kernel(KernelFactor(Ordering.WEYL, V, UNIT))
        assert parity_kernel_residual(K, grid) < bound
    K = assemble_kernel(KernelFactor(Ordering.WEYL, Sinusoidal(), UNIT))
    assert parity_kernel_residual(K, grid) > 1e-3
    M = build_operator_matrix(K, grid)
    assert parity_kernel_residual(K, grid, M) == pytest.approx(parity_kernel_residual(K, grid), rel=1e-12)


def test_reflection_check_even_potential_is_trivial():
    grid = build_grid(3.0, 32)
    rc = reflected_potential_eigen_check(Harmonic(), KernelFactor(Ordering.WEYL, Harmonic(), UNIT), grid)
    assert rc.eigenvalue_mismatch == 0 and rc.min_overlap == 1
    assert rc.worst == 0


def test_reflection_check_sinusoidal_small_box():
    grid = build_grid(4.0, 64)
    V = Sinusoidal()
    rc = reflected_potential_eigen_check(V, KernelFactor(Ordering.WEYL, V, UNIT), grid)
    assert rc.eigenvalue_mismatch < 1e-8 * rc.scale
    assert rc.min_overlap > 1 - 1e-6


@pytest.fixture(scope="module")
def weyl_l6():
    grid = build_grid(6.0, 512)
    spec = solve_spectrum(build_operator_matrix(assemble_kernel(KernelFactor(Ordering.WEYL, Harmonic(), UNIT)), grid))
    return grid, spec


def test_weyl_antinodal_eigenfunction_arrives(weyl_l6):
    grid, spec = weyl_l6
    pair = select_eigenpairs(spec, UNIT, "antinodal", 1)[0]
    series, rep, prof = run_arrival(pair.psi, pair.eigenvalue, grid, Harmonic(), UNIT, dt=1e-4, emit_warnings=False)
    assert rep.minvar_deviation < 0.05
    assert abs(rep.mean_q_at_tau) < 0.05 * grid.half_length * 0.1
    assert abs(prof.peak_position) < prof.fwhm


def test_sweep_at_zero_reproduces_undeformed_run(weyl_l6):
    grid, spec = weyl_l6
    pair = select_eigenpairs(spec, UNIT, "nodal", 1)[0]
    _, direct, _ = run_arrival(pair.psi, pair.eigenvalue, grid, Harmonic(), UNIT, dt=1e-4, emit_warnings=False)
    (entry,) = deformation_sweep(KernelFactor(Ordering.WEYL, Harmonic(), UNIT), [0.0], grid, pair.psi, dt=1e-4,
                                 reference_tau=pair.eigenvalue)
    assert entry.tracked and entry.overlap == pytest.approx(1.0, abs=1e-10)
    assert entry.eigenvalue == pair.eigenvalue
    assert entry.report.t_minvar == pytest.approx(direct.t_minvar, rel=1e-12)
    assert not entry.degraded


def test_sweep_rejects_negative_alpha(weyl_l6):
    grid, spec = weyl_l6
    with pytest.raises(ValueError):
        deformation_sweep(KernelFactor(Ordering.WEYL, Harmonic(), UNIT), [-1.0], grid, spec.vectors[:, 0])


@pytest.mark.parametrize("scheme", list(Ordering))
def test_schemes_agree_on_small_box(scheme):
    # at l = 2 every ordering's kernel stays O(1), so the eigensolve is clean
    grid = build_grid(2.0, 512)
    spec = solve_spectrum(build_operator_matrix(assemble_kernel(KernelFactor(scheme, Harmonic(), UNIT)), grid))
    assert min(abs(p.parity) for p in spec) > 1 - 1e-6
    for kind in ("antinodal", "nodal"):
        pair = select_eigenpairs(spec, UNIT, kind, 1)[0]
        _, rep, _ = run_arrival(pair.psi, pair.eigenvalue, grid, Harmonic(), UNIT, dt=1e-4, emit_warnings=False)
        assert rep.minvar_deviation < 0.05
