import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from bhquench.dispersion import QuenchParams, omega_squared
from bhquench.dynamics import (
    SERIES_THRESHOLD,
    evolve_modes_ode,
    kernel_closed_form,
    kernel_table,
    max_step,
    oracle_displacement_field,
    real_space_oracle,
    spectroscopy_fit,
)
from bhquench.errors import (
    ConfigurationError,
    NoSignalError,
    ParameterError,
    SizeError,
    UnstableRegimeError,
)
from bhquench.lattice import build_lattice, mode_grid, tunneling_matrix

SQ2 = math.sqrt(2.0)


def adaptive_mode(U, J, T, times):
    """Oracle: per-mode equations with scipy's adaptive DOP853 on real variables."""

    def rhs(_, y):
        f11, x, y12, f22 = y
        b = SQ2 * J * T
        det = U - 3 * J * T
        src = f11 + f22 + 1.0
        # i f12' = det f12 - b src
        dx = det * y12
        dy = -(det * x - b * src)
        d11 = 2 * b * y12
        return [d11, dx, dy, d11]

    sol = solve_ivp(rhs, (0, times[-1]), [0, 0, 0, 0], t_eval=times, method="DOP853", rtol=1e-12, atol=1e-14)
    f11, x, _, f22 = sol.y
    return f11 + 2 * SQ2 * x + 2 * f22


@pytest.mark.parametrize("J, T", [(0.05, 1.0), (0.15, -0.5), (0.5, 1.0), (4.0, 0.75), (1.0, 0.0), (0.3, 0.2)])
def test_closed_form_against_adaptive_integrator(J, T):
    times = np.linspace(0, 10, 21)
    p = QuenchParams(1.0, J, times)
    K = kernel_closed_form(p, T, times)
    ref = adaptive_mode(1.0, J, T, times)
    np.testing.assert_allclose(K, ref, rtol=1e-8, atol=1e-10)


def test_kernel_zero_at_t0_and_zero_for_T0():
    p = QuenchParams(1.0, 0.5, np.linspace(0, 5, 6))
    assert np.all(kernel_closed_form(p, np.linspace(-1, 1, 9), 0.0) == 0.0)
    assert np.all(kernel_closed_form(p, 0.0, p.times) == 0.0)


def test_kernel_rejects_negative_time():
    with pytest.raises(ParameterError):
        kernel_closed_form(QuenchParams(1.0, 0.5, np.array([0.0, 1.0])), 1.0, -1.0)


def test_stable_mode_bound():
    # for stable modes 1 - cos <= 2 so K <= 8 J U T / omega^2
    p = QuenchParams(1.0, 0.1, np.linspace(0, 50, 501))
    T = np.linspace(0.01, 1, 50)
    K = kernel_closed_form(p, T[None, :], p.times[:, None])
    bound = 8 * p.J * p.U * T / omega_squared(1.0, 0.1, T)
    assert np.all(K <= bound + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.0, 20.0))
def test_kernel_continuous_across_series_branch(offset, t):
    # sit exactly on the branch switch and just either side of it
    U = 1.0
    J = 3 - math.sqrt(8 + offset * SERIES_THRESHOLD)
    p = QuenchParams(U, J, np.array([0.0, 1.0]))
    w2 = omega_squared(U, J, 1.0)
    assert abs(w2) <= 1.1 * SERIES_THRESHOLD
    # oracle: trig form evaluated with extended precision via expm1-free Taylor for tiny omega
    ref = 4 * J * U * (t * t / 2 - w2 * t**4 / 24 + w2 * w2 * t**6 / 720 - w2**3 * t**8 / 40320)
    assert kernel_closed_form(p, 1.0, t) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("J", [0.05, 0.15, 1.0, 4.0])
def test_ode_matches_closed_form_and_particle_hole(J):
    lat = build_lattice(2, 16)
    grid = mode_grid(lat)
    p = QuenchParams(1.0, J, np.linspace(0, 10, 21))
    traj = evolve_modes_ode(p, grid)
    K = kernel_table(p, grid).K
    scale = np.maximum(1.0, np.abs(K))
    assert np.max(np.abs(traj.occupation() - K) / scale) < 1e-6
    assert np.array_equal(traj.f11, traj.f22)


def test_explicit_step_must_divide_interval():
    grid = mode_grid(build_lattice(2, 4))
    p = QuenchParams(1.0, 0.1, np.array([0.0, 1.0]))
    with pytest.raises(ConfigurationError):
        evolve_modes_ode(p, grid, step=0.3)
    with pytest.raises(ConfigurationError):
        evolve_modes_ode(p, grid, step=0.5)  # above the stability bound
    assert max_step(p) > 1e-3
    evolve_modes_ode(p, grid, step=1e-3)


@pytest.mark.parametrize("J", [0.15, 0.5])
@pytest.mark.parametrize("lat", [build_lattice(2, 8), build_lattice(1, 8), build_lattice(2, 8, "range", 2)])
def test_real_space_oracle_matches_fourier(J, lat):
    p = QuenchParams(1.0, J, np.linspace(0, 5, 11))
    C = oracle_displacement_field(real_space_oracle(p, lat), lat)
    axes = tuple(range(1, lat.dimension + 1))
    K = np.fft.fftn(C, axes=axes).real
    modes = evolve_modes_ode(p, mode_grid(lat)).occupation()
    np.testing.assert_allclose(K, modes, atol=1e-10)


def test_real_space_oracle_accepts_matrix_and_checks_it():
    lat = build_lattice(2, 4)
    p = QuenchParams(1.0, 0.2, np.linspace(0, 1, 3))
    a = real_space_oracle(p, lat).occupation()
    b = real_space_oracle(p, tunneling_matrix(lat)).occupation()
    np.testing.assert_array_equal(a, b)
    bad = tunneling_matrix(lat)
    bad[0, 1] = 0
    with pytest.raises(ConfigurationError):
        real_space_oracle(p, bad)


def test_real_space_oracle_size_limit():
    with pytest.raises(SizeError):
        real_space_oracle(QuenchParams(1.0, 0.1, np.array([0.0, 1.0])), build_lattice(2, 65))


def test_spectroscopy_recovers_frequency():
    t = np.linspace(0, 30, 64)
    p = QuenchParams(1.0, 0.1, t)
    for T in (1.0, 0.5, -0.7):
        y = kernel_closed_form(p, T, t)
        fit = spectroscopy_fit(t, y)
        assert fit.omega == pytest.approx(math.sqrt(omega_squared(1.0, 0.1, T)), rel=1e-6)


def test_spectroscopy_errors():
    t = np.linspace(0, 30, 64)
    with pytest.raises(NoSignalError):
        spectroscopy_fit(t, np.zeros_like(t))
    with pytest.raises(UnstableRegimeError):
        spectroscopy_fit(t, np.cosh(0.3 * t) - 1)
    with pytest.raises(ConfigurationError):
        spectroscopy_fit(t[:5], t[:5])


def test_oracle_hermiticity():
    lat = build_lattice(2, 4, "range", 1)
    traj = real_space_oracle(QuenchParams(1.0, 0.5, np.linspace(0, 3, 4)), lat)
    for block in (traj.hh, traj.pp):
        assert np.abs(block - np.conj(np.swapaxes(block, 1, 2))).max() < 1e-10
    assert np.abs(traj.hp - np.conj(np.swapaxes(traj.ph, 1, 2))).max() < 1e-10
