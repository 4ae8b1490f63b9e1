"""Particle/hole correlation dynamics after the Mott -> superfluid quench.

Three routes to the same connected correlators:

* ``kernel_closed_form``: the solved mode kernel 4 J U T g(omega^2, t);
* ``evolve_modes_ode``: RK4 integration of the per-mode linear system for
  f11, f12, f22 in Fourier space;
* ``real_space_oracle``: RK4 integration of the linearised site-space system
  for an arbitrary symmetric tunneling matrix.

All correlators are connected parts and vanish at t = 0. The Mott hole
occupation enters only through the source term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .dispersion import QuenchParams, omega_squared
from .errors import ConfigurationError, NoSignalError, ParameterError, SizeError, UnstableRegimeError
from .lattice import LatticeSpec, ModeGrid, tunneling_matrix

SQRT2 = math.sqrt(2.0)
SERIES_THRESHOLD = 1e-8  # times U^2
MAX_ORACLE_SITES = 4096


def _growth_function(w2, t, delta):
    """g(omega^2, t) = (1 - cos(omega t)) / omega^2 continued analytically through omega^2 = 0."""
    w2, t = np.broadcast_arrays(np.asarray(w2, dtype=float), np.asarray(t, dtype=float))
    out = np.empty(w2.shape)
    pos = w2 > delta
    neg = w2 < -delta
    mid = ~(pos | neg)
    w = np.sqrt(w2[pos])
    out[pos] = 2.0 * np.sin(0.5 * w * t[pos]) ** 2 / w2[pos]
    g = np.sqrt(-w2[neg])
    out[neg] = 2.0 * np.sinh(0.5 * g * t[neg]) ** 2 / -w2[neg]
    tm, wm = t[mid], w2[mid]
    t2 = tm * tm
    out[mid] = t2 / 2.0 - wm * t2 * t2 / 24.0 + wm * wm * t2 * t2 * t2 / 720.0
    return out


def kernel_closed_form(params: QuenchParams, T, t):
    """Mode contribution K_k(t) to <a^dag a> for structure factor ``T`` at time ``t``.

    Broadcasts over ``T`` and ``t``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("time must be non-negative")
    U, J = params.U, params.J
    T = np.asarray(T, dtype=float)
    w2 = omega_squared(U, J, T)
    return 4.0 * J * U * T * _growth_function(w2, t, SERIES_THRESHOLD * U * U)


@dataclass(frozen=True, eq=False)
class ModeKernelTable:
    """K[i, ...] holds the kernel on the grid at ``times[i]``."""

    grid: ModeGrid
    times: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)


def kernel_table(params: QuenchParams, grid: ModeGrid, times=None) -> ModeKernelTable:
    times = params.times if times is None else np.asarray(times, dtype=float).reshape(-1)
    t = times.reshape((-1,) + (1,) * grid.structure.ndim)
    K = kernel_closed_form(params, grid.structure[None, ...], t)
    return ModeKernelTable(grid, times, K)


def max_step(params: QuenchParams) -> float:
    """Step bound 0.01 / (largest rate), where the rate covers U and |omega_k| for any T in [-1, 1]."""
    U, J = params.U, params.J
    rates2 = [U * U, abs(float(omega_squared(U, J, 1.0))), abs(float(omega_squared(U, J, -1.0)))]
    if J > 0 and 3.0 * U / J <= 1.0:
        rates2.append(8.0 * U * U)
    return 0.01 / math.sqrt(max(rates2))


def _substeps(times: np.ndarray, h_max: float, step: float | None) -> list[tuple[int, float]]:
    plan = []
    for dt in np.diff(times):
        if step is None:
            n = max(1, math.ceil(dt / h_max - 1e-9))
            plan.append((n, dt / n))
            continue
        n = round(dt / step)
        if n < 1 or abs(n * step - dt) > 1e-9 * max(dt, 1.0):
            raise ConfigurationError(f"step {step} does not divide time interval {dt}")
        if step > h_max * (1 + 1e-12):
            raise ConfigurationError(f"step {step} exceeds stability bound {h_max}")
        plan.append((n, dt / n))
    return plan


def _rk4(rhs, state, plan, record):
    for n, h in plan:
        for _ in range(n):
            k1 = rhs(state)
            k2 = rhs(tuple(s + 0.5 * h * d for s, d in zip(state, k1)))
            k3 = rhs(tuple(s + 0.5 * h * d for s, d in zip(state, k2)))
            k4 = rhs(tuple(s + h * d for s, d in zip(state, k3)))
            state = tuple(s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))
        record(state)
    return state


@dataclass(frozen=True, eq=False)
class ModeTrajectory:
    grid: ModeGrid
    times: np.ndarray = field(repr=False)
    f11: np.ndarray = field(repr=False)
    f12: np.ndarray = field(repr=False)
    f22: np.ndarray = field(repr=False)

    @property
    def f21(self) -> np.ndarray:
        return np.conj(self.f12)

    def occupation(self) -> np.ndarray:
        """<a^dag a>_k = f11 + sqrt2 (f12 + f21) + 2 f22 from a = h + sqrt2 p."""
        return self.f11 + SQRT2 * 2.0 * self.f12.real + 2.0 * self.f22


def evolve_modes_ode(params: QuenchParams, grid: ModeGrid, step: float | None = None) -> ModeTrajectory:
    """Integrate, independently for each k,

        i d/dt f12 = (U - 3 J T) f12 - sqrt2 J T (f11 + f22 + 1)
        d/dt f11 = d/dt f22 = -i sqrt2 J T (f12 - f21)

    with fixed-step RK4 from all-zero initial data.
    """
    U, J = params.U, params.J
    T = np.asarray(grid.structure, dtype=float)
    detune = U - 3.0 * J * T
    b = SQRT2 * J * T

    def rhs(state):
        f11, f12, f22 = state
        d12 = -1j * (detune * f12 - b * (f11 + f22 + 1.0))
        d11 = 2.0 * b * f12.imag  # -i b (f12 - conj f12)
        return d11, d12, d11

    times = params.times
    plan = _substeps(times, max_step(params), step)
    zero = np.zeros(T.shape)
    state = (zero.copy(), np.zeros(T.shape, dtype=complex), zero.copy())
    out11, out12, out22 = [state[0]], [state[1]], [state[2]]

    def record(s):
        out11.append(s[0])
        out12.append(s[1])
        out22.append(s[2])

    _rk4(rhs, state, plan, record)
    return ModeTrajectory(grid, times, np.array(out11), np.array(out12), np.array(out22))


@dataclass(frozen=True, eq=False)
class RealSpaceTrajectory:
    """Site-space connected correlators at each sample time.

    ``hh[i, mu, nu] = <h_mu^dag h_nu>_c`` and likewise ``hp``, ``ph``, ``pp``.
    """

    times: np.ndarray = field(repr=False)
    hh: np.ndarray = field(repr=False)
    hp: np.ndarray = field(repr=False)
    ph: np.ndarray = field(repr=False)
    pp: np.ndarray = field(repr=False)

    def occupation(self) -> np.ndarray:
        """Connected <a_mu^dag a_nu> with a = h + sqrt2 p."""
        total = self.hh + SQRT2 * (self.hp + self.ph) + 2.0 * self.pp
        return total.real


def real_space_oracle(params: QuenchParams, lattice, step: float | None = None) -> RealSpaceTrajectory:
    """Integrate the pair-correlator system directly in site space.

    ``lattice`` is a :class:`LatticeSpec` or a symmetric 0/1 tunneling matrix.
    Linearising the Heisenberg equations about the Mott state gives, with
    psi = (h, p) and hopping A = T / Z,

        i d/dt h = J A (h + sqrt2 p)
        i d/dt p = U p - sqrt2 J A (h + sqrt2 p)

    so the pair matrix G = <psi^dag psi> obeys i dG/dt = G M^T - M G. The
    connected part F = G - diag(1, 0) picks up the source
    [[0, -sqrt2 J A], [sqrt2 J A, 0]] from the Mott background.
    """
    if isinstance(lattice, LatticeSpec):
        T = tunneling_matrix(lattice)
    else:
        T = np.asarray(lattice, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ConfigurationError("tunneling matrix must be square")
        if not np.array_equal(T, T.T):
            raise ConfigurationError("tunneling matrix must be symmetric")
    n = T.shape[0]
    if n > MAX_ORACLE_SITES:
        raise SizeError(f"{n} sites exceed the real-space oracle limit {MAX_ORACLE_SITES}")
    Z = T.sum(axis=1)
    if np.any(Z != Z[0]) or Z[0] < 2:
        raise ConfigurationError("every site needs the same coordination number Z >= 2")
    U, J = params.U, params.J
    A = T / Z[0]
    eye = np.eye(n)
    M = np.block([[J * A, SQRT2 * J * A], [-SQRT2 * J * A, U * eye - 2.0 * J * A]])
    Mt = M.T
    zero = np.zeros((n, n))
    source = np.block([[zero, -SQRT2 * J * A], [SQRT2 * J * A, zero]])

    def rhs(state):
        (F,) = state
        return (-1j * (F @ Mt - M @ F + source),)

    times = params.times
    plan = _substeps(times, max_step(params), step)
    F = np.zeros((2 * n, 2 * n), dtype=complex)
    frames = [F]
    _rk4(rhs, (F,), plan, lambda s: frames.append(s[0]))
    G = np.array(frames)
    return RealSpaceTrajectory(times, G[:, :n, :n], G[:, :n, n:], G[:, n:, :n], G[:, n:, n:])


def oracle_displacement_field(traj: RealSpaceTrajectory, lattice: LatticeSpec) -> np.ndarray:
    """C(dr, t) = <a_0^dag a_{-dr}> read off from the row of site 0, indexed by dr mod L."""
    occ = traj.occupation()
    row = occ[:, 0, :].reshape((len(traj.times),) + lattice.shape)
    # site nu sits at r_nu; dr = r_0 - r_nu = -r_nu
    axes = tuple(range(1, lattice.dimension + 1))
    return np.roll(np.flip(row, axis=axes), shift=1, axis=axes)


@dataclass(frozen=True)
class SpectroscopyFit:
    omega: float
    amplitude: float
    residual: float


def spectroscopy_fit(times, samples, U: float = 1.0) -> SpectroscopyFit:
    """Fit samples to A (1 - cos(omega t)) and return the mode frequency omega > 0.

    The starting frequency comes from the discrete Fourier peak of the series;
    neighbouring bins are tried too and the smallest residual wins. ``U`` sets
    the frequency scale used to bound the search.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(samples, dtype=float)
    if t.shape != y.shape or t.size < 8:
        raise ConfigurationError("need at least 8 samples with matching times")
    if np.max(np.abs(y)) < 1e-12:
        raise NoSignalError("sample amplitude below 1e-12")
    half = np.abs(y[y.size // 2 :])
    if np.all(np.diff(half) > 0):
        raise UnstableRegimeError("samples grow monotonically over the second half of the window")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ConfigurationError("spectroscopy needs uniformly spaced samples")

    spectrum = np.abs(np.fft.rfft(y - y.mean()))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(y.size, d=dt[0])
    peak = int(np.argmax(spectrum[1:])) + 1
    w_hi = max(freqs[-1], 10.0 * U)

    def resid(p):
        return p[0] * (1.0 - np.cos(p[1] * t)) - y

    best = None
    for b in (peak - 1, peak, peak + 1):
        if b < 1 or b >= freqs.size:
            continue
        w0 = freqs[b]
        basis = 1.0 - np.cos(w0 * t)
        a0 = float(basis @ y / (basis @ basis))
        fit = least_squares(resid, x0=[a0, w0], bounds=([-np.inf, 1e-12], [np.inf, w_hi]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = float(np.sqrt(np.mean(fit.fun**2)))
        if best is None or r < best.residual:
            best = SpectroscopyFit(float(fit.x[1]), float(fit.x[0]), r)
    return best
