"""Real-space correlation fields and the quantities derived from them.

``CorrelationField.values[i]`` is the connected two-point function
C(dr, t_i) = <a_mu^dag a_nu>_c with dr = r_mu - r_nu, stored on the periodic
displacement grid (index = dr mod L). Totals that include the Mott filling use
<a_mu^dag a_nu> = delta_{mu nu} + C(dr).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import QuenchParams, classify_regime
from .dynamics import ModeKernelTable, kernel_closed_form
from .errors import (
    ConfigurationError,
    GeometryError,
    NoFrontError,
    ParameterError,
    RegimeError,
    SingularityError,
    UndefinedPhaseError,
)
from .lattice import LatticeSpec, ModeGrid
from .special import FIRST_ZERO, j0

FILLING = 1.0


@dataclass(frozen=True, eq=False)
class CorrelationField:
    lattice: LatticeSpec
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    filling: float = FILLING

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigurationError(f"time {t} is not on the sample grid")
        return i

    def at(self, t_index: int, dr) -> float:
        idx = tuple(int(x) % self.lattice.extent for x in dr)
        return float(self.values[t_index][idx])

    def total(self, t_index: int, dr) -> float:
        """<a_mu^dag a_nu> including the on-site filling."""
        diag = all(int(x) % self.lattice.extent == 0 for x in dr)
        return self.at(t_index, dr) + (self.filling if diag else 0.0)

    def axis_profile(self, t_index: int, axis: int = 0, sign: int = 1) -> np.ndarray:
        """C(n e_axis) for n = 0 .. L/2."""
        L = self.lattice.extent
        n = np.arange(L // 2 + 1)
        idx = [np.zeros_like(n)] * self.lattice.dimension
        idx[axis] = (sign * n) % L
        return self.values[t_index][tuple(idx)]


def _direct_inverse(K: np.ndarray, spatial_axes: tuple) -> np.ndarray:
    """Exact inverse DFT by per-axis matrix products (no fast transform)."""
    out = K.astype(complex)
    for ax in spatial_axes:
        L = out.shape[ax]
        m = np.arange(L)
        E = np.exp(2j * np.pi * np.outer(m, m) / L) / L
        out = np.moveaxis(np.tensordot(E, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
    return out


def two_point_field(kernels: ModeKernelTable, grid: ModeGrid | None = None, method: str = "auto") -> CorrelationField:
    """C(dr, t) = (1/N) sum_k exp(i k . dr) K_k(t) for every sample time.

    ``method`` is ``"fft"``, ``"direct"`` or ``"auto"`` (fast transform when L
    is a power of two).
    """
    grid = kernels.grid if grid is None else grid
    K = np.asarray(kernels.K)
    if K.shape[1:] != grid.shape or K.shape[0] != len(kernels.times):
        raise ConfigurationError(f"kernel shape {K.shape} does not match grid {grid.shape}")
    L = grid.lattice.extent
    if method == "auto":
        method = "fft" if L & (L - 1) == 0 else "direct"
    axes = tuple(range(1, K.ndim))
    if method == "fft":
        C = np.fft.ifftn(K, axes=axes)
    elif method == "direct":
        C = _direct_inverse(K, axes)
    else:
        raise ConfigurationError(f"unknown transform method {method!r}")
    return CorrelationField(grid.lattice, np.asarray(kernels.times), C.real)


# ---------------------------------------------------------------- saddle point


def calibrate_prefactor(field: CorrelationField, gamma0: float, t_index: int) -> float:
    """N(t) = C(0, t) exp(-gamma t)."""
    t = field.times[t_index]
    return float(field.values[t_index].flat[0] * math.exp(-gamma0 * t))


def prefactor_log_slope(field: CorrelationField, gamma0: float, t_indices) -> float:
    """d log N / d log t over the given samples (diagnostic for the power-law prefactor)."""
    idx = list(t_indices)
    t = field.times[idx]
    logN = np.log([calibrate_prefactor(field, gamma0, i) for i in idx])
    return float(np.polyfit(np.log(t), logN, 1)[0])


@dataclass(frozen=True)
class SaddlePoint:
    values: np.ndarray
    inside: np.ndarray

    @property
    def extrapolated(self) -> np.ndarray:
        return ~self.inside


def saddle_point_form(gamma0: float, c: float, t: float, dr, prefactor: float) -> SaddlePoint:
    """N(t) exp(gamma sqrt(t^2 - dr^2/c^2)).

    Outside the cone |dr| > c t the growth factor is dropped and the value
    is N(t), flagged as extrapolation.
    """
    if not (c > 0 and math.isfinite(c)):
        raise RegimeError("no long-wavelength cone (c^2 <= 0)")
    r = np.abs(np.asarray(dr, dtype=float))
    inside = r <= c * t
    arg = np.where(inside, t * t - (r / c) ** 2, 0.0)
    return SaddlePoint(prefactor * np.exp(gamma0 * np.sqrt(arg)), inside)


# ------------------------------------------------------------------ light cone


@dataclass(frozen=True, eq=False)
class LightConeFront:
    times: np.ndarray
    radii: np.ndarray
    window: np.ndarray
    speed: float
    intercept: float
    threshold: float

    def running_speed(self) -> np.ndarray:
        """Fitted speed using window samples up to each time (NaN before two points)."""
        out = np.full(self.times.shape, np.nan)
        idx = np.nonzero(self.window)[0]
        for j in range(1, len(idx)):
            sel = idx[: j + 1]
            out[idx[j]] = np.polyfit(self.times[sel], self.radii[sel], 1)[0]
        return out


def cone_edge_threshold(gamma0: float, t_max: float, margin: float = 0.1) -> float:
    """Relative threshold below C(ct, t)/C(0, t) ~ exp(-gamma t) for every t <= t_max.

    A fixed fraction of C(0, t) otherwise tracks the diffusive phase-locking
    scale sqrt(c^2 t / gamma) instead of the cone edge c t.
    """
    return margin * math.exp(-gamma0 * t_max)


def light_cone_front(
    field: CorrelationField,
    threshold: float,
    gamma0: float,
    window: tuple[float, float] | None = None,
) -> LightConeFront:
    """Front radius per sample and its linear-fit speed.

    The radius is the largest axis distance with |C| >= threshold * C(0, t),
    averaged over the 2d axis directions. The fit uses samples with
    gamma t >= 2 unless ``window`` = (t_lo, t_hi) is given.
    """
    if not threshold > 0:
        raise ParameterError(f"threshold must be positive, got {threshold}")
    if threshold >= 1.0:
        raise NoFrontError("relative threshold >= 1 never leaves the origin")
    if not gamma0 > 0:
        raise NoFrontError("no growing modes: stable regime has no correlation front")
    d = field.lattice.dimension
    radii = np.zeros(len(field.times))
    for i in range(len(field.times)):
        c0 = field.values[i].flat[0]
        if c0 <= 0:
            continue
        r = []
        for axis in range(d):
            for sign in (1, -1):
                prof = np.abs(field.axis_profile(i, axis, sign))
                r.append(np.nonzero(prof >= threshold * c0)[0].max())
        radii[i] = np.mean(r)
    t = field.times
    lo, hi = (2.0 / gamma0, np.inf) if window is None else window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if sel.sum() < 5:
        raise ConfigurationError(f"need at least 5 samples in the fit window, have {int(sel.sum())}")
    if np.all(radii[sel] == 0):
        raise NoFrontError("front never detaches from the origin")
    slope, intercept = np.polyfit(t[sel], radii[sel], 1)
    if not slope > 0:
        raise NoFrontError(f"front does not advance (fitted speed {slope})")
    return LightConeFront(t, radii, sel, float(slope), float(intercept), threshold)


# --------------------------------------------------------------------- regions


@dataclass(frozen=True)
class Region:
    """Compact block of side ``side`` with lower corner ``origin``."""

    origin: tuple
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise GeometryError(f"region side must be >= 1, got {self.side}")
        object.__setattr__(self, "origin", tuple(int(x) for x in self.origin))

    @property
    def dimension(self) -> int:
        return len(self.origin)

    @property
    def size(self) -> int:
        return self.side**self.dimension

    @property
    def center(self) -> np.ndarray:
        return np.array(self.origin, dtype=float) + 0.5 * (self.side - 1)

    def check(self, lattice: LatticeSpec):
        if self.dimension != lattice.dimension:
            raise GeometryError("region dimension does not match lattice")
        if self.side > lattice.extent:
            raise GeometryError(f"region side {self.side} exceeds lattice extent {lattice.extent}")

    def overlaps(self, other: "Region", extent: int) -> bool:
        for a, b in zip(self.origin, other.origin):
            # interval overlap on the ring of length `extent`
            da = (b - a) % extent
            db = (a - b) % extent
            if da >= self.side and db >= other.side:
                return False
        return True


def _axis_weights(oa: int, la: int, ob: int, lb: int):
    """Multiplicities of r_mu - r_nu along one axis for mu in A, nu in B."""
    counts = np.convolve(np.ones(la, dtype=np.int64), np.ones(lb, dtype=np.int64))
    shifts = (oa - ob) + np.arange(-(lb - 1), la)
    return shifts, counts


def pair_sum(field: CorrelationField, t_index: int, a: Region, b: Region) -> float:
    """sum over mu in a, nu in b of C(r_mu - r_nu, t)."""
    L = field.lattice.extent
    C = field.values[t_index]
    total = C
    weights = []
    for axis in range(field.lattice.dimension):
        shifts, counts = _axis_weights(a.origin[axis], a.side, b.origin[axis], b.side)
        weights.append((shifts % L, counts.astype(float)))
    # contract one axis at a time in index order
    for idx, w in weights:
        total = np.tensordot(w, np.take(total, idx, axis=0), axes=(0, 0))
    return float(total)


def condensate_fraction(field: CorrelationField, region: Region, t_index: int) -> tuple[float, float]:
    """Occupation N_S = <A_S^dag A_S> of the homogeneous block mode and N_S / |S|.

    The on-site total is filling + C(0, t), so the block matrix
    delta + C stays positive semidefinite and |g1| <= 1 holds.
    """
    region.check(field.lattice)
    S = region.size
    N_S = field.filling + pair_sum(field, t_index, region, region) / S
    return N_S, N_S / S


@dataclass(frozen=True)
class PhaseCorrelation:
    g1: float
    predicted_g1: float
    distance: float
    N_S: float
    N_S_other: float


def center_distance(a: Region, b: Region, extent: int) -> float:
    d = np.array(b.center) - np.array(a.center)
    d = (d + extent / 2.0) % extent - extent / 2.0
    return float(np.sqrt(np.sum(d * d)))


def phase_correlator(
    field: CorrelationField,
    a: Region,
    b: Region,
    t_index: int,
    gamma0: float,
    c: float,
) -> PhaseCorrelation:
    """Normalised cross-coherence between two blocks and exp(-gamma dr^2 / (2 c^2 t))."""
    a.check(field.lattice)
    b.check(field.lattice)
    if a.overlaps(b, field.lattice.extent):
        raise GeometryError("phase regions overlap")
    t = float(field.times[t_index])
    if not (c > 0 and math.isfinite(c)):
        raise RegimeError("no long-wavelength cone (c^2 <= 0)")
    if max(a.side, b.side) > c * t:
        raise GeometryError(f"blocks of side {max(a.side, b.side)} exceed the cone radius c t = {c * t:.3g}")
    if t <= 0:
        raise UndefinedPhaseError("phase correlator undefined at t = 0")
    Na, _ = condensate_fraction(field, a, t_index)
    Nb, _ = condensate_fraction(field, b, t_index)
    if Na <= field.filling or Nb <= field.filling:
        raise UndefinedPhaseError("no macroscopic block occupation")
    cross = pair_sum(field, t_index, a, b) / math.sqrt(a.size * b.size)
    dist = center_distance(a, b, field.lattice.extent)
    g1 = cross / math.sqrt(Na * Nb)
    predicted = math.exp(-gamma0 * dist**2 / (2.0 * c * c * t))
    return PhaseCorrelation(g1, predicted, dist, Na, Nb)


# ------------------------------------------------------ four-point and current


def four_point(field: CorrelationField, t_index: int, mu, nu, kappa, lam) -> float:
    """<a_mu^dag a_nu^dag a_kappa a_lam> from two-point totals."""
    def pair(x, y):
        return field.total(t_index, np.subtract(x, y))

    return pair(mu, kappa) * pair(nu, lam) + pair(mu, lam) * pair(nu, kappa)


def current_correlator(gamma0, c, m_star, prefactor, t, dr, a: int, b: int) -> float:
    """Long-range current correlation between axes a and b at separation dr."""
    if not t > 0:
        raise SingularityError("current correlator diverges at t = 0")
    if a != b:
        return 0.0
    amp = gamma0 * prefactor**2 / (2.0 * t * (m_star * c) ** 2)
    return amp * math.exp(2.0 * gamma0 * t - gamma0 * float(dr) ** 2 / (c * c * t))


# ---------------------------------------------------------------------- Bessel


@dataclass(frozen=True)
class BesselProfile:
    k_star: float
    gamma_star: float
    t: float
    prefactor: float
    center_value: float

    def __call__(self, r):
        return self.prefactor * math.exp(self.gamma_star * self.t) * j0(self.k_star * np.asarray(r, dtype=float))

    def normalized(self, r):
        return j0(self.k_star * np.asarray(r, dtype=float))

    @property
    def first_zero(self) -> float:
        return FIRST_ZERO / self.k_star


def bessel_profile(params: QuenchParams, grid: ModeGrid, t: float) -> BesselProfile:
    """Factorised growth N_*(t) exp(gamma_* t) J0(k_* |dr|) for a finite-k_* quench.

    N_* is calibrated from the exact on-site value C(0, t).
    """
    report = classify_regime(params, grid)
    if not report.k_star > 0:
        raise RegimeError(f"regime {report.regime} has no finite fastest-growing wavenumber")
    if report.gamma_star * t < 3.0:
        raise ParameterError(f"gamma_* t = {report.gamma_star * t:.3g} < 3")
    c0 = float(np.mean(kernel_closed_form(params, grid.structure, t)))
    prefactor = c0 * math.exp(-report.gamma_star * t)
    return BesselProfile(report.k_star, report.gamma_star, t, prefactor, c0)
