"""Post-quench dispersion, regime classification and long-wavelength parameters.

Units: hbar = 1, lattice spacing = 1. ``U`` and ``J`` are energies, times are
1/energy, and ``c`` is a velocity in lattice units times energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ParameterError
from .lattice import LatticeSpec, ModeGrid, effective_mass, structure_factor

SQRT8 = math.sqrt(8.0)

MOTT_STABLE = "MOTT_STABLE"
SF_ZONE_CENTER = "SF_ZONE_CENTER"
SF_FINITE_K = "SF_FINITE_K"
SF_BAND = "SF_BAND"


def omega_squared(U, J, T):
    """U^2 - 6 J U T + J^2 T^2; negative values mark growing modes."""
    T = np.asarray(T, dtype=float)
    return U * U - 6.0 * J * U * T + J * J * T * T


def critical_couplings(U: float) -> tuple[float, float]:
    """Zeros J_- < J_+ of omega^2 at T = 1; J_- is the critical point J_cr."""
    if not U > 0:
        raise ParameterError(f"U must be positive, got {U}")
    j_minus = U * (3.0 - SQRT8)
    j_plus = U * (3.0 + SQRT8)
    return j_minus, j_plus


def critical_couplings_by_root(U: float) -> tuple[float, float]:
    """Root-find omega^2(U, J, T=1) = 0 in J; independent check of the closed form."""
    if not U > 0:
        raise ParameterError(f"U must be positive, got {U}")
    f = lambda J: float(omega_squared(U, J, 1.0))
    lo = brentq(f, 0.0, 3.0 * U, xtol=1e-15 * U, rtol=4 * np.finfo(float).eps)
    hi = brentq(f, 3.0 * U, 6.0 * U, xtol=1e-15 * U, rtol=4 * np.finfo(float).eps)
    return lo, hi


@dataclass(frozen=True, eq=False)
class QuenchParams:
    U: float
    J: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(1), repr=False)

    def __post_init__(self):
        if not self.U > 0:
            raise ParameterError(f"U must be positive, got {self.U}")
        if not self.J >= 0:
            raise ParameterError(f"J must be non-negative, got {self.J}")
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if t.size == 0 or t[0] != 0.0:
            raise ConfigurationError("time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ConfigurationError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def from_epsilon(cls, U: float, epsilon: float, times=None) -> "QuenchParams":
        """Quench to J = J_cr (1 + epsilon)."""
        j_cr, _ = critical_couplings(U)
        kwargs = {} if times is None else {"times": times}
        return cls(U, j_cr * (1.0 + epsilon), **kwargs)

    @property
    def J_minus(self) -> float:
        return critical_couplings(self.U)[0]

    @property
    def J_plus(self) -> float:
        return critical_couplings(self.U)[1]

    @property
    def J_cr(self) -> float:
        return self.J_minus

    @property
    def epsilon(self) -> float:
        return self.J / self.J_cr - 1.0

    def with_times(self, times) -> "QuenchParams":
        return QuenchParams(self.U, self.J, times)


def uniform_times(t_max: float, samples: int) -> np.ndarray:
    if not t_max > 0:
        raise ConfigurationError(f"t_max must be positive, got {t_max}")
    if samples < 2:
        raise ConfigurationError(f"need at least 2 samples, got {samples}")
    return np.linspace(0.0, t_max, samples)


def growth_rate_profile(params: QuenchParams, grid: ModeGrid) -> np.ndarray:
    """gamma_k = sqrt(max(0, -omega_k^2)) on every grid point."""
    w2 = omega_squared(params.U, params.J, grid.structure)
    return np.sqrt(np.maximum(0.0, -w2))


@dataclass(frozen=True)
class LongWavelength:
    gamma0: float
    c_squared: float
    c_squared_fd: float
    c_squared_alt: float
    stable: bool

    @property
    def has_cone(self) -> bool:
        return self.c_squared > 0

    @property
    def c(self) -> float:
        return math.sqrt(self.c_squared) if self.c_squared > 0 else math.nan


def omega_squared_curvature_fd(params: QuenchParams, lattice: LatticeSpec, step: float = 1e-4) -> float:
    """(1/2) d^2 omega^2 / dk^2 at k = 0 along the first axis by central differences."""
    k = np.zeros((3, lattice.dimension))
    k[0, 0], k[2, 0] = -step, step
    w2 = omega_squared(params.U, params.J, structure_factor(lattice, k))
    return 0.5 * (w2[0] - 2.0 * w2[1] + w2[2]) / step**2


def long_wavelength_params(params: QuenchParams, lattice: LatticeSpec) -> LongWavelength:
    """Zone-centre growth rate and velocity scale of omega_k^2 ~ -(gamma^2 - c^2 k^2).

    ``c_squared`` is the curvature of the implemented dispersion,
    J (3U - J) / m*. ``c_squared_alt`` carries the alternative
    3J (U - J) / m*, which agrees only for J << U; it is reported, never used.
    """
    U, J = params.U, params.J
    m_star = effective_mass(lattice)
    w2_0 = float(omega_squared(U, J, 1.0))
    stable = not (w2_0 < 0.0 and J > params.J_cr)
    gamma0 = 0.0 if stable else math.sqrt(-w2_0)
    return LongWavelength(
        gamma0=gamma0,
        c_squared=J * (3.0 * U - J) / m_star,
        c_squared_fd=omega_squared_curvature_fd(params, lattice),
        c_squared_alt=3.0 * J * (U - J) / m_star,
        stable=stable,
    )


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    k_cr: float | None
    k_star: float
    gamma_star: float
    gamma0: float
    c: float
    c_squared: float
    notes: dict = field(default_factory=dict)


def _k_critical(w2: np.ndarray, grid: ModeGrid) -> float | None:
    """First sign change of omega^2 along the first zone axis, linearly interpolated in |k|."""
    L = grid.lattice.extent
    along = np.array([w2[grid.axis_index(m)] for m in range(L // 2 + 1)])
    kk = 2.0 * np.pi * np.arange(L // 2 + 1) / L
    neg = along < 0
    for m in range(len(along) - 1):
        if neg[m] != neg[m + 1]:
            a, b = along[m], along[m + 1]
            return float(kk[m] + (kk[m + 1] - kk[m]) * a / (a - b))
    return None


def classify_regime(params: QuenchParams, grid: ModeGrid) -> RegimeReport:
    w2 = omega_squared(params.U, params.J, grid.structure)
    gamma = np.sqrt(np.maximum(0.0, -w2))
    kmag = grid.kmag()
    lw = long_wavelength_params(params, grid.lattice)
    origin = (0,) * grid.lattice.dimension
    notes = {
        "finite_k_threshold_text": "J > U",
        "finite_k_threshold_dispersion": "J >= 3U (interior maximum of 8U^2 - (J T - 3U)^2)",
        "c_squared_alt": lw.c_squared_alt,
        "c_squared_fd": lw.c_squared_fd,
    }

    if np.all(w2 >= 0.0):
        return RegimeReport(MOTT_STABLE, None, 0.0, 0.0, 0.0, lw.c if lw.has_cone else math.nan, lw.c_squared, notes)

    # global (gamma desc, |k| asc) reduction; near-equal rates on one shell count as ties
    g_max = float(gamma.max())
    candidates = gamma >= g_max * (1.0 - 1e-12)
    k_star = float(kmag[candidates].min())
    gamma0 = float(gamma[origin])
    if w2[origin] < 0.0:
        regime = SF_ZONE_CENTER if k_star == 0.0 else SF_FINITE_K
    else:
        regime = SF_BAND
    return RegimeReport(
        regime=regime,
        k_cr=_k_critical(w2, grid),
        k_star=k_star,
        gamma_star=g_max,
        gamma0=gamma0,
        c=lw.c if lw.has_cone else math.nan,
        c_squared=lw.c_squared,
        notes=notes,
    )


def saddle_exponent(gamma, c, t, r):
    """gamma * sqrt(t^2 - r^2/c^2), the dominant exponent inside the cone."""
    return gamma * np.sqrt(np.maximum(0.0, np.asarray(t) ** 2 - np.asarray(r) ** 2 / c**2))


def scaling_transform(gamma0, c, t, r, lam):
    """(gamma, t, r) -> (lam gamma, t/lam, r/lam); c is unchanged."""
    if not lam > 0:
        raise ParameterError(f"scaling factor must be positive, got {lam}")
    return lam * gamma0, t / lam, r / lam
