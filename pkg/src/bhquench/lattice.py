"""Periodic hypercubic lattices, tunneling patterns and the structure factor T_k.

Lengths are in units of the lattice spacing. Every hopping in the pattern
carries weight 1, so the tunneling matrix is the 0/1 adjacency matrix of the
offset list and ``Z`` is its row sum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import AnisotropyError, ConfigurationError, GeometryError

TWO_PI = 2.0 * np.pi
PATTERNS = ("nn", "range")
ANISOTROPY_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    extent: int
    neighbor_offsets: tuple
    pattern: str = "nn"
    radius: int = 1

    def __post_init__(self):
        offsets = {tuple(o) for o in self.neighbor_offsets}
        if len(offsets) != len(self.neighbor_offsets):
            raise GeometryError("duplicate neighbor offsets")
        if (0,) * self.dimension in offsets:
            raise GeometryError("zero offset is not a tunneling partner")
        for o in offsets:
            if len(o) != self.dimension:
                raise GeometryError(f"offset {o} has wrong dimension")
            if tuple(-x for x in o) not in offsets:
                raise GeometryError(f"offsets not closed under negation: {o}")
            if any(2 * abs(x) >= self.extent for x in o):
                raise GeometryError(f"offset {o} does not fit in periodic extent {self.extent}")
        if len(offsets) < 2:
            raise GeometryError("coordination number must be at least 2")

    @property
    def Z(self) -> int:
        return len(self.neighbor_offsets)

    @property
    def n_sites(self) -> int:
        return self.extent**self.dimension

    @property
    def shape(self) -> tuple:
        return (self.extent,) * self.dimension

    def offsets_array(self) -> np.ndarray:
        return np.array(self.neighbor_offsets, dtype=np.int64).reshape(self.Z, self.dimension)


def build_lattice(dimension: int, extent: int, pattern: str = "nn", radius: int = 1) -> LatticeSpec:
    """Build a periodic L^d lattice.

    ``pattern="nn"`` couples the 2d nearest neighbours; ``pattern="range"``
    couples every site within Chebyshev distance ``radius`` (a filled block of
    side 2R+1 minus the centre).
    """
    if dimension < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {dimension}")
    if extent < 4:
        raise ConfigurationError(f"extent must be >= 4, got {extent}")
    if pattern not in PATTERNS:
        raise ConfigurationError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")

    if pattern == "nn":
        radius = 1
        offsets = []
        for axis in range(dimension):
            for sign in (1, -1):
                o = [0] * dimension
                o[axis] = sign
                offsets.append(tuple(o))
    else:
        if radius < 1:
            raise ConfigurationError(f"range radius must be >= 1, got {radius}")
        if 2 * radius >= extent:
            raise GeometryError(f"radius {radius} >= extent/2 = {extent / 2}")
        span = range(-radius, radius + 1)
        offsets = [o for o in itertools.product(span, repeat=dimension) if any(o)]
    return LatticeSpec(dimension, extent, tuple(offsets), pattern, radius)


def structure_factor(lattice: LatticeSpec, k) -> np.ndarray:
    """(1/Z) sum over offsets of cos(k . dr).

    ``k`` has shape ``(..., d)``; the result has shape ``k.shape[:-1]``.
    """
    k = np.mod(np.asarray(k, dtype=float), TWO_PI)
    if k.shape[-1] != lattice.dimension:
        raise ValueError(f"wavevector must have last axis {lattice.dimension}")
    total = np.zeros(k.shape[:-1])
    for o in lattice.neighbor_offsets:
        # explicit per-axis products keep the rounding identical for scalar and batched calls
        phase = np.zeros(k.shape[:-1])
        for axis, x in enumerate(o):
            if x:
                phase = phase + k[..., axis] * x
        total = total + np.cos(phase)
    return total / lattice.Z


def axis_curvatures(lattice: LatticeSpec) -> np.ndarray:
    """Second moments sum(dr_i dr_j) of the offset list."""
    off = lattice.offsets_array().astype(float)
    return off.T @ off


def effective_mass(lattice: LatticeSpec) -> float:
    """m* from T_k = 1 - k^2/(2 m*), i.e. m* = d Z / sum |dr|^2."""
    moments = axis_curvatures(lattice)
    diag = np.diag(moments)
    scale = diag.max()
    off_diag = moments - np.diag(diag)
    if np.ptp(diag) > ANISOTROPY_TOL * scale or np.abs(off_diag).max(initial=0.0) > ANISOTROPY_TOL * scale:
        raise AnisotropyError(f"pattern is anisotropic: second moments {moments.tolist()}")
    return lattice.dimension * lattice.Z / float(diag.sum())


def tunneling_matrix(lattice: LatticeSpec) -> np.ndarray:
    """Dense 0/1 matrix T_{mu nu} over sites in C (row-major) order."""
    n = lattice.n_sites
    coords = np.array(list(np.ndindex(*lattice.shape)), dtype=np.int64)
    strides = lattice.extent ** np.arange(lattice.dimension - 1, -1, -1)
    T = np.zeros((n, n))
    for o in lattice.offsets_array():
        target = np.mod(coords + o, lattice.extent) @ strides
        T[np.arange(n), target] = 1.0
    return T


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Reciprocal grid k = 2 pi m / L in FFT order with T_k stored per point."""

    lattice: LatticeSpec
    wavevectors: np.ndarray = field(repr=False)
    structure: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple:
        return self.structure.shape

    @property
    def size(self) -> int:
        return self.structure.size

    def centered_wavevectors(self) -> np.ndarray:
        """Wavevectors folded into (-pi, pi]."""
        k = self.wavevectors
        return np.where(k > np.pi, k - TWO_PI, k)

    def kmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.centered_wavevectors() ** 2, axis=-1))

    def axis_index(self, m: int) -> tuple:
        """Grid index of the point m steps along the first reciprocal axis."""
        return (m % self.lattice.extent,) + (0,) * (self.lattice.dimension - 1)


def mode_grid(lattice: LatticeSpec) -> ModeGrid:
    L, d = lattice.extent, lattice.dimension
    axis = TWO_PI * np.arange(L) / L
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    k = np.stack(mesh, axis=-1)
    T = structure_factor(lattice, k)
    k.setflags(write=False)
    T.setflags(write=False)
    return ModeGrid(lattice, k, T)
