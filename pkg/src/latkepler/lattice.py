"""Closed-form physics of a particle hopping on an orthorhombic lattice.

Units are adimensional with hbar = 1, so quasimomentum and momentum coincide
and energies are angular frequencies.  All vectors are 3-vectors; a 2-D lattice
simply keeps its third axis frozen (no hopping along z).

The kinetic energy of the single tight-binding band is

    T(k) = sum_i 2 J_i (1 - cos(a_i k_i))

and its continuum counterpart ``k_i**2 / (2 m_i)`` with ``1/m_i = 2 J_i a_i**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import optimize

from .errors import (
    DomainError,
    NoRootError,
    SingularPotentialError,
    ZeroHoppingError,
)

Kind = Literal["lattice", "continuum"]
AXES = {"x": 0, "y": 1, "z": 2}


def as_vec3(v) -> tuple[float, float, float]:
    """Pad a 1-, 2- or 3-sequence with zeros to a float 3-tuple."""
    v = [float(x) for x in np.atleast_1d(np.asarray(v, dtype=float))]
    if not 1 <= len(v) <= 3:
        raise ValueError(f"expected 1 to 3 components, got {len(v)}")
    return tuple(v + [0.0] * (3 - len(v)))


@dataclass(frozen=True)
class LatticeParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    A: float = 1.0
    B: float = 1.0
    C: float = 1.0
    dims: int = 2
    kind: Kind = "lattice"

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("lattice constants must be positive")
        if min(self.A, self.B, self.C) < 0:
            raise ValueError("hopping energies must be non-negative")
        if self.dims not in (1, 2, 3):
            raise ValueError(f"dims must be 1, 2 or 3, got {self.dims}")
        if self.kind not in ("lattice", "continuum"):
            raise ValueError(f"unknown dispersion kind {self.kind!r}")
        for name in ("a", "b", "c", "A", "B", "C"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def constants(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def hoppings(self) -> np.ndarray:
        """Hopping per axis, zero on axes beyond ``dims``."""
        h = np.array([self.A, self.B, self.C])
        h[self.dims:] = 0.0
        return h

    @property
    def inverse_masses(self) -> np.ndarray:
        return 2.0 * self.hoppings * self.constants**2

    def as_continuum(self) -> "LatticeParams":
        return replace(self, kind="continuum")

    def scaled(self, factor: float) -> "LatticeParams":
        """Shrink the lattice constants by ``factor`` at fixed effective masses."""
        return replace(
            self,
            a=self.a * factor, b=self.b * factor, c=self.c * factor,
            A=self.A / factor**2, B=self.B / factor**2, C=self.C / factor**2,
        )


@dataclass(frozen=True)
class CoulombSource:
    """Attractive point source ``V(r) = -V1 / sqrt(|r - position|**2 + epsilon**2)``."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    V1: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position))
        if self.epsilon < 0:
            raise ValueError("softening length must be >= 0")

    def _offset(self, r):
        d = np.asarray(r, dtype=float) - np.asarray(self.position)
        rho2 = np.sum(d * d, axis=-1) + self.epsilon**2
        if self.V1 != 0.0 and np.any(rho2 == 0.0):
            raise SingularPotentialError(
                "position coincides with the unsoftened Coulomb source"
            )
        return d, rho2

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        if self.V1 == 0.0:
            return np.zeros(r.shape[:-1])
        _, rho2 = self._offset(r)
        return -self.V1 / np.sqrt(rho2)

    def kdot(self, r):
        """Force (rate of quasimomentum), pointing towards the source for V1 > 0."""
        r = np.asarray(r, dtype=float)
        if self.V1 == 0.0:
            return np.zeros(r.shape)
        d, rho2 = self._offset(r)
        return -self.V1 * d / (rho2 * np.sqrt(rho2))[..., None]


@dataclass(frozen=True)
class UniformField:
    """Linear test potential ``V(r) = gradient . (r - position)``.

    Not a physical scenario of the model; it exists because a constant force
    has a closed-form Bloch-oscillation solution to test against.
    """

    gradient: tuple[float, float, float] = (0.0, 0.0, 0.0)
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "gradient", as_vec3(self.gradient))
        object.__setattr__(self, "position", as_vec3(self.position))

    def potential(self, r):
        d = np.asarray(r, dtype=float) - np.asarray(self.position)
        return d @ np.asarray(self.gradient)

    def kdot(self, r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(-np.asarray(self.gradient), r.shape).copy()


@dataclass(frozen=True)
class PhaseState:
    r: tuple[float, float, float] = (0.0, 0.0, 0.0)
    k: tuple[float, float, float] = (0.0, 0.0, 0.0)
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "r", as_vec3(self.r))
        object.__setattr__(self, "k", as_vec3(self.k))

    def wrapped(self, lat: LatticeParams) -> "PhaseState":
        """Same state with k mapped into the first Brillouin zone."""
        if lat.kind == "continuum":
            return self
        return replace(self, k=tuple(wrap_k(self.k, lat)))


def wrap_k(k, lat: LatticeParams) -> np.ndarray:
    """Canonical representative of k in [-pi/a_i, pi/a_i) per axis."""
    k = np.asarray(k, dtype=float)
    g = 2.0 * np.pi / lat.constants
    return k - g * np.floor((k + 0.5 * g) / g)


def kinetic_energy(k, lat: LatticeParams):
    k = np.asarray(k, dtype=float)
    if lat.kind == "continuum":
        return 0.5 * np.sum(lat.inverse_masses * k * k, axis=-1)
    # 2 J (1 - cos x) written as 4 J sin(x/2)**2, which keeps full precision for small x.
    return np.sum(4.0 * lat.hoppings * np.sin(0.5 * lat.constants * k) ** 2, axis=-1)


def group_velocity(k, lat: LatticeParams) -> np.ndarray:
    """dT/dk: ``2 J a sin(a k)`` per axis on the lattice, ``k/m`` in the continuum."""
    k = np.asarray(k, dtype=float)
    if lat.kind == "continuum":
        return lat.inverse_masses * k
    return 2.0 * lat.hoppings * lat.constants * np.sin(lat.constants * k)


def hamiltonian_value(state: PhaseState, lat: LatticeParams, src) -> float:
    return float(kinetic_energy(state.k, lat) + src.potential(state.r))


def coulomb_kdot(r, src) -> np.ndarray:
    return src.kdot(r)


def lz(state: PhaseState, src) -> float:
    """Planar angular momentum about the source position."""
    return float(lz_series(state.r, state.k, src.position))


def lz_series(r, k, origin=(0.0, 0.0, 0.0)):
    d = np.asarray(r, dtype=float) - np.asarray(as_vec3(origin))
    k = np.asarray(k, dtype=float)
    return d[..., 0] * k[..., 1] - d[..., 1] * k[..., 0]


def lz_rate(state: PhaseState, lat: LatticeParams) -> float:
    """Time derivative of lz under a central force.

    The torque term vanishes for forces aimed at the source, leaving
    ``v_x k_y - v_y k_x``; on the lattice this is
    ``2 (a A k_y sin(a k_x) - b B k_x sin(b k_y))``.
    """
    return float(lz_rate_series(state.k, lat))


def lz_rate_series(k, lat: LatticeParams):
    k = np.asarray(k, dtype=float)
    v = group_velocity(k, lat)
    return v[..., 0] * k[..., 1] - v[..., 1] * k[..., 0]


def effective_mass(lat: LatticeParams, axis=0) -> float:
    i = AXES.get(axis, axis) if isinstance(axis, str) else int(axis)
    hop = (lat.A, lat.B, lat.C)[i]
    const = (lat.a, lat.b, lat.c)[i]
    if hop <= 0:
        raise ZeroHoppingError(f"zero hopping on axis {i}: effective mass is infinite")
    return 1.0 / (2.0 * hop * const**2)


def wolf_hopping(d, a0=1.0):
    """Hopping energy for nearest neighbours separated by ``d``, in Bohr radii ``a0``."""
    u = np.asarray(d, dtype=float) / a0
    out = 2.0 * (1.0 + u) * np.exp(-u)
    return float(out) if out.ndim == 0 else out


def _anisotropy_objective(beta, target):
    return wolf_hopping(beta) * beta**2 - target


def solve_anisotropy_roots(xi: float, a_over_a0: float, scan_points: int = 2000):
    """All roots in (0, 10 a/a0] of ``xi A(a) a**2 = B(b) b**2`` for b/a0."""
    if xi <= 0 or a_over_a0 <= 0:
        raise ValueError("xi and a/a0 must be positive")
    target = xi * wolf_hopping(a_over_a0) * a_over_a0**2
    hi = 10.0 * a_over_a0
    grid = np.geomspace(hi * 1e-9, hi, scan_points)
    f = _anisotropy_objective(grid, target)
    roots = []
    for i in np.flatnonzero(f[:-1] * f[1:] <= 0):
        if f[i] == 0.0:
            roots.append(float(grid[i]))
            continue
        roots.append(optimize.bisect(
            _anisotropy_objective, grid[i], grid[i + 1], args=(target,), xtol=1e-13,
            rtol=4 * np.finfo(float).eps,
        ))
    return sorted(set(roots))


def solve_anisotropy(xi: float, a_over_a0: float) -> float:
    """Smallest b/a0 giving mass anisotropy ``xi = B b**2 / (A a**2)``.

    Hoppings follow ``wolf_hopping``.  For xi = 2.94 and a/a0 = 9.5 this is
    about 0.477.
    """
    roots = solve_anisotropy_roots(xi, a_over_a0)
    if not roots:
        raise NoRootError(f"no root for xi={xi}, a/a0={a_over_a0} in (0, {10 * a_over_a0}]")
    return roots[0]


def continuum_matched_k(k_cont: float, a: float) -> float:
    """Lattice quasimomentum with the same kinetic energy as continuum ``k_cont``.

    Solves ``2A(1 - cos(a k)) = k_cont**2 / (2m)`` with ``1/m = 2 A a**2``.
    ``arccos(1 - a**2 k**2 / 2)`` is evaluated as ``2 arcsin(a k / 2)`` to keep
    precision when ``a k`` is small.  The sign of ``k_cont`` is kept.
    """
    half = 0.5 * a * k_cont
    if abs(half) > 1.0:
        raise DomainError(f"|a k_cont| = {abs(a * k_cont):g} exceeds 2: no lattice match")
    return 2.0 * math.asin(half) / a


def lattice_to_continuum_k(k: float, a: float) -> float:
    """Inverse of ``continuum_matched_k`` on the first half zone."""
    return 2.0 * math.sin(0.5 * a * k) / a


__all__ = [
    "LatticeParams", "CoulombSource", "UniformField", "PhaseState", "as_vec3",
    "wrap_k", "kinetic_energy", "group_velocity", "hamiltonian_value",
    "coulomb_kdot", "lz", "lz_series", "lz_rate", "lz_rate_series",
    "effective_mass", "wolf_hopping", "solve_anisotropy", "solve_anisotropy_roots",
    "continuum_matched_k", "lattice_to_continuum_k",
]
