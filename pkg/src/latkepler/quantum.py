"""Wannier-coefficient wavepackets and split-operator propagation.

The wavepacket is the array ``C[n1, ..., nd]`` of amplitudes on a periodic
block of lattice sites.  Site ``n`` along axis ``i`` sits at coordinate
``(n - origin_index[i]) * a_i``.  One step is

    C <- e^{-i V dt/2} F^-1[ e^{-i T(k) dt} F[ e^{-i V dt/2} C ] ]

with unitary (``norm="ortho"``) FFTs, so the step is unitary by construction.
Reciprocal points are ``k_j = 2 pi j / (N a)``, j in [-N/2, N/2), stored in
FFT order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.fft as sfft

from . import observables as obs
from .errors import BoundaryContaminationError, GridTooSmallError, NonFiniteError
from .lattice import CoulombSource, LatticeParams, UniformField, as_vec3, kinetic_energy

DEFAULT_DT = 1e-4
DEFAULT_SIGMA = 4.0
DEFAULT_MARGIN = 2
DEFAULT_BOUNDARY_THRESHOLD = 1e-4
DEFAULT_SHAPES = {1: (512,), 2: (512, 512), 3: (128, 128, 128)}


@dataclass(frozen=True)
class GridSpec:
    shape: tuple[int, ...]
    lattice: LatticeParams
    origin_index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "origin_index", tuple(int(n) for n in self.origin_index))
        if len(self.shape) != self.lattice.dims:
            raise ValueError(f"grid has {len(self.shape)} axes but lattice dims = {self.lattice.dims}")
        if len(self.origin_index) != len(self.shape):
            raise ValueError("origin_index must have one entry per axis")
        if min(self.shape) < 2:
            raise ValueError("need at least 2 sites per axis")

    @classmethod
    def centered(cls, shape: Sequence[int], lattice: LatticeParams, center) -> "GridSpec":
        """Grid whose middle site lies on (or next to) ``center``."""
        consts = lattice.constants
        origin = [n // 2 - int(round(c / consts[i])) for i, (n, c) in enumerate(zip(shape, center))]
        return cls(tuple(shape), lattice, tuple(origin))

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, axis: int) -> np.ndarray:
        a = self.lattice.constants[axis]
        return (np.arange(self.shape[axis]) - self.origin_index[axis]) * a

    def extent(self, axis: int) -> tuple[float, float]:
        x = self.axis_coords(axis)
        return float(x[0]), float(x[-1])

    def coords(self) -> np.ndarray:
        """Site positions as 3-vectors, shape ``(*shape, 3)``."""
        axes = [self.axis_coords(i) for i in range(self.dims)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.zeros(self.shape + (3,))
        for i, m in enumerate(mesh):
            out[..., i] = m
        return out

    def wavenumbers(self, axis: int) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.shape[axis], d=self.lattice.constants[axis])

    def kinetic(self) -> np.ndarray:
        """T(k) on the reciprocal grid (FFT order)."""
        total = np.zeros(self.shape)
        for i in range(self.dims):
            kvec = np.zeros((self.shape[i], 3))
            kvec[:, i] = self.wavenumbers(i)
            t_axis = kinetic_energy(kvec, self.lattice)
            total += t_axis.reshape([-1 if j == i else 1 for j in range(self.dims)])
        return total

    def potential(self, src) -> np.ndarray:
        return potential_on_sites(self, src)


@dataclass
class WaveGrid:
    spec: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != self.spec.shape:
            raise ValueError(f"coefficients shape {self.coefficients.shape} != grid {self.spec.shape}")

    @property
    def dims(self) -> int:
        return self.spec.dims

    def copy(self) -> "WaveGrid":
        return WaveGrid(self.spec, self.coefficients.copy())

    def density(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density()))

    def normalized(self) -> "WaveGrid":
        return WaveGrid(self.spec, self.coefficients / np.sqrt(self.norm()))

    @classmethod
    def plane_wave(cls, spec: GridSpec, index: Sequence[int]) -> "WaveGrid":
        """Normalized single reciprocal-grid mode; ``index`` counts in FFT order."""
        c_hat = np.zeros(spec.shape, dtype=complex)
        c_hat[tuple(index)] = 1.0
        return cls(spec, sfft.ifftn(c_hat, norm="ortho"))


def potential_on_sites(spec: GridSpec, src) -> np.ndarray:
    """Potential energy at every site.

    Coulomb sources are softened by their ``epsilon``; with ``epsilon = 0`` a
    site on the source gets ``-inf``, which the propagator reports as a
    non-finite state.
    """
    r = spec.coords()
    if isinstance(src, CoulombSource):
        if src.V1 == 0.0:
            return np.zeros(spec.shape)
        d = r - np.asarray(src.position)
        rho2 = np.sum(d * d, axis=-1) + src.epsilon**2
        with np.errstate(divide="ignore"):
            return -src.V1 / np.sqrt(rho2)
    if isinstance(src, UniformField):
        return src.potential(r)
    raise TypeError(f"unsupported source type {type(src).__name__}")


def init_gaussian(spec: GridSpec, center, k0, sigma: float = DEFAULT_SIGMA,
                  check_width: bool = True) -> WaveGrid:
    """Normalized Gaussian ``exp(-|r - center|**2 / (4 sigma**2) + i k0 . r)``.

    ``sigma`` is the standard deviation of the site density.  The centre must
    sit at least ``4 sigma`` from every edge of the grid, and (unless
    ``check_width`` is off) ``sigma`` must be at least two lattice constants.
    """
    d = spec.dims
    center = np.asarray(as_vec3(center))[:d]
    k0 = np.asarray(as_vec3(k0))[:d]
    consts = spec.lattice.constants[:d]
    if check_width and sigma < 2.0 * consts.max():
        raise ValueError(f"sigma = {sigma:g} is below two lattice constants ({2 * consts.max():g})")
    for i in range(d):
        lo, hi = spec.extent(i)
        if center[i] - 4 * sigma < lo or center[i] + 4 * sigma > hi:
            raise GridTooSmallError(
                f"axis {i}: packet at {center[i]:g} with 4 sigma = {4 * sigma:g} "
                f"does not fit in [{lo:g}, {hi:g}]"
            )
    amp = np.ones(())
    for i in range(d):
        x = spec.axis_coords(i)
        factor = np.exp(-((x - center[i]) ** 2) / (4 * sigma**2) + 1j * k0[i] * x)
        amp = np.multiply.outer(amp, factor)
    psi = WaveGrid(spec, amp)
    return psi.normalized()


def boundary_mass(psi: WaveGrid, margin: int = DEFAULT_MARGIN) -> float:
    """Probability on sites within ``margin`` sites of any grid edge."""
    if margin < 1:
        raise ValueError("margin must be >= 1")
    mask = np.zeros(psi.spec.shape, dtype=bool)
    for i, n in enumerate(psi.spec.shape):
        edge = np.zeros(n, dtype=bool)
        edge[:margin] = True
        edge[-margin:] = True
        mask |= edge.reshape([-1 if j == i else 1 for j in range(psi.dims)])
    return float(np.sum(psi.density()[mask]))


class SplitOperator:
    """Precomputed phase factors for repeated Strang steps at fixed ``dt``."""

    def __init__(self, spec: GridSpec, dt: float, src):
        self.spec = spec
        self.dt = float(dt)
        self.potential = potential_on_sites(spec, src)
        with np.errstate(invalid="ignore"):
            self.half_v = np.exp(-0.5j * dt * self.potential)
        self.kin = np.exp(-1j * dt * spec.kinetic())

    def step_inplace(self, c: np.ndarray) -> np.ndarray:
        c *= self.half_v
        c = sfft.fftn(c, norm="ortho", overwrite_x=True)
        c *= self.kin
        c = sfft.ifftn(c, norm="ortho", overwrite_x=True)
        c *= self.half_v
        return c

    def __call__(self, psi: WaveGrid) -> WaveGrid:
        c = self.step_inplace(psi.coefficients.copy())
        if not np.isfinite(np.vdot(c, c)):
            raise NonFiniteError("non-finite coefficients after split step")
        return WaveGrid(psi.spec, c)


def split_step(psi: WaveGrid, dt: float, src) -> WaveGrid:
    """One second-order split-operator step of length ``dt``."""
    return SplitOperator(psi.spec, dt, src)(psi)


@dataclass
class PropagationLog:
    t: np.ndarray
    norm: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    energy: np.ndarray
    boundary_mass: np.ndarray
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def moments(self, i: int) -> obs.MomentSet:
        return obs.MomentSet(float(self.norm[i]), self.z[i], self.sigma[i], self.s[i])


Observer = Callable[[WaveGrid, float], object]


def propagate(psi: WaveGrid, dt: float, n_steps: int, src,
              observers: Mapping[str, Observer] | None = None,
              sample_every: int = 100, margin: int = DEFAULT_MARGIN,
              boundary_threshold: float = DEFAULT_BOUNDARY_THRESHOLD,
              t0: float = 0.0, energy: bool = True) -> tuple[WaveGrid, PropagationLog]:
    """Apply ``n_steps`` split steps, sampling every ``sample_every`` steps.

    Each sample records the moments, energy and boundary mass plus the output
    of every ``observers[name](psi, t)``.  The run aborts with
    :class:`BoundaryContaminationError` once the boundary mass exceeds
    ``boundary_threshold``.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    observers = dict(observers or {})
    op = SplitOperator(psi.spec, dt, src)
    rows: dict[str, list] = {k: [] for k in ("t", "norm", "z", "sigma", "s", "energy", "bmass")}
    extra: dict[str, list] = {name: [] for name in observers}

    def record(grid: WaveGrid, step: int):
        t = t0 + step * dt
        m = obs.moments(grid)
        if not np.isfinite(m.norm):
            raise NonFiniteError(f"non-finite coefficients at t = {t:.6g}")
        bm = boundary_mass(grid, margin)
        rows["t"].append(t)
        rows["norm"].append(m.norm)
        rows["z"].append(m.z)
        rows["sigma"].append(m.sigma)
        rows["s"].append(m.s)
        rows["energy"].append(obs.energy_expectation(grid, src) if energy else np.nan)
        rows["bmass"].append(bm)
        for name, fn in observers.items():
            extra[name].append(fn(grid, t))
        if bm > boundary_threshold:
            raise BoundaryContaminationError(
                f"boundary mass {bm:.3g} exceeds {boundary_threshold:g} at t = {t:.6g}"
            )

    c = psi.coefficients.copy()
    record(psi, 0)
    for step in range(1, n_steps + 1):
        c = op.step_inplace(c)
        if step % sample_every == 0:
            # Observers may keep the grid, so they must not see later in-place steps.
            record(WaveGrid(psi.spec, c.copy() if observers else c), step)
    final = WaveGrid(psi.spec, c)
    if not np.isfinite(np.vdot(c, c)):
        raise NonFiniteError("non-finite coefficients at end of propagation")
    d = psi.dims
    log = PropagationLog(
        t=np.asarray(rows["t"]),
        norm=np.asarray(rows["norm"]),
        z=np.asarray(rows["z"]).reshape(-1, d),
        sigma=np.asarray(rows["sigma"]).reshape(-1, d),
        s=np.asarray(rows["s"]).reshape(-1, d),
        energy=np.asarray(rows["energy"]),
        boundary_mass=np.asarray(rows["bmass"]),
        extra=extra,
    )
    return final, log
