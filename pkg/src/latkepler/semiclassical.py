"""Semiclassical (Hamilton-equation) dynamics with fixed-step RK4.

The state is ``y = (r, k)``; ``r' = dT/dk`` and ``k' = -dV/dr``.  The inner
loop is compiled with numba because a single orbit of the reference scenarios
takes close to a million steps at the default ``dt = 1e-4``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numba
import numpy as np

from . import lattice as lm
from .errors import SingularityApproachError
from .lattice import CoulombSource, LatticeParams, PhaseState, UniformField

DEFAULT_DT = 1e-4
DEFAULT_SAMPLE_EVERY = 100
DEFAULT_EPS_MIN = 1e-6


@numba.njit(cache=True)
def _rhs(y, out, consts, hops, inv_mass, continuum, coulomb, pos, V1, eps2, grad):
    for i in range(3):
        if continuum:
            out[i] = inv_mass[i] * y[3 + i]
        else:
            out[i] = 2.0 * hops[i] * consts[i] * np.sin(consts[i] * y[3 + i])
    if coulomb:
        dx = y[0] - pos[0]
        dy = y[1] - pos[1]
        dz = y[2] - pos[2]
        d2 = dx * dx + dy * dy + dz * dz
        rho2 = d2 + eps2
        if V1 == 0.0:
            out[3] = 0.0
            out[4] = 0.0
            out[5] = 0.0
            return np.inf
        f = -V1 / (rho2 * np.sqrt(rho2))
        out[3] = f * dx
        out[4] = f * dy
        out[5] = f * dz
        return d2
    for i in range(3):
        out[3 + i] = -grad[i]
    return np.inf


@numba.njit(cache=True)
def _rk4_run(y0, dt, n_steps, sample_every, consts, hops, inv_mass, continuum,
             coulomb, pos, V1, eps2, grad, eps_min2):
    n_samples = n_steps // sample_every + 1
    samples = np.empty((n_samples, 6))
    samples[0] = y0
    y = y0.copy()
    tmp = np.empty(6)
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    half = 0.5 * dt
    sixth = dt / 6.0
    max_z = abs(y[2])
    for step in range(n_steps):
        if _rhs(y, k1, consts, hops, inv_mass, continuum, coulomb, pos, V1, eps2, grad) < eps_min2:
            return samples, step, max_z
        for i in range(6):
            tmp[i] = y[i] + half * k1[i]
        if _rhs(tmp, k2, consts, hops, inv_mass, continuum, coulomb, pos, V1, eps2, grad) < eps_min2:
            return samples, step, max_z
        for i in range(6):
            tmp[i] = y[i] + half * k2[i]
        if _rhs(tmp, k3, consts, hops, inv_mass, continuum, coulomb, pos, V1, eps2, grad) < eps_min2:
            return samples, step, max_z
        for i in range(6):
            tmp[i] = y[i] + dt * k3[i]
        if _rhs(tmp, k4, consts, hops, inv_mass, continuum, coulomb, pos, V1, eps2, grad) < eps_min2:
            return samples, step, max_z
        for i in range(6):
            y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if abs(y[2]) > max_z:
            max_z = abs(y[2])
        if (step + 1) % sample_every == 0:
            samples[(step + 1) // sample_every] = y
    return samples, -1, max_z


def _kernel_args(lat: LatticeParams, src):
    if isinstance(src, CoulombSource):
        coulomb, V1, eps2, grad = True, float(src.V1), src.epsilon**2, np.zeros(3)
    elif isinstance(src, UniformField):
        coulomb, V1, eps2, grad = False, 0.0, 0.0, np.asarray(src.gradient, dtype=float)
    else:
        raise TypeError(f"unsupported source type {type(src).__name__}")
    return (
        lat.constants, lat.hoppings, lat.inverse_masses, lat.kind == "continuum",
        coulomb, np.asarray(src.position, dtype=float), V1, eps2, grad,
    )


@dataclass
class Trajectory:
    """Sampled solution of the Hamilton equations.

    ``t`` has shape (n,), ``r`` and ``k`` shape (n, 3).  ``k`` is the evolved,
    unwrapped quasimomentum; use :meth:`k_wrapped` for the zone-reduced value.
    """

    t: np.ndarray
    r: np.ndarray
    k: np.ndarray
    lattice: LatticeParams
    source: object
    dt: float
    sample_every: int
    energy: np.ndarray = field(init=False)
    lz: np.ndarray = field(init=False)
    lz_rate: np.ndarray = field(init=False)
    max_abs_z: float = 0.0

    def __post_init__(self):
        self.energy = lm.kinetic_energy(self.k, self.lattice) + self.source.potential(self.r)
        self.lz = lm.lz_series(self.r, self.k, self.source.position)
        self.lz_rate = lm.lz_rate_series(self.k, self.lattice)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> PhaseState:
        return PhaseState(self.r[i], self.k[i], float(self.t[i]))

    def states(self):
        return (self[i] for i in range(len(self)))

    @property
    def sample_interval(self) -> float:
        return self.dt * self.sample_every

    @property
    def energy_drift(self) -> float:
        """Largest relative deviation of the energy from its initial value."""
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else max(np.max(np.abs(self.energy)), 1.0)
        return float(np.max(np.abs(self.energy - e0)) / scale)

    def k_wrapped(self) -> np.ndarray:
        if self.lattice.kind == "continuum":
            return self.k.copy()
        return lm.wrap_k(self.k, self.lattice)

    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.r - np.asarray(self.source.position), axis=1)


def integrate(initial: PhaseState, dt: float, t_end: float, lat: LatticeParams, src,
              sample_every: int = DEFAULT_SAMPLE_EVERY,
              eps_min: float = DEFAULT_EPS_MIN) -> Trajectory:
    """Integrate from ``initial`` to ``initial.t + t_end`` with classical RK4.

    Samples are stored every ``sample_every`` steps, the initial state
    included.  Raises :class:`SingularityApproachError` if any RK stage comes
    closer than ``eps_min`` to a Coulomb source.
    """
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = int(round(t_end / dt))
    y0 = np.concatenate([initial.r, initial.k]).astype(float)
    args = _kernel_args(lat, src)
    samples, fail, max_z = _rk4_run(y0, float(dt), n_steps, int(sample_every), *args,
                                    float(eps_min) ** 2)
    if fail >= 0:
        raise SingularityApproachError(
            f"trajectory came within {eps_min:g} of the source at t = {initial.t + fail * dt:.6g}"
        )
    t = initial.t + dt * sample_every * np.arange(samples.shape[0])
    traj = Trajectory(t, samples[:, :3].copy(), samples[:, 3:].copy(), lat, src,
                      float(dt), int(sample_every))
    traj.max_abs_z = float(max_z)
    return traj


def planarity_check(initial: PhaseState, dt: float, t_end: float, lat: LatticeParams,
                    src, eps_min: float = DEFAULT_EPS_MIN) -> float:
    """Largest |z| reached over every RK4 step of a 3-D run.

    A broken precondition (``k_z(0) != 0``) is reported, not rejected.
    """
    lat3 = replace(lat, dims=3)
    n_steps = max(1, int(round(t_end / dt)))
    traj = integrate(initial, dt, t_end, lat3, src, sample_every=n_steps, eps_min=eps_min)
    return traj.max_abs_z


@dataclass(frozen=True)
class ApsisEvent:
    t: float
    kind: Literal["perihelion", "aphelion"]
    radius: float
    state: PhaseState


def _hermite(traj: Trajectory, i: int, tau: float) -> np.ndarray:
    """Cubic Hermite interpolation of (r, k) at ``t[i] + tau``, 0 <= tau <= h."""
    h = traj.sample_interval
    y0 = np.concatenate([traj.r[i], traj.k[i]])
    y1 = np.concatenate([traj.r[i + 1], traj.k[i + 1]])
    f0 = np.concatenate([lm.group_velocity(traj.k[i], traj.lattice), traj.source.kdot(traj.r[i])])
    f1 = np.concatenate([lm.group_velocity(traj.k[i + 1], traj.lattice),
                         traj.source.kdot(traj.r[i + 1])])
    s = tau / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def apsides(traj: Trajectory, src=None, rtol: float = 1e-9) -> list[ApsisEvent]:
    """Perihelia and aphelia of the distance to the source.

    Extrema are found by strict three-point comparison of the sampled radius
    and refined with the vertex of the parabola through the three samples;
    the state at the refined time comes from cubic Hermite interpolation.
    Orbits whose radius varies by less than ``rtol`` (relative) are treated as
    circular and yield no events.
    """
    src = traj.source if src is None else src
    if len(traj) < 3:
        raise ValueError("need at least 3 samples to locate apsides")
    pos = np.asarray(src.position)
    rad = np.linalg.norm(traj.r - pos, axis=1)
    if np.ptp(rad) <= rtol * np.mean(rad):
        return []
    h = traj.sample_interval
    left, mid, right = rad[:-2], rad[1:-1], rad[2:]
    is_min = (mid < left) & (mid < right)
    is_max = (mid > left) & (mid > right)
    events: list[ApsisEvent] = []
    for j in np.flatnonzero(is_min | is_max) + 1:
        curv = rad[j - 1] - 2 * rad[j] + rad[j + 1]
        offset = 0.5 * h * (rad[j - 1] - rad[j + 1]) / curv if curv != 0 else 0.0
        offset = min(max(offset, -h), h)
        base, tau = (j, offset) if offset >= 0 else (j - 1, h + offset)
        if base >= len(traj) - 1:
            base, tau = j, 0.0
        y = _hermite(traj, base, tau) if tau != 0 else np.concatenate([traj.r[base], traj.k[base]])
        t = float(traj.t[base] + tau)
        kind = "perihelion" if is_min[j - 1] else "aphelion"
        events.append(ApsisEvent(t, kind, float(np.linalg.norm(y[:3] - pos)),
                                 PhaseState(y[:3], y[3:], t)))
    return _alternate(events)


def _alternate(events):
    """Collapse runs of same-kind events (sampling noise) to their extreme member."""
    out: list[ApsisEvent] = []
    for ev in events:
        if out and out[-1].kind == ev.kind:
            keep_new = (ev.radius < out[-1].radius) == (ev.kind == "perihelion")
            if keep_new:
                out[-1] = ev
            continue
        out.append(ev)
    return out


def _signed_angle(u, v) -> float:
    return float(np.arctan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]))


def precession_angles(events: list[ApsisEvent], src) -> np.ndarray:
    """Signed angle between consecutive perihelion vectors, relative to the source."""
    pos = np.asarray(src.position)
    peri = [np.asarray(e.state.r) - pos for e in events if e.kind == "perihelion"]
    return np.array([_signed_angle(u, v) for u, v in zip(peri, peri[1:])])


def apsidal_angles(events: list[ApsisEvent], src) -> np.ndarray:
    """Unsigned angle swept between each perihelion and the following aphelion."""
    pos = np.asarray(src.position)
    out = []
    for first, second in zip(events, events[1:]):
        if first.kind == "perihelion" and second.kind == "aphelion":
            out.append(abs(_signed_angle(np.asarray(first.state.r) - pos,
                                         np.asarray(second.state.r) - pos)))
    return np.array(out)
