"""Fast oracle checks runnable from the command line (``latkepler selftest``).

Each check takes well under a second; the full test-suite lives in ``tests/``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import lattice as lm
from . import observables as obs
from . import quantum as qm
from . import semiclassical as sc
from .lattice import CoulombSource, LatticeParams, PhaseState, UniformField


def _group_velocity_fd():
    lat = LatticeParams(a=0.7, b=1.3, A=2.0, B=0.5, dims=2)
    k = np.array([0.4, -1.1, 0.0])
    h = 1e-6
    fd = [(lm.kinetic_energy(k + h * e, lat) - lm.kinetic_energy(k - h * e, lat)) / (2 * h)
          for e in np.eye(3)]
    return np.max(np.abs(np.array(fd) - lm.group_velocity(k, lat))), 1e-8


def _coulomb_force_fd():
    src = CoulombSource((0.3, -0.2, 0.0), V1=2.0, epsilon=0.1)
    r = np.array([1.1, 0.7, -0.4])
    h = 1e-6
    grad = [(src.potential(r + h * e) - src.potential(r - h * e)) / (2 * h) for e in np.eye(3)]
    return np.max(np.abs(-np.array(grad) - src.kdot(r))), 1e-8


def _anisotropy():
    return abs(lm.solve_anisotropy(2.94, 9.5) - 0.477), 1e-3


def _bloch_semiclassical():
    force = 5.0
    lat = LatticeParams(dims=2)
    traj = sc.integrate(PhaseState(), 1e-4, 2 * np.pi / force, lat,
                        UniformField((0.0, force, 0.0)), sample_every=1)
    excursion = np.ptp(traj.r[:, 1])
    return abs(excursion - 4 * lat.B / force) / (4 * lat.B / force), 1e-6


def _moment_bruteforce():
    rng = np.random.default_rng(7)
    lat = LatticeParams(a=0.5, b=1.5, dims=2)
    spec = qm.GridSpec((8, 8), lat, (3, 4))
    c = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    psi = qm.WaveGrid(spec, c).normalized()
    p = psi.density()
    x = spec.axis_coords(0)[:, None] * np.ones((1, 8))
    mean = float(np.sum(x * p))
    brute = float(np.sum((x - mean) ** 3 * p))
    return abs(obs.central_moment(psi, 3, 0) - brute), 1e-13


def _split_unitarity():
    lat = LatticeParams(dims=2)
    spec = qm.GridSpec.centered((32, 32), lat, (0.0, 0.0))
    psi = qm.init_gaussian(spec, (0.0, 0.0), (0.5, -0.3), sigma=3.0)
    src = CoulombSource((0.0, -20.0, 0.0), V1=50.0, epsilon=0.5)
    out, _ = qm.propagate(psi, 1e-3, 100, src, sample_every=100, energy=False)
    return abs(out.norm() - 1.0), 1e-12


def _energy_matching():
    k = lm.continuum_matched_k(0.9, 0.5)
    lat = LatticeParams(a=0.5, A=1.0, dims=1)
    cont = 0.5 * lat.inverse_masses[0] * 0.9**2
    return abs(lm.kinetic_energy([k, 0, 0], lat) - cont), 1e-12


CHECKS: dict[str, Callable[[], tuple[float, float]]] = {
    "group velocity vs finite differences": _group_velocity_fd,
    "Coulomb force vs finite differences": _coulomb_force_fd,
    "anisotropy root 2.94 / 9.5 -> 0.477": _anisotropy,
    "semiclassical Bloch excursion 4B/F": _bloch_semiclassical,
    "third moment vs brute force": _moment_bruteforce,
    "split-step norm conservation": _split_unitarity,
    "continuum-matched quasimomentum energy": _energy_matching,
}


def run(echo=print) -> bool:
    ok = True
    for name, check in CHECKS.items():
        err, tol = check()
        passed = math.isfinite(err) and err <= tol
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}  (error {err:.3g}, tolerance {tol:g})")
    return ok
