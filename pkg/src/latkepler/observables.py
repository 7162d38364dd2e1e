"""Statistical moments of a lattice wavepacket and the angular-momentum comparison.

Moments follow the lattice definitions: with ``P_n = |C_n|**2`` and site
coordinate ``x_n``,

    z      = sum_n x_n P_n
    m_p    = sum_n (x_n - z)**p P_n        (p >= 2)
    s      = cbrt(m_3)                     (signed, units of length)

Sums are not divided by the norm; for propagated states the norm is 1 to
rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import DegenerateFitError


@dataclass(frozen=True)
class MomentSet:
    norm: float
    z: np.ndarray
    sigma: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class AngularMomentumRecord:
    t: np.ndarray
    L_q: np.ndarray
    L_c: np.ndarray
    S: np.ndarray
    alpha: float

    @property
    def alpha_S(self) -> np.ndarray:
        return self.alpha * self.S


def _marginal(psi, axis: int) -> np.ndarray:
    """Site density summed over every axis but ``axis``, with exactly rounded sums."""
    dens = np.moveaxis(np.abs(psi.coefficients) ** 2, axis, 0)
    rows = dens.reshape(dens.shape[0], -1)
    if rows.shape[1] == 1:
        return rows[:, 0].copy()
    return np.array([math.fsum(row) for row in rows])


def _axis_moments(psi, axis: int, orders, prob=None):
    """Mean and central moments along one axis.

    Coordinates are taken relative to the site nearest the mean so the
    products stay small; reductions use ``math.fsum``, which makes the result
    independent of summation order (mirror images give exactly negated odd
    moments).
    """
    prob = _marginal(psi, axis) if prob is None else prob
    a = psi.spec.lattice.constants[axis]
    n = np.arange(psi.spec.shape[axis]) - psi.spec.origin_index[axis]
    total = math.fsum(prob)
    rough = math.fsum(n * prob) / total if total > 0 else 0.0
    ref = int(np.floor(rough + 0.5)) if np.isfinite(rough) else 0
    u = (n - ref) * a
    shift = math.fsum(u * prob)
    mean = ref * a + shift
    du = u - shift
    return mean, {p: math.fsum(_ipow(du, p) * prob) for p in orders}


def _ipow(x, p):
    # Repeated products are exactly odd under x -> -x; vectorised ``**`` is not.
    out = np.ones_like(x)
    for _ in range(p):
        out = out * x
    return out


def central_moment(psi, p: int, axis: int = 0) -> float:
    """Moment of order ``p`` of the site density along ``axis``.

    p = 0 is the norm and p = 1 the (uncentred) mean coordinate; higher
    orders are taken about that mean.
    """
    if p < 0:
        raise ValueError("moment order must be >= 0")
    prob = _marginal(psi, axis)
    if p == 0:
        return math.fsum(prob)
    mean, m = _axis_moments(psi, axis, (p,) if p >= 2 else (), prob)
    return mean if p == 1 else m[p]


def skewness_length(psi) -> np.ndarray:
    """Signed cube root of the third central moment, per axis."""
    return np.cbrt([central_moment(psi, 3, i) for i in range(psi.spec.dims)])


def moments(psi) -> MomentSet:
    d = psi.spec.dims
    z, var, m3 = np.empty(d), np.empty(d), np.empty(d)
    norm = 0.0
    for i in range(d):
        prob = _marginal(psi, i)
        if i == 0:
            norm = math.fsum(prob)
        z[i], m = _axis_moments(psi, i, (2, 3), prob)
        var[i], m3[i] = m[2], m[3]
    return MomentSet(norm, z, np.sqrt(np.maximum(var, 0.0)), np.cbrt(m3))


def _planar_cross(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _pad2(v):
    """First two components of a (possibly 1-D) vector or series of vectors."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] >= 2:
        return v[..., :2]
    return np.concatenate([v, np.zeros(v.shape[:-1] + (2 - v.shape[-1],))], axis=-1)


def angular_momenta(z, r_cl, s, k, src):
    """Quantum, semiclassical and intrinsic planar angular momenta.

    ``L_q = (z - r_src) x k``, ``L_c = (r_cl - r_src) x k`` and ``S = s x k``,
    all signed z-components of planar cross products.  Inputs may be single
    vectors or time series of vectors (last axis = components).
    """
    origin = np.asarray(src.position, dtype=float)[:2]
    k2 = _pad2(k)
    L_q = _planar_cross(_pad2(z) - origin, k2)
    L_c = _planar_cross(_pad2(r_cl) - origin, k2)
    S = _planar_cross(_pad2(s), k2)
    return L_q, L_c, S


def fit_alpha(L_q, L_c, S) -> float:
    """Least-squares ``alpha`` in ``L_q - L_c = alpha S`` (line through the origin)."""
    L_q, L_c, S = (np.asarray(v, dtype=float) for v in (L_q, L_c, S))
    if S.size < 2:
        raise ValueError("need at least two samples to fit alpha")
    ss = float(np.dot(S, S))
    if ss == 0.0:
        raise DegenerateFitError("intrinsic angular momentum is identically zero")
    return float(np.dot(S, L_q - L_c) / ss)


def energy_expectation(psi, src) -> float:
    """``<T> + <V>`` with T evaluated on the reciprocal grid."""
    c_hat = sfft.fftn(psi.coefficients, norm="ortho")
    kin = float(np.sum(psi.spec.kinetic() * np.abs(c_hat) ** 2))
    pot = float(np.sum(psi.spec.potential(src) * np.abs(psi.coefficients) ** 2))
    return kin + pot


def momentum_expectation(psi) -> np.ndarray:
    """Mean quasimomentum ``<k>`` on the reciprocal grid.

    Only meaningful when the packet is narrow in k and away from the zone
    edge; used by tests, not by the angular-momentum comparison.
    """
    prob = np.abs(sfft.fftn(psi.coefficients, norm="ortho")) ** 2
    out = np.empty(psi.spec.dims)
    for i in range(psi.spec.dims):
        others = tuple(j for j in range(psi.spec.dims) if j != i)
        marg = prob.sum(axis=others) if others else prob
        out[i] = np.dot(psi.spec.wavenumbers(i), marg)
    return out
