"""Scenario presets, paired quantum/semiclassical runs and continuum-limit sweeps.

Each preset fixes the parameters of one reference scenario.  Values that the
reference leaves open get a module default and are listed in
``ScenarioConfig.calibration`` so outputs stay self-describing.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import lattice as lm
from . import observables as obs
from . import quantum as qm
from . import semiclassical as sc
from .errors import GridGrowthError, LatKeplerError
from .lattice import CoulombSource, LatticeParams, PhaseState, UniformField

ENGINES = ("semiclassical", "quantum")
MAX_SITES = {1: 1 << 20, 2: 1 << 20, 3: 128**3}


@dataclass(frozen=True)
class SemiclassicalSettings:
    dt: float = sc.DEFAULT_DT
    t_end: float = 1.0
    sample_every: int = sc.DEFAULT_SAMPLE_EVERY
    eps_min: float = sc.DEFAULT_EPS_MIN


@dataclass(frozen=True)
class QuantumSettings:
    dt: float = qm.DEFAULT_DT
    t_end: float = 1.0
    sample_every: int = 100
    shape: tuple[int, ...] | None = None
    sigma: float = qm.DEFAULT_SIGMA
    epsilon: float | None = None
    margin: int = qm.DEFAULT_MARGIN
    boundary_threshold: float = qm.DEFAULT_BOUNDARY_THRESHOLD

    def resolved_shape(self, dims: int) -> tuple[int, ...]:
        return tuple(self.shape) if self.shape is not None else qm.DEFAULT_SHAPES[dims]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    lattice: LatticeParams
    source: CoulombSource | UniformField
    r0: tuple[float, float, float]
    k0: tuple[float, float, float]
    engines: tuple[str, ...] = ("semiclassical",)
    semiclassical: SemiclassicalSettings = field(default_factory=SemiclassicalSettings)
    quantum: QuantumSettings = field(default_factory=QuantumSettings)
    calibration: tuple[str, ...] = ()
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "r0", lm.as_vec3(self.r0))
        object.__setattr__(self, "k0", lm.as_vec3(self.k0))
        object.__setattr__(self, "engines", tuple(self.engines))
        object.__setattr__(self, "calibration", tuple(self.calibration))
        self.validate()

    def validate(self):
        if not self.name:
            raise ValueError("scenario name must be non-empty")
        bad = [e for e in self.engines if e not in ENGINES]
        if bad:
            raise ValueError(f"unknown engine(s) {bad}; choose from {ENGINES}")
        values = [*self.r0, *self.k0]
        for part in (self.semiclassical, self.quantum):
            values += [v for v in asdict(part).values() if isinstance(v, float)]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("all physical fields must be finite")
        for part in (self.semiclassical, self.quantum):
            if part.dt <= 0 or part.t_end <= 0 or part.sample_every < 1:
                raise ValueError("dt and t_end must be positive, sample_every >= 1")
        q = self.quantum
        if q.shape is not None and len(q.shape) != self.lattice.dims:
            raise ValueError(f"quantum shape {q.shape} does not match dims = {self.lattice.dims}")
        if q.sigma <= 0 or (q.epsilon is not None and q.epsilon < 0):
            raise ValueError("sigma must be positive and epsilon non-negative")

    @property
    def initial_state(self) -> PhaseState:
        return PhaseState(self.r0, self.k0)

    def quantum_source(self):
        """Source used on the grid: Coulomb sources get the grid softening."""
        if isinstance(self.source, CoulombSource):
            eps = self.quantum.epsilon
            if eps is None:
                eps = 0.5 * float(self.lattice.constants[: self.lattice.dims].min())
            return replace(self.source, epsilon=eps)
        return self.source

    def grid_spec(self) -> qm.GridSpec:
        shape = self.quantum.resolved_shape(self.lattice.dims)
        return qm.GridSpec.centered(shape, self.lattice, self.r0[: self.lattice.dims])


@dataclass
class RunBundle:
    config: ScenarioConfig | None = None
    trajectory: sc.Trajectory | None = None
    log: qm.PropagationLog | None = None
    initial_grid: qm.WaveGrid | None = None
    final_grid: qm.WaveGrid | None = None
    apsides: list = field(default_factory=list)
    angular: obs.AngularMomentumRecord | None = None
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        if self.trajectory is not None:
            return self.trajectory.t
        if self.log is not None:
            return self.log.t
        return np.empty(0)

    def __len__(self):
        return len(self.t)


# -- presets -----------------------------------------------------------------

PRESETS: dict[str, Callable[[], ScenarioConfig]] = {}


def _preset(fn):
    PRESETS[fn.__name__.replace("_", "-")] = fn
    return fn


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def preset_names() -> list[str]:
    return sorted(PRESETS)


def _fig2_lattice_params():
    # a/a0 = 9.5 and xi = 2.94 fix b/a0 through the Wolf hopping relation.
    a_over_a0 = 9.5
    b_over_a0 = lm.solve_anisotropy(2.94, a_over_a0)
    a = 1.0
    b = a * b_over_a0 / a_over_a0
    return LatticeParams(a=a, b=b, c=b, A=lm.wolf_hopping(a_over_a0),
                         B=lm.wolf_hopping(b_over_a0), C=0.0, dims=2)


@_preset
def fig2_lattice():
    lat = _fig2_lattice_params()
    return ScenarioConfig(
        name="fig2-lattice",
        lattice=lat,
        source=CoulombSource((0.0, 0.0, 0.0), V1=1.0),
        # x(0) = 0.23 a, y(0) = 0, k_x(0) = 0, k_y(0) = 5.33 / b
        r0=(0.23 * lat.a, 0.0, 0.0),
        k0=(0.0, 5.33 / lat.b, 0.0),
        semiclassical=SemiclassicalSettings(t_end=40.0, sample_every=10),
        calibration=("V1", "source.position", "a", "t_end"),
        description="rectangular lattice a/b ~ 20: quasi 1-D oscillation along y",
    )


@_preset
def fig2_continuum():
    base = fig2_lattice()
    lat = base.lattice.as_continuum()
    # Energy-matched continuum momentum (inverse of continuum_matched_k).
    ky = lm.lattice_to_continuum_k(base.k0[1], base.lattice.b)
    return replace(
        base,
        name="fig2-continuum",
        lattice=lat,
        k0=(0.0, ky, 0.0),
        semiclassical=SemiclassicalSettings(dt=2e-5, t_end=20.0, sample_every=50),
        calibration=base.calibration + ("k0",),
        description="continuum limit with m_x/m_y = 2.94: 2-D anisotropic Kepler motion",
    )


def _fig3_base(kind):
    # a = 1, A = 125, V1 = 20000, (x0, y0) = (0, 20), (kx0, ky0) = (-1, 0), source (0, -140)
    lat = LatticeParams(a=1.0, b=1.0, c=1.0, A=125.0, B=125.0, C=125.0, dims=2, kind=kind)
    return ScenarioConfig(
        name="fig3-" + kind,
        lattice=lat,
        source=CoulombSource((0.0, -140.0, 0.0), V1=20000.0),
        r0=(0.0, 20.0, 0.0),
        k0=(-1.0, 0.0, 0.0),
        semiclassical=SemiclassicalSettings(t_end=540.0),
        calibration=("t_end",),
    )


@_preset
def fig3_lattice():
    return replace(_fig3_base("lattice"),
                   description="square lattice: precession of the perihelion")


@_preset
def fig3_continuum():
    base = _fig3_base("continuum")
    kx = lm.lattice_to_continuum_k(-1.0, 1.0)
    return replace(
        base, k0=(kx, 0.0, 0.0),
        semiclassical=SemiclassicalSettings(t_end=200.0),
        calibration=("t_end",),
        description="isotropic continuum: closed Kepler ellipse at the lattice energy",
    )


@_preset
def fig1_planar():
    base = _fig3_base("lattice")
    lat = replace(base.lattice, dims=3)
    return replace(
        base, name="fig1-planar", lattice=lat,
        semiclassical=SemiclassicalSettings(t_end=450.0),
        calibration=("t_end", "C", "c"),
        description="3-D cubic lattice with in-plane initial data: motion stays in z = 0",
    )


def _fig5_base(k0x, dims):
    lat = LatticeParams(a=1.0, b=1.0, c=1.0, A=1.0, B=1.0, C=1.0, dims=dims)
    shape = {2: (64, 64), 3: (64, 64, 40)}[dims]
    # (x0, y0) = (0, 32 a), source at (0, -120 a), V1 = 307200
    return ScenarioConfig(
        name="fig5",
        lattice=lat,
        source=CoulombSource((0.0, -120.0, 0.0), V1=307200.0),
        r0=(0.0, 32.0, 0.0),
        k0=(k0x, 0.0, 0.0),
        engines=("quantum",),
        quantum=QuantumSettings(t_end=1.0, shape=shape),
        calibration=("A", "B", "C", "sigma", "t_end", "shape", "epsilon"),
    )


@_preset
def fig5_quasibloch():
    return replace(_fig5_base(0.0, 2), name="fig5-quasibloch",
                   description="quasi-Bloch oscillation of z_y, 2-D")


@_preset
def fig5_quasibloch_3d():
    return replace(_fig5_base(0.0, 3), name="fig5-quasibloch-3d",
                   description="quasi-Bloch oscillation of z_y, 3-D cubic lattice")


@_preset
def fig7():
    return replace(
        _fig5_base(-1.0, 2),
        name="fig7",
        engines=("semiclassical", "quantum"),
        semiclassical=SemiclassicalSettings(t_end=1.0),
        quantum=QuantumSettings(t_end=1.0, shape=(512, 512)),
        description="paired run: quantum vs semiclassical angular momentum",
    )


@_preset
def fig8_continuum():
    lat = LatticeParams(a=1.0, A=1.0, dims=1)
    return ScenarioConfig(
        name="fig8-continuum",
        lattice=lat,
        source=CoulombSource((0.0, 0.0, 0.0), V1=1.0),
        r0=(100.0, 0.0, 0.0),
        k0=(-1.0, 0.0, 0.0),
        engines=("quantum",),
        quantum=QuantumSettings(t_end=20.0, sample_every=1000, shape=(512,), sigma=8.0),
        calibration=("A", "V1", "r0", "k0", "sigma", "t_end", "shape"),
        description="1-D lattice under a Coulomb source; base point of the skewness sweep",
    )


@_preset
def bloch_uniform():
    lat = LatticeParams(dims=2)
    return ScenarioConfig(
        name="bloch-uniform",
        lattice=lat,
        source=UniformField(gradient=(0.0, 5.0, 0.0)),
        r0=(0.0, 0.0, 0.0),
        k0=(0.0, 0.0, 0.0),
        engines=("semiclassical", "quantum"),
        semiclassical=SemiclassicalSettings(t_end=3.0, sample_every=10),
        quantum=QuantumSettings(t_end=3.0, sample_every=10, shape=(64, 64)),
        description="constant force along y: Bloch oscillation test case",
    )


@_preset
def free_packet():
    lat = LatticeParams(dims=1)
    return ScenarioConfig(
        name="free-packet",
        lattice=lat,
        source=CoulombSource(V1=0.0),
        r0=(0.0, 0.0, 0.0),
        k0=(0.1, 0.0, 0.0),
        engines=("semiclassical", "quantum"),
        semiclassical=SemiclassicalSettings(t_end=1.0),
        quantum=QuantumSettings(t_end=1.0, shape=(512,), sigma=8.0),
        description="no potential: packet drifts at the group velocity",
    )


# -- running -----------------------------------------------------------------

def _metadata(cfg: ScenarioConfig) -> dict:
    meta = {
        "name": cfg.name,
        "version": __version__,
        "engines": list(cfg.engines),
        "lattice": asdict(cfg.lattice),
        "source": {"type": type(cfg.source).__name__, **asdict(cfg.source)},
        "r0": list(cfg.r0),
        "k0": list(cfg.k0),
        "calibration": list(cfg.calibration),
    }
    if "semiclassical" in cfg.engines:
        meta["semiclassical"] = asdict(cfg.semiclassical)
    if "quantum" in cfg.engines:
        q = asdict(cfg.quantum)
        q["shape"] = list(cfg.quantum.resolved_shape(cfg.lattice.dims))
        qsrc = cfg.quantum_source()
        q["epsilon"] = getattr(qsrc, "epsilon", None)
        meta["quantum"] = q
        meta["sigma"] = cfg.quantum.sigma
    return meta


def _annotate(cfg, err):
    try:
        new = type(err)(f"scenario {cfg.name!r}: {err}")
    except TypeError:
        return err
    return new


def run_scenario(cfg: ScenarioConfig) -> RunBundle:
    """Run every engine listed in ``cfg.engines`` and collect the results."""
    bundle = RunBundle(config=cfg, metadata=_metadata(cfg))
    try:
        if "semiclassical" in cfg.engines:
            s = cfg.semiclassical
            traj = sc.integrate(cfg.initial_state, s.dt, s.t_end, cfg.lattice, cfg.source,
                                s.sample_every, s.eps_min)
            bundle.trajectory = traj
            if isinstance(cfg.source, CoulombSource) and cfg.source.V1 != 0 and len(traj) >= 3:
                bundle.apsides = sc.apsides(traj)
        if "quantum" in cfg.engines:
            q = cfg.quantum
            spec = cfg.grid_spec()
            n_sites = spec.size
            if n_sites > MAX_SITES[spec.dims]:
                raise GridGrowthError(
                    f"{n_sites} sites exceed the {MAX_SITES[spec.dims]}-site ceiling for {spec.dims}-D")
            psi0 = qm.init_gaussian(spec, cfg.r0, cfg.k0, q.sigma)
            n_steps = int(round(q.t_end / q.dt))
            final, log = qm.propagate(psi0, q.dt, n_steps, cfg.quantum_source(),
                                      sample_every=q.sample_every, margin=q.margin,
                                      boundary_threshold=q.boundary_threshold)
            bundle.initial_grid, bundle.final_grid, bundle.log = psi0, final, log
    except LatKeplerError as err:
        raise _annotate(cfg, err) from err
    if bundle.trajectory is not None and bundle.log is not None:
        bundle.angular = _angular_record(bundle)
    bundle.summary = summarize(bundle)
    return bundle


def _angular_record(bundle: RunBundle) -> obs.AngularMomentumRecord:
    traj, log = bundle.trajectory, bundle.log
    if len(traj.t) != len(log.t) or not np.allclose(traj.t, log.t, rtol=0, atol=1e-9):
        raise ValueError("semiclassical and quantum sample times differ; "
                         "align dt * sample_every of both engines")
    L_q, L_c, S = obs.angular_momenta(log.z, traj.r, log.s, traj.k, bundle.config.source)
    try:
        alpha = obs.fit_alpha(L_q, L_c, S)
    except obs.DegenerateFitError:
        alpha = float("nan")
    return obs.AngularMomentumRecord(traj.t.copy(), L_q, L_c, S, alpha)


def paired_run(cfg: ScenarioConfig) -> RunBundle:
    """Quantum and semiclassical runs from matched initial data, with L_q, L_c, S."""
    if set(cfg.engines) != set(ENGINES):
        cfg = replace(cfg, engines=ENGINES)
    return run_scenario(cfg)


def summarize(bundle: RunBundle) -> dict:
    out: dict = {}
    traj = bundle.trajectory
    if traj is not None:
        out["energy_drift"] = traj.energy_drift
        lz0 = traj.lz[0]
        out["lz_drift"] = float(np.max(np.abs(traj.lz - lz0)) / abs(lz0)) if lz0 else float("nan")
        out["x_range"] = float(np.ptp(traj.r[:, 0]))
        out["y_range"] = float(np.ptp(traj.r[:, 1]))
        src = bundle.config.source
        peri = [e for e in bundle.apsides if e.kind == "perihelion"]
        out["n_perihelia"] = len(peri)
        prec = sc.precession_angles(bundle.apsides, src)
        out["precession_per_orbit"] = float(np.mean(prec)) if prec.size else float("nan")
        aps = sc.apsidal_angles(bundle.apsides, src)
        out["apsidal_angle"] = float(np.mean(aps)) if aps.size else float("nan")
    log = bundle.log
    if log is not None:
        out["norm_drift"] = float(np.max(np.abs(log.norm - log.norm[0])))
        e = log.energy
        out["quantum_energy_drift"] = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else float(np.ptp(e))
        out["max_boundary_mass"] = float(np.max(log.boundary_mass))
        for i, ax in enumerate("xyz"[: log.z.shape[1]]):
            out[f"z{ax}_final"] = float(log.z[-1, i])
            out[f"s{ax}_final"] = float(log.s[-1, i])
    ang = bundle.angular
    if ang is not None:
        diff = ang.L_q - ang.L_c
        out["alpha"] = ang.alpha
        scale = float(np.max(np.abs(ang.L_c)))
        out["rms_dL_over_max_Lc"] = float(np.sqrt(np.mean(diff**2)) / scale) if scale else float("nan")
        if np.std(diff) > 0 and np.std(ang.S) > 0:
            out["corr_dL_S"] = float(np.corrcoef(diff, ang.S)[0, 1])
        else:
            out["corr_dL_S"] = float("nan")
    return out


def scale_config(cfg: ScenarioConfig, scale: float) -> ScenarioConfig:
    """Refine the lattice by ``scale`` at fixed effective masses and physical extent.

    Lattice constants shrink by ``scale`` and hoppings grow by ``scale**-2``;
    the initial quasimomentum is re-matched so the kinetic energy is unchanged
    and grid sizes grow by ``1/scale``.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if scale == 1.0:
        return cfg
    old, new = cfg.lattice, cfg.lattice.scaled(scale)
    k0 = list(cfg.k0)
    if old.kind == "lattice":
        for i, (a_old, a_new) in enumerate(zip(old.constants, new.constants)):
            k_cont = lm.lattice_to_continuum_k(k0[i], a_old)
            k0[i] = lm.continuum_matched_k(k_cont, a_new)
    q = cfg.quantum
    shape = tuple(int(round(n / scale)) for n in q.resolved_shape(old.dims))
    quantum = replace(q, shape=shape,
                      epsilon=None if q.epsilon is None else q.epsilon * scale)
    return replace(cfg, name=f"{cfg.name}@{scale:g}", lattice=new, k0=tuple(k0),
                   quantum=quantum)


def continuum_sweep(base: ScenarioConfig, scales: Sequence[float]) -> list[dict]:
    """Summary row per refinement of ``base``; scales must be strictly decreasing."""
    scales = [float(s) for s in scales]
    if not scales or any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")
    if "quantum" in base.engines:
        dims = base.lattice.dims
        shape = base.quantum.resolved_shape(dims)
        need = int(np.prod([round(n / scales[-1]) for n in shape]))
        if need > MAX_SITES[dims]:
            raise GridGrowthError(
                f"finest scale needs {need} sites, above the {MAX_SITES[dims]}-site ceiling")
    rows = []
    for s in scales:
        cfg = scale_config(base, s)
        bundle = run_scenario(cfg)
        rows.append({"scale": s, "a": cfg.lattice.a, "A": cfg.lattice.A,
                     "kx0": cfg.k0[0], **bundle.summary})
    return rows


def convergence_check(cfg: ScenarioConfig, window: float = 0.1) -> dict:
    """Largest deviation of the mean position when the time step is halved.

    Runs each engine over ``window`` (capped at its ``t_end``) at ``dt`` and
    ``dt/2`` and compares the final positions.
    """
    out = {}
    if "semiclassical" in cfg.engines:
        s = cfg.semiclassical
        t = min(window, s.t_end)
        a = sc.integrate(cfg.initial_state, s.dt, t, cfg.lattice, cfg.source, 1_000_000_000)
        b = sc.integrate(cfg.initial_state, s.dt / 2, t, cfg.lattice, cfg.source, 1_000_000_000)
        out["semiclassical_dr"] = float(np.max(np.abs(a.r[-1] - b.r[-1])))
    if "quantum" in cfg.engines:
        q = cfg.quantum
        t = min(window, q.t_end)
        spec = cfg.grid_spec()
        psi0 = qm.init_gaussian(spec, cfg.r0, cfg.k0, q.sigma)
        src = cfg.quantum_source()
        zs = []
        for dt in (q.dt, q.dt / 2):
            n = int(round(t / dt))
            final, _ = qm.propagate(psi0, dt, n, src, sample_every=n, energy=False)
            zs.append(obs.moments(final).z)
        out["quantum_dz"] = float(np.max(np.abs(zs[0] - zs[1])))
    return out
