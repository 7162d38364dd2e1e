"""Plain-text scenario configuration: ``[section]`` headers and ``key = value`` lines.

Parsing is fail-closed: unknown sections or keys, duplicates and
out-of-range values are errors carrying the offending line number.  A file
may start from a preset (``preset = name`` in ``[scenario]``) and override
individual fields.

Example::

    [scenario]
    preset = fig7

    [quantum]
    sigma = 6.0
"""
from __future__ import annotations

import math
from dataclasses import fields, replace

from .errors import ConfigError
from .experiments import (
    ENGINES,
    QuantumSettings,
    ScenarioConfig,
    SemiclassicalSettings,
    preset,
)
from .lattice import CoulombSource, LatticeParams, UniformField


def _float(text):
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _positive(conv):
    def check(text):
        v = conv(text)
        if v <= 0:
            raise ValueError(f"must be positive, got {v}")
        return v
    return check


def _nonneg(text):
    v = _float(text)
    if v < 0:
        raise ValueError(f"must be >= 0, got {v}")
    return v


def _list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def _vector(text):
    parts = _list(text)
    if not 1 <= len(parts) <= 3:
        raise ValueError(f"expected 1 to 3 comma-separated components, got {len(parts)}")
    return tuple(_float(p) for p in parts)


def _auto(conv):
    def check(text):
        return None if text.strip().lower() == "auto" else conv(text)
    return check


def _shape(text):
    dims = tuple(_positive(_int)(p) for p in _list(text))
    if not 1 <= len(dims) <= 3:
        raise ValueError("shape needs 1 to 3 sizes")
    return dims


def _choice(*options):
    def check(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return check


def _engines(text):
    names = tuple(_list(text))
    if not names:
        raise ValueError("at least one engine is required")
    for n in names:
        _choice(*ENGINES)(n)
    return names


SCHEMA = {
    "scenario": {
        "name": str.strip,
        "preset": str.strip,
        "engines": _engines,
        "description": str.strip,
        "calibration": lambda t: tuple(_list(t)),
    },
    "lattice": {
        "a": _positive(_float), "b": _positive(_float), "c": _positive(_float),
        "A": _nonneg, "B": _nonneg, "C": _nonneg,
        "dims": _choice("1", "2", "3"),
        "kind": _choice("lattice", "continuum"),
    },
    "source": {
        "kind": _choice("coulomb", "uniform"),
        "position": _vector,
        "V1": _float,
        "epsilon": _nonneg,
        "gradient": _vector,
    },
    "initial": {"r": _vector, "k": _vector},
    "semiclassical": {
        "dt": _positive(_float), "t_end": _positive(_float),
        "sample_every": _positive(_int), "eps_min": _positive(_float),
    },
    "quantum": {
        "dt": _positive(_float), "t_end": _positive(_float),
        "sample_every": _positive(_int), "shape": _auto(_shape),
        "sigma": _positive(_float), "epsilon": _auto(_nonneg),
        "margin": _positive(_int), "boundary_threshold": _positive(_float),
    },
}


def _tokenize(text):
    """Yield (section, key, raw value, line number)."""
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, section)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if section is None:
            raise ConfigError(f"key {key!r} appears before any [section]", lineno, key)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, key)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno, key)
        seen.add((section, key))
        yield section, key, value, lineno


def parse_config(text: str) -> ScenarioConfig:
    """Build a validated :class:`ScenarioConfig` from configuration text."""
    values: dict[str, dict[str, tuple[object, int]]] = {s: {} for s in SCHEMA}
    for section, key, raw, lineno in _tokenize(text):
        try:
            values[section][key] = (SCHEMA[section][key](raw), lineno)
        except ValueError as err:
            raise ConfigError(f"[{section}] {key}: {err}", lineno, key) from None

    def get(section, key, default):
        return values[section][key][0] if key in values[section] else default

    def line_of(section, key=None):
        entries = values[section]
        if key in entries:
            return entries[key][1]
        return min((ln for _, ln in entries.values()), default=None)

    scen = values["scenario"]
    if "preset" in scen:
        try:
            base = preset(scen["preset"][0])
        except KeyError as err:
            raise ConfigError(err.args[0], scen["preset"][1], "preset") from None
    else:
        for section in ("lattice", "initial"):
            if not values[section]:
                raise ConfigError(f"missing [{section}] section (or name a preset)")
        base = None

    try:
        lat_kw = {k: v for k, (v, _) in values["lattice"].items()}
        if "dims" in lat_kw:
            lat_kw["dims"] = int(lat_kw["dims"])
        lattice = replace(base.lattice, **lat_kw) if base else LatticeParams(**lat_kw)
    except ValueError as err:
        raise ConfigError(f"[lattice] {err}", line_of("lattice")) from None

    source = _build_source(values["source"], base.source if base else None, line_of)

    sc_base = base.semiclassical if base else SemiclassicalSettings()
    q_base = base.quantum if base else QuantumSettings()
    semi = replace(sc_base, **{k: v for k, (v, _) in values["semiclassical"].items()})
    quant = replace(q_base, **{k: v for k, (v, _) in values["quantum"].items()})

    name = get("scenario", "name", base.name if base else None)
    if not name:
        raise ConfigError("[scenario] name is required when no preset is given", line_of("scenario"))
    try:
        return ScenarioConfig(
            name=name,
            lattice=lattice,
            source=source,
            r0=get("initial", "r", base.r0 if base else None),
            k0=get("initial", "k", base.k0 if base else None),
            engines=get("scenario", "engines", base.engines if base else ("semiclassical",)),
            semiclassical=semi,
            quantum=quant,
            calibration=get("scenario", "calibration", base.calibration if base else ()),
            description=get("scenario", "description", base.description if base else ""),
        )
    except ValueError as err:
        line = line_of("quantum", "shape") if "shape" in str(err) else None
        raise ConfigError(str(err), line) from None


def _build_source(entries, base, line_of):
    kv = {k: v for k, (v, _) in entries.items()}
    kind = kv.pop("kind", None)
    if kind is None:
        kind = "uniform" if isinstance(base, UniformField) else "coulomb"
    target = CoulombSource if kind == "coulomb" else UniformField
    allowed = {f.name for f in fields(target)}
    for key in kv:
        if key not in allowed:
            raise ConfigError(f"key {key!r} does not apply to a {kind} source",
                              line_of("source", key), key)
    try:
        if isinstance(base, target):
            return replace(base, **kv)
        return target(**kv)
    except ValueError as err:
        raise ConfigError(f"[source] {err}", line_of("source")) from None


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: ScenarioConfig) -> str:
    """Fully explicit configuration text; ``parse_config`` inverts it exactly."""
    src = cfg.source
    lines = ["[scenario]", f"name = {cfg.name}", f"engines = {_fmt(cfg.engines)}"]
    if cfg.calibration:
        lines.append(f"calibration = {_fmt(cfg.calibration)}")
    if cfg.description:
        lines.append(f"description = {cfg.description}")
    lines += ["", "[lattice]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.lattice, f.name))}" for f in fields(cfg.lattice)]
    lines += ["", "[source]"]
    if isinstance(src, CoulombSource):
        lines += ["kind = coulomb", f"position = {_fmt(src.position)}",
                  f"V1 = {_fmt(src.V1)}", f"epsilon = {_fmt(src.epsilon)}"]
    else:
        lines += ["kind = uniform", f"position = {_fmt(src.position)}",
                  f"gradient = {_fmt(src.gradient)}"]
    lines += ["", "[initial]", f"r = {_fmt(cfg.r0)}", f"k = {_fmt(cfg.k0)}"]
    for section, part in (("semiclassical", cfg.semiclassical), ("quantum", cfg.quantum)):
        lines += ["", f"[{section}]"]
        lines += [f"{f.name} = {_fmt(getattr(part, f.name))}" for f in fields(part)]
    return "\n".join(lines) + "\n"


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
