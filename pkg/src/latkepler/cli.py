"""Command-line entry point.

    latkepler run --config scenario.ini [--out DIR]
    latkepler preset --list | --show NAME
    latkepler sweep --config scenario.ini --scales 1,0.5,0.25 [--out DIR]
    latkepler selftest

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
guard stops a run.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex
from . import output, selftest
from .config import format_config, load_config
from .errors import ConfigError, LatKeplerError, NonFiniteError, NumericalGuardError

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_GUARD = 0, 1, 2, 3


def _write_run(bundle: ex.RunBundle, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    output.write_series(bundle, out / "series.csv")
    output.write_json({"metadata": bundle.metadata, "summary": bundle.summary},
                      out / "metadata.json")
    (out / "config.ini").write_text(format_config(bundle.config), encoding="utf-8", newline="\n")
    if bundle.final_grid is not None and bundle.final_grid.dims >= 2:
        output.write_density(bundle.initial_grid, out / "density_initial.txt")
        output.write_density(bundle.final_grid, out / "density_final.txt")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    bundle = ex.run_scenario(cfg)
    out = Path(args.out or f"out-{cfg.name}")
    _write_run(bundle, out)
    for key, value in bundle.summary.items():
        print(f"{key} = {value}")
    print(f"wrote {out}")
    return EXIT_OK


def _parse_scales(text: str) -> list[float]:
    try:
        scales = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--scales must be a comma-separated list of numbers, got {text!r}") from None
    if not scales:
        raise ConfigError("--scales is empty")
    return scales


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    scales = _parse_scales(args.scales)
    try:
        rows = ex.continuum_sweep(cfg, scales)
    except ValueError as err:
        if isinstance(err, LatKeplerError) and not isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from None
    out = Path(args.out or f"sweep-{cfg.name}")
    out.mkdir(parents=True, exist_ok=True)
    output.write_rows(rows, out / "sweep.csv")
    for row in rows:
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    if args.show:
        try:
            print(format_config(ex.preset(args.show)), end="")
        except KeyError as err:
            raise ConfigError(err.args[0]) from None
        return EXIT_OK
    for name in ex.preset_names():
        print(f"{name:22s} {ex.preset(name).description}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    return EXIT_OK if selftest.run() else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latkepler",
                                     description="Lattice Kepler problem: scenarios and sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--config", required=True, help="scenario configuration file")
    p.add_argument("--out", help="output directory (default out-<name>)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("preset", help="list or print presets")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true", help="list preset names")
    g.add_argument("--show", metavar="NAME", help="print a preset as configuration text")
    p.set_defaults(func=_cmd_preset)
    p = sub.add_parser("sweep", help="continuum-limit sweep over lattice refinements")
    p.add_argument("--config", required=True)
    p.add_argument("--scales", required=True, help="comma-separated, strictly decreasing")
    p.add_argument("--out", help="output directory (default sweep-<name>)")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("selftest", help="run the quick oracle checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericalGuardError, NonFiniteError) as err:
        print(f"numerical guard: {err}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, ValueError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
