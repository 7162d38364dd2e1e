"""Time-series CSV and density-grid writers.

Numbers are written with 17 significant digits so every value re-parses to
the identical double.  Files always use LF line endings.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .lattice import LatticeParams
from .quantum import GridSpec, WaveGrid

SERIES_COLUMNS = ("t", "x", "y", "kx", "ky", "E", "Lz", "Lz_rate",
                  "zx", "zy", "sx", "sy", "Lq", "Lc", "S", "alphaS")


def fmt(v: float) -> str:
    return "%.17g" % v


def _open(path, mode="w"):
    try:
        return open(path, mode, encoding="utf-8", newline="\n")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror or err}") from err


def series_table(bundle) -> np.ndarray:
    """Rows x columns array in ``SERIES_COLUMNS`` order; missing values are NaN."""
    n = len(bundle)
    table = np.full((n, len(SERIES_COLUMNS)), np.nan)
    if n == 0:
        return table
    table[:, 0] = bundle.t
    traj = bundle.trajectory
    if traj is not None:
        table[:, 1:3] = traj.r[:, :2]
        table[:, 3:5] = traj.k[:, :2]
        table[:, 5] = traj.energy
        table[:, 6] = traj.lz
        table[:, 7] = traj.lz_rate
    log = bundle.log
    if log is not None:
        d = min(log.z.shape[1], 2)
        table[:, 8:8 + d] = log.z[:, :d]
        table[:, 10:10 + d] = log.s[:, :d]
    ang = bundle.angular
    if ang is not None:
        table[:, 12] = ang.L_q
        table[:, 13] = ang.L_c
        table[:, 14] = ang.S
        table[:, 15] = ang.alpha_S
    return table


def write_series(bundle, path) -> Path:
    """One CSV row per sample, header first."""
    path = Path(path)
    table = series_table(bundle)
    with _open(path) as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in table:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_series(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [[float(x) for x in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def density_plane(psi: WaveGrid) -> np.ndarray:
    """|C|**2 as an (ny, nx) array; 3-D grids are summed over z, 1-D gets ny = 1."""
    dens = psi.density()
    if psi.dims == 3:
        dens = dens.sum(axis=2)
    if psi.dims == 1:
        dens = dens[:, None]
    return dens.T


def write_density(psi: WaveGrid, path) -> Path:
    """Header ``nx ny x0 y0 a b`` then ``ny`` rows of ``nx`` values.

    ``(x0, y0)`` is the coordinate of the first site in each direction; row
    ``j`` holds the sites with ``y = y0 + j b``.
    """
    path = Path(path)
    plane = density_plane(psi)
    ny, nx = plane.shape
    spec = psi.spec
    x0 = spec.axis_coords(0)[0]
    y0 = spec.axis_coords(1)[0] if spec.dims >= 2 else 0.0
    a, b = spec.lattice.a, spec.lattice.b
    with _open(path) as fh:
        fh.write(" ".join([str(nx), str(ny), fmt(x0), fmt(y0), fmt(a), fmt(b)]) + "\n")
        for row in plane:
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    return path


def read_density(path) -> tuple[dict, np.ndarray]:
    """Header fields and the (ny, nx) value array of a density file."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        data = np.loadtxt(fh, ndmin=2)
    header = {"nx": int(head[0]), "ny": int(head[1]), "x0": float(head[2]),
              "y0": float(head[3]), "a": float(head[4]), "b": float(head[5])}
    return header, data.reshape(header["ny"], header["nx"])


def grid_from_density(header: dict, plane: np.ndarray) -> WaveGrid:
    """Rebuild a real, non-negative 2-D wave grid whose density is ``plane``.

    Moments depend only on the density, so this is enough to recompute
    ``z``, ``sigma`` and ``s`` from a written file.
    """
    lat = LatticeParams(a=header["a"], b=header["b"], dims=2)
    origin = (int(round(-header["x0"] / header["a"])), int(round(-header["y0"] / header["b"])))
    spec = GridSpec((header["nx"], header["ny"]), lat, origin)
    return WaveGrid(spec, np.sqrt(np.asarray(plane, dtype=float).T).astype(complex))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(data: dict, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_rows(rows: list[dict], path) -> Path:
    """CSV of summary rows (union of keys, first-seen order)."""
    path = Path(path)
    keys: list[str] = []
    for row in rows:
        keys += [k for k in row if k not in keys]
    with _open(path) as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[k]) if k in row else "nan" for k in keys) + "\n")
    return path
