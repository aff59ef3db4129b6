"""On-disk formats: binary snapshots, CSV series, JSON reports.

Snapshot layout (little-endian):
    b"PECF" | u32 version | u32 n | f64 L | f64 t | f64 alpha | f64 eps
    | n*n complex128, rows m1 = -n/2..n/2-1, columns m2 likewise
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import Grid, SpectralField

MAGIC = b"PECF"
VERSION = 1
_HEADER = struct.Struct("<4sII4d")

SERIES_COLUMNS = ("t", "l2", "lp4", "linf", "h_half", "h1", "h2",
                  "besov_b1_21", "energy_residual", "radius")


class FormatError(ValueError):
    pass


@dataclass
class Snapshot:
    grid: Grid
    field: SpectralField
    t: float
    alpha: float
    epsilon: float


def encode_snapshot(f: SpectralField, t: float, alpha: float, eps: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.n, g.L, t, alpha, eps)
    body = np.ascontiguousarray(np.fft.fftshift(f.coeffs), dtype="<c16").tobytes()
    return head + body


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise FormatError("truncated snapshot header")
    magic, version, n, L, t, alpha, eps = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    need = _HEADER.size + 16 * n * n
    if len(data) != need:
        raise FormatError(f"snapshot size {len(data)} != expected {need}")
    body = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(n, n)
    grid = Grid(n, L)
    coeffs = np.fft.ifftshift(body).astype(complex)
    return Snapshot(grid, SpectralField(grid, coeffs), t, alpha, eps)


def write_snapshot(path, f: SpectralField, t: float, alpha: float, eps: float) -> None:
    Path(path).write_bytes(encode_snapshot(f, t, alpha, eps))


def read_snapshot(path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def fmt(x) -> str:
    """Shortest round-trip decimal."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def series_csv(columns: dict, order=SERIES_COLUMNS) -> str:
    lens = {len(columns[c]) for c in order}
    if len(lens) != 1:
        raise ValueError("series columns have different lengths")
    lines = [",".join(order)]
    for i in range(lens.pop()):
        lines.append(",".join(fmt(columns[c][i]) for c in order))
    return "\n".join(lines) + "\n"


def table_csv(rows: list[dict], order) -> str:
    lines = [",".join(order)]
    for r in rows:
        lines.append(",".join(r[c] if isinstance(r[c], str) else fmt(r[c]) for c in order))
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    rows = Path(path).read_text().splitlines()
    head = rows[0].split(",")
    return head, [r.split(",") for r in rows[1:]]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no nan/inf; keep them as strings so the file stays strict
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def snapshot_name(i: int) -> str:
    return f"snap_{i:06d}.pecf"


def write_trajectory(directory, traj) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, t in enumerate(traj.times):
        p = d / snapshot_name(i)
        write_snapshot(p, traj.field(i), float(t), traj.alpha, traj.epsilon)
        paths.append(p)
    return paths


def read_trajectory(directory):
    from .evolution import Trajectory
    files = sorted(Path(directory).glob("snap_*.pecf"))
    if not files:
        raise FormatError(f"no snapshots in {directory}")
    snaps = [read_snapshot(p) for p in files]
    grid = snaps[0].grid
    for s in snaps[1:]:
        if s.grid != grid or s.alpha != snaps[0].alpha or s.epsilon != snaps[0].epsilon:
            raise FormatError("snapshots disagree on grid or parameters")
    return Trajectory(grid, np.array([s.t for s in snaps]),
                      np.stack([s.field.coeffs for s in snaps]),
                      snaps[0].alpha, snaps[0].epsilon)
