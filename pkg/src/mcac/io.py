"""File formats: the FLD1 binary snapshot, PGM slices, CSV, report JSON.

FLD1 layout, all little-endian:
  magic "FLD1" | u32 dim | u32 size per dim | u8 placement (0 cell, 1 vertex)
  | float64 values, row-major.
A 2x2 field is exactly 49 bytes.  Reads validate magic, completeness, and
declared-vs-actual payload size, and round-trip bit-exactly.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .diagnostics import RunReport
from .errors import BadMagic, SizeMismatch, TruncatedFile
from .field import CELL, VERTEX, Field, GridSpec
from .harness import ConvergenceTable

FLD_MAGIC = b"FLD1"
_PLACEMENT_CODE = {CELL: 0, VERTEX: 1}
_PLACEMENT_NAME = {0: CELL, 1: VERTEX}


def write_field_snapshot(u: Field, path: str | Path) -> None:
    grid = u.grid
    header = FLD_MAGIC + struct.pack("<I", grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.n_per_dim)
    header += struct.pack("<B", _PLACEMENT_CODE[grid.placement])
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_field_snapshot(path: str | Path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != FLD_MAGIC:
        raise BadMagic(f"{path}: expected magic {FLD_MAGIC!r}")
    pos = 4
    if len(raw) < pos + 4:
        raise TruncatedFile(f"{path}: missing dimension count")
    (dim,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if dim not in (2, 3):
        raise SizeMismatch(f"{path}: dim {dim} is not 2 or 3")
    if len(raw) < pos + 4 * dim + 1:
        raise TruncatedFile(f"{path}: header ends before sizes/placement")
    sizes = struct.unpack_from(f"<{dim}I", raw, pos)
    pos += 4 * dim
    (placement_code,) = struct.unpack_from("<B", raw, pos)
    pos += 1
    if placement_code not in _PLACEMENT_NAME:
        raise SizeMismatch(f"{path}: unknown placement code {placement_code}")
    count = math.prod(sizes)
    expected = pos + 8 * count
    if len(raw) < expected:
        raise TruncatedFile(
            f"{path}: payload has {len(raw) - pos} bytes, need {8 * count}"
        )
    if len(raw) > expected:
        raise SizeMismatch(
            f"{path}: {len(raw) - expected} trailing bytes beyond declared sizes"
        )
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=pos)
    grid = GridSpec(dim, tuple(int(n) for n in sizes), _PLACEMENT_NAME[placement_code])
    return Field(grid, values.astype(np.float64))


def write_pgm_slice(u: Field, path: str | Path, z_index: int | None = None) -> None:
    """Binary PGM (P5, maxval 255) of a 2D field or one z-slice of a 3D one.

    Pixel value is round-half-away-from-zero of 255 * (clamp(u, -1, 1) + 1)/2,
    so u = 0 maps to 128.
    """
    a = u.array
    if u.grid.dim == 3:
        if z_index is None:
            raise ValueError("3D field needs a z_index to slice")
        a = a[:, :, z_index]
    elif z_index is not None:
        raise ValueError("z_index only applies to 3D fields")
    scaled = 255.0 * (np.clip(a, -1.0, 1.0) + 1.0) / 2.0
    pixels = np.floor(scaled + 0.5).astype(np.uint8)  # half away from zero
    rows, cols = pixels.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def _fmt(x) -> str:
    # repr of a float is the shortest round-trip decimal in Python 3
    return repr(float(x))


def series_columns(report: RunReport) -> list[str]:
    cols = ["step", "t", "mass", "sup_norm", "energy", "lambda", "g_integral"]
    if any(r.radius is not None for r in report.records):
        cols.append("radius")
    return cols


def write_series_csv(report: RunReport, path: str | Path) -> None:
    cols = series_columns(report)
    lines = [",".join(cols)]
    for r in report.records:
        row = [
            str(r.step),
            _fmt(r.t),
            _fmt(r.mass),
            _fmt(r.sup_norm),
            _fmt(r.energy),
            _fmt(r.lambda_value),
            _fmt(r.g_integral),
        ]
        if cols[-1] == "radius":
            row.append(_fmt(r.radius if r.radius is not None else math.nan))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_table_csv(table: ConvergenceTable, path: str | Path) -> None:
    lines = ["resolution,l2_error,l2_rate,linf_error,linf_rate"]
    for row in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt(row.resolution),
                    _fmt(row.l2_error),
                    "" if row.l2_rate is None else _fmt(row.l2_rate),
                    _fmt(row.linf_error),
                    "" if row.linf_rate is None else _fmt(row.linf_rate),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_report_json(
    report: RunReport, verdicts: dict, summary: dict, path: str | Path
) -> None:
    doc = {
        "config": report.config,
        "summary": {k: _json_safe(v) for k, v in summary.items()},
        "verdicts": verdicts,
        "snapshots": [{"t": t, "path": str(p)} for t, p in report.snapshots],
    }
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
