"""Grid file format.

A field is stored as ``<stem>.json`` (metadata, schema ``wigner-grid/1``) next to
``<stem>.f64``, a raw little-endian float64 raster in row-major order with x varying
fastest.  Complex fields interleave real and imaginary parts per point.  CSV export
writes ``x,p,value`` lines (``x,p,re,im`` for complex fields) with 17 significant
digits in the same point order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import PhaseSpaceGrid, WignerField

__all__ = ["SCHEMA", "write_grid", "read_grid", "write_csv", "raster_bytes"]

SCHEMA = "wigner-grid/1"


def _kind(field_: WignerField) -> str:
    return "real" if field_.is_real else "complex"


def raster_bytes(field_: WignerField) -> bytes:
    # values[ix, ip]; transposing makes x the fastest index in C order
    data = np.ascontiguousarray(field_.values.T)
    if field_.is_real:
        return data.astype("<f8").tobytes()
    inter = np.empty(data.shape + (2,), dtype="<f8")
    inter[..., 0] = data.real
    inter[..., 1] = data.imag
    return inter.tobytes()


def write_grid(field_: WignerField, stem: str | Path, fmt: str = "f64") -> list[Path]:
    """Write the metadata sidecar plus the raster (``fmt="f64"``) or CSV (``"csv"``)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    meta = {"schema": SCHEMA, **field_.grid.to_dict(), "label": field_.label, "kind": _kind(field_)}
    meta_path = stem.with_suffix(".json")
    meta_path.write_text(json.dumps(meta, indent=2))
    if fmt == "f64":
        data_path = stem.with_suffix(".f64")
        data_path.write_bytes(raster_bytes(field_))
    elif fmt == "csv":
        data_path = write_csv(field_, stem.with_suffix(".csv"))
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'f64' or 'csv'")
    return [meta_path, data_path]


def write_csv(field_: WignerField, path: str | Path) -> Path:
    path = Path(path)
    grid = field_.grid
    X, P = np.meshgrid(grid.xs, grid.ps)  # shape (np, nx), x fastest
    vals = field_.values.T
    if field_.is_real:
        cols = [X.ravel(), P.ravel(), vals.ravel()]
    else:
        cols = [X.ravel(), P.ravel(), vals.real.ravel(), vals.imag.ravel()]
    np.savetxt(path, np.column_stack(cols), fmt="%.17g", delimiter=",")
    return path


def read_grid(stem: str | Path) -> WignerField:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    if meta.get("schema") != SCHEMA:
        raise ValueError(f"{stem}: unsupported schema {meta.get('schema')!r}")
    grid = PhaseSpaceGrid(
        meta["x_min"], meta["x_max"], meta["p_min"], meta["p_max"], meta["nx"], meta["np"]
    )
    raw = np.fromfile(stem.with_suffix(".f64"), dtype="<f8")
    if meta["kind"] == "real":
        values = raw.reshape(grid.np, grid.nx).T
    elif meta["kind"] == "complex":
        pairs = raw.reshape(grid.np, grid.nx, 2)
        values = (pairs[..., 0] + 1j * pairs[..., 1]).T
    else:
        raise ValueError(f"{stem}: unknown kind {meta['kind']!r}")
    return WignerField(grid, values.astype(float if meta["kind"] == "real" else complex), meta["label"])
