"""Raw grid files, trace CSVs and 8-bit previews.

Binary layout: 8-byte magic ``ROTOPAT1``, two little-endian int64 dims,
one float64 spacing, then dims[0] * dims[1] little-endian float64 values in
row-major order (first index slowest).
"""
from __future__ import annotations
import os
import struct

import numpy as np
from PIL import Image

from .acoustics import BoundaryTrace
from .errors import ConfigError
from .geometry import BoundaryParametrization, Grid, ScalarField

MAGIC = b"ROTOPAT1"
HEADER = struct.Struct("<8sqqd")


def write_array(path: str, values: np.ndarray, spacing: float) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ConfigError("only 2-D arrays can be written")
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, values.shape[0], values.shape[1], float(spacing)))
        f.write(values.tobytes(order="C"))


def read_array(path: str) -> tuple[np.ndarray, float]:
    with open(path, "rb") as f:
        head = f.read(HEADER.size)
        if len(head) != HEADER.size:
            raise ConfigError(f"{path}: truncated header")
        magic, n0, n1, spacing = HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != n0 * n1:
        raise ConfigError(f"{path}: expected {n0 * n1} values, found {data.size}")
    return data.reshape(n0, n1).astype(float), spacing


def write_grid(path: str, field: ScalarField) -> None:
    write_array(path, field.values, field.grid.h)


def read_grid(path: str, grid: Grid) -> ScalarField:
    values, spacing = read_array(path)
    if values.shape != grid.shape or abs(spacing - grid.h) > 1e-12 * grid.h:
        raise ConfigError(f"{path}: grid {values.shape}/h={spacing} does not match "
                          f"{grid.shape}/h={grid.h}")
    return ScalarField(grid, values)


def write_trace(path: str, trace: BoundaryTrace) -> None:
    write_array(path, trace.values, trace.dt)


def read_trace(path: str, boundary: BoundaryParametrization) -> BoundaryTrace:
    values, dt = read_array(path)
    return BoundaryTrace(values, dt, boundary)


def write_trace_csv(path: str, trace: BoundaryTrace) -> None:
    nt, nb = trace.values.shape
    times = np.repeat(trace.times, nb)
    index = np.tile(np.arange(nb), nt)
    rows = np.column_stack([times, index, trace.values.ravel()])
    np.savetxt(path, rows, fmt=["%.17g", "%d", "%.17g"], delimiter=",",
               header="time,angle_index,value", comments="")


def write_preview(path: str, values: np.ndarray) -> None:
    """Grayscale PNG, y up, linear min-max scaling."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    img = np.round(255 * scaled).astype(np.uint8).T[::-1]
    Image.fromarray(np.ascontiguousarray(img)).save(path)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
