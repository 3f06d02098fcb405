"""Bit-specified file formats: RDK arrays, PGM previews, Matrix Market, CSV.

The RDK container is the reproducibility contract for images and sinograms:
a fixed 16-byte header followed by IEEE-754 binary64 little-endian values in
row-major order.  Write-then-read reproduces values bitwise.  Floats in the
text formats are written with 17 significant digits so they round-trip
binary64 exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .operators import SparseOperator

__all__ = [
    "RDK_MAGIC",
    "KIND_IMAGE",
    "KIND_SINOGRAM",
    "RdkFormatError",
    "write_rdk",
    "read_rdk",
    "write_pgm",
    "write_matrix_market",
    "read_matrix_market",
    "write_report_csv",
    "fmt17",
]

RDK_MAGIC = b"RDK1"
KIND_IMAGE = 0
KIND_SINOGRAM = 1

_HEADER = struct.Struct("<III")

MM_HEADER = "%%MatrixMarket matrix coordinate real general"


class RdkFormatError(ValueError):
    """Raised when an RDK file violates the format contract."""


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (binary64 round-trip safe)."""
    return format(float(x), ".17g")


def write_rdk(path, kind: int, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    if kind not in (KIND_IMAGE, KIND_SINOGRAM):
        raise ValueError(f"kind must be 0 (image) or 1 (sinogram), got {kind!r}")
    if values.ndim != 2:
        raise ValueError(f"values must be 2-D, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    with open(path, "wb") as fh:
        fh.write(RDK_MAGIC)
        fh.write(_HEADER.pack(kind, values.shape[0], values.shape[1]))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_rdk(path) -> tuple[int, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + _HEADER.size:
        raise RdkFormatError(
            f"file too short for an RDK header ({len(blob)} bytes)")
    if blob[:4] != RDK_MAGIC:
        raise RdkFormatError(f"bad magic {blob[:4]!r}, expected {RDK_MAGIC!r}")
    kind, dim0, dim1 = _HEADER.unpack_from(blob, 4)
    if kind not in (KIND_IMAGE, KIND_SINOGRAM):
        raise RdkFormatError(f"unknown kind {kind}")
    expected = dim0 * dim1 * 8
    actual = len(blob) - 4 - _HEADER.size
    if actual != expected:
        raise RdkFormatError(
            f"payload has {actual} bytes, expected {expected} "
            f"for {dim0}x{dim1} binary64 values")
    values = np.frombuffer(blob, dtype="<f8", offset=16).reshape(dim0, dim1)
    values = values.astype(np.float64, copy=True)
    if not np.all(np.isfinite(values)):
        raise RdkFormatError("payload contains non-finite values")
    return int(kind), values


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM with linear min-max scaling.

    The recorded scale is kept in a comment line '# min=<v> max=<v>'.  A
    constant field maps to all zeros.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"values must be 2-D, got shape {values.shape}")
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax > vmin:
        scaled = np.rint((values - vmin) / (vmax - vmin) * 255.0)
    else:
        scaled = np.zeros_like(values)
    raster = scaled.astype(np.uint8)
    header = (f"P5\n# min={fmt17(vmin)} max={fmt17(vmax)}\n"
              f"{values.shape[1]} {values.shape[0]}\n255\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(raster.tobytes())


def write_matrix_market(path, op: SparseOperator) -> None:
    """Coordinate-format export; row q * n_s + p + 1, column i * n_x + j + 1."""
    rows = np.repeat(np.arange(op.n_rows, dtype=np.int64),
                     np.diff(op.row_ptr)) + 1
    cols = op.cols + 1
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MM_HEADER + "\n")
        fh.write(f"{op.n_rows} {op.n_cols} {op.nnz}\n")
        chunk = 65536
        for start in range(0, op.nnz, chunk):
            stop = min(start + chunk, op.nnz)
            lines = [f"{rows[k]} {cols[k]} {fmt17(op.weights[k])}"
                     for k in range(start, stop)]
            fh.write("\n".join(lines))
            fh.write("\n")


def read_matrix_market(path):
    """Parse a coordinate-format file back into (shape, rows, cols, values).

    Indices are returned 0-based, entries in file order.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != MM_HEADER:
            raise ValueError(f"unsupported Matrix Market header: {header!r}")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        n_rows, n_cols, nnz = (int(v) for v in line.split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        values = np.empty(nnz)
        for k in range(nnz):
            r, c, v = fh.readline().split()
            rows[k] = int(r) - 1
            cols[k] = int(c) - 1
            values[k] = float(v)
    return (n_rows, n_cols), rows, cols, values


def write_report_csv(path, report) -> None:
    """Single-row CSV of an ExperimentReport; extras become extra columns.

    Uses '.' decimals and 17-significant-digit floats regardless of locale.
    """
    cfg = report.config
    columns = [
        ("example_id", str(cfg.example_id)),
        ("n_x", str(cfg.n_x)),
        ("n_s", str(cfg.n_s)),
        ("n_phi", str(cfg.n_phi)),
        ("weight_kind", cfg.weight_kind),
        ("angle_offset_fraction", fmt17(cfg.angle_offset_fraction)),
        ("mask_radius", fmt17(cfg.mask_radius)),
        ("rel_error", fmt17(report.rel_error)),
        ("error_is_absolute", str(int(report.error_is_absolute))),
        ("runtime_seconds", fmt17(report.runtime_seconds)),
    ]
    for key in sorted(report.extras):
        columns.append((key, fmt17(report.extras[key])))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(name for name, _ in columns) + "\n")
        fh.write(",".join(value for _, value in columns) + "\n")
