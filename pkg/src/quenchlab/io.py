"""Covariance file formats.

CSV: header ``x,y,re,im`` with 1-based site labels.  Listing only the upper
triangle is enough; missing lower entries are filled by Hermiticity.

Binary: ``b"QLCV1"``, little-endian ``u32 L``, then ``L*L`` complex64 values in
row-major order.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "MAGIC",
    "write_covariance_csv",
    "read_covariance_csv",
    "write_covariance_binary",
    "read_covariance_binary",
    "load_covariance",
    "save_covariance",
    "write_matrix_csv",
    "write_series_csv",
]

MAGIC = b"QLCV1"
_FMT = "{:.17g}"


def write_matrix_csv(path, mat, upper_only: bool = False) -> None:
    """Write ``x,y,re,im`` rows for a square complex matrix."""
    mat = np.asarray(mat)
    L = mat.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re", "im"])
        for x in range(L):
            for y in range(x if upper_only else 0, L):
                v = mat[x, y]
                w.writerow([x + 1, y + 1, _FMT.format(v.real), _FMT.format(v.imag)])


def write_covariance_csv(path, gamma, upper_only: bool = True) -> None:
    write_matrix_csv(path, gamma, upper_only)


def read_covariance_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y", "re", "im"]:
            raise ValueError(f"{path}: expected header x,y,re,im")
        for r in reader:
            rows.append((int(r["x"]), int(r["y"]), float(r["re"]), float(r["im"])))
    if not rows:
        raise ValueError(f"{path}: no entries")
    L = max(max(x, y) for x, y, _, _ in rows)
    g = np.zeros((L, L), dtype=complex)
    seen = np.zeros((L, L), dtype=bool)
    for x, y, re, im in rows:
        if x < 1 or y < 1:
            raise ValueError(f"{path}: site labels are 1-based")
        g[x - 1, y - 1] = re + 1j * im
        seen[x - 1, y - 1] = True
    fill = seen.T & ~seen
    g[fill] = g.T.conj()[fill]
    return g


def write_covariance_binary(path, gamma) -> None:
    g = np.ascontiguousarray(gamma, dtype="<c8")
    L = g.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", L))
        fh.write(g.tobytes(order="C"))


def read_covariance_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head != MAGIC:
            raise ValueError(f"{path}: not a QLCV1 covariance file")
        (L,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != L * L:
        raise ValueError(f"{path}: expected {L * L} entries, found {data.size}")
    return data.reshape(L, L).astype(complex)


def load_covariance(path) -> np.ndarray:
    """Read either format, detected from the leading bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_covariance_binary(path)
    return read_covariance_csv(path)


def save_covariance(path, gamma, binary: bool | None = None) -> Path:
    """Write CSV, or the binary dump for ``L >= 2000`` or a ``.bin`` suffix."""
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".bin" or np.asarray(gamma).shape[0] >= 2000
    if binary:
        write_covariance_binary(path, gamma)
    else:
        write_covariance_csv(path, gamma)
    return path


def write_series_csv(path, header, *columns) -> None:
    """Columns of reals with full double precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_FMT.format(float(v)) for v in row])
