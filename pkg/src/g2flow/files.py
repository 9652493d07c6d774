"""Snapshot and CSV output.

Snapshot layout (little-endian): magic b"G2FS", u32 version = 1,
u8 ambient_dim, u8 k, u32 N, u8 rank, then float64 components in row-major
grid-then-index order.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, TruncatedFile, VersionMismatch
from .geometry import Field, GridSpec

MAGIC = b"G2FS"
VERSION = 1
_HEADER = struct.Struct("<4sIBBIB")


def write_snapshot(field: Field, path) -> None:
    spec = field.spec
    header = _HEADER.pack(MAGIC, VERSION, spec.ambient_dim, spec.k, spec.N, field.rank)
    data = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def read_snapshot(path, scheme: str = "central-4th") -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        if raw[:4] != MAGIC[: len(raw[:4])]:
            raise BadMagic(f"{path}: not a snapshot file")
        raise TruncatedFile(f"{path}: header is {len(raw)} bytes, need {_HEADER.size}")
    magic, version, dim, k, N, rank = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, this reader handles {VERSION}")
    spec = GridSpec(dim, k, N, scheme)
    shape = (spec.npts,) + (dim,) * rank
    want = int(np.prod(shape)) * 8
    body = raw[_HEADER.size :]
    if len(body) < want:
        raise TruncatedFile(f"{path}: {len(body)} data bytes, need {want}")
    values = np.frombuffer(body[:want], dtype="<f8").reshape(shape).astype(np.float64)
    return Field(spec, rank, values)


def write_csv(path, columns, rows, config_hash: str | None = None) -> None:
    """CSV with a header row; the config hash goes in a leading comment line."""
    with open(path, "w", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path):
    """(columns, rows as lists of strings, config hash or None)."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    h = None
    if lines and lines[0].startswith("# config_hash="):
        h = lines[0].split("=", 1)[1]
        lines = lines[1:]
    reader = list(csv.reader(lines))
    return reader[0], reader[1:], h


def gnuplot_script(csv_path, x: str, ys, title: str = "", logscale: bool = False) -> str:
    """gnuplot commands plotting columns ys against x from a monitor CSV.

    The script refers to the CSV by file name only, so keep it next to the data.
    """
    with open(csv_path) as fh:
        header = [ln for ln in fh.read().splitlines() if not ln.startswith("#")][0].split(",")
    col = {name: i + 1 for i, name in enumerate(header)}
    missing = [c for c in [x, *ys] if c not in col]
    if missing:
        raise KeyError(f"columns not in {csv_path}: {missing}")
    name = Path(csv_path).name
    plots = ", ".join(f"'{name}' using {col[x]}:{col[y]} with linespoints" for y in ys)
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{x}'",
    ]
    if logscale:
        lines.append("set logscale y")
    lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"
