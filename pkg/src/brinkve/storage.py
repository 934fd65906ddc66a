"""CSV formats for saturation/pressure fields and report tables.

Field file::

    # format=1 nx=<nx> nz=<nz> time=<t>
    <nz rows of nx comma-separated values, bottom row first>

Values carry 17 significant digits, so a write/read cycle is bit exact.
Report tables start with a ``# format=1 ...`` comment line followed by a CSV
header row.
"""
import csv
import os

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1
CONVERGENCE_COLUMNS = ("gamma", "e_gamma", "grad_pz_norm", "q_norm", "energy_final",
                       "mass_residual_max")


def _header(**items):
    return "# " + " ".join(f"{k}={v}" for k, v in items.items())


def _parse_header(line, lineno=1):
    if not line.startswith("#"):
        raise FormatError("missing '#' header", lineno)
    items = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise FormatError(f"malformed header token {token!r}", lineno)
        items[key] = value
    return items


def write_field(values, path, time=0.0):
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise FormatError("field must be two-dimensional")
    nx, nz = values.shape
    lines = [_header(format=FORMAT_VERSION, nx=nx, nz=nz, time=repr(float(time)))]
    for j in range(nz):
        lines.append(",".join("%.17g" % v for v in values[:, j]))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path):
    """Return ``(values, time)`` with values of shape (nx, nz)."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    head = _parse_header(lines[0])
    try:
        nx, nz = int(head["nx"]), int(head["nz"])
        time = float(head.get("time", "0"))
        version = int(head.get("format", FORMAT_VERSION))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}", 1) from None
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format {version}", 1)
    if nx < 1 or nz < 1:
        raise FormatError("nx, nz must be positive", 1)
    rows = lines[1:]
    if len(rows) != nz:
        raise FormatError(f"expected {nz} rows, found {len(rows)}", min(len(rows), nz) + 2)
    out = np.empty((nx, nz))
    for j, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != nx:
            raise FormatError(f"expected {nx} values, found {len(cells)}", j + 2)
        try:
            out[:, j] = [float(c) for c in cells]
        except ValueError as exc:
            raise FormatError(str(exc), j + 2) from None
    return out, time


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, columns, rows, **meta):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(_header(format=FORMAT_VERSION, **meta) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def read_table(path):
    """Return ``(meta, rows)``; rows are dicts of floats."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    meta = _parse_header(lines[0])
    reader = csv.reader(lines[1:])
    try:
        columns = next(reader)
    except StopIteration:
        raise FormatError("missing column header", 2) from None
    rows = []
    for n, row in enumerate(reader, start=3):
        if len(row) != len(columns):
            raise FormatError(f"expected {len(columns)} values, found {len(row)}", n)
        try:
            rows.append({c: float(v) for c, v in zip(columns, row)})
        except ValueError as exc:
            raise FormatError(str(exc), n) from None
    return meta, rows


def snapshot_name(kind, index):
    return f"{kind}_{index:03d}.csv"


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
