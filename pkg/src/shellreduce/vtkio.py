"""Legacy-VTK structured-grid ASCII meshes and RFC-4180 CSV tables.

The VTK writer targets the classic version-3 ASCII dialect (STRUCTURED_GRID
dataset) that any mesh viewer still reads.  Coordinates print with %.17g so
a write/read round trip reproduces every float64 bit-exactly.  Optional
per-node scalar fields ride along as POINT_DATA.

The grid axes convention: the file's x-direction runs over the second array
index (n2) and the y-direction over the first (n1), i.e. DIMENSIONS n2 n1 1
with points listed x-fastest, which puts array entry [i, j] at structured
coordinate (j, i).
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ConfigError


def write_vtk(path, positions, fields=None, comment="surface mesh"):
    """Write nodal positions (n1, n2, 3) and optional scalar fields."""
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 3 or positions.shape[-1] != 3:
        raise ConfigError("positions must have shape (n1, n2, 3), got %s"
                          % (positions.shape,))
    n1, n2, _ = positions.shape
    lines = [
        "# vtk DataFile Version 3.0",
        str(comment).splitlines()[0] if comment else "surface mesh",
        "ASCII",
        "DATASET STRUCTURED_GRID",
        "DIMENSIONS %d %d 1" % (n2, n1),
        "POINTS %d double" % (n1 * n2),
    ]
    for i in range(n1):
        for j in range(n2):
            x, y, z = positions[i, j]
            lines.append("%.17g %.17g %.17g" % (x, y, z))
    if fields:
        lines.append("POINT_DATA %d" % (n1 * n2))
        for name in fields:
            values = np.asarray(fields[name], dtype=float)
            if values.shape != (n1, n2):
                raise ConfigError(
                    "field %r must have shape (%d, %d), got %s"
                    % (name, n1, n2, values.shape))
            lines.append("SCALARS %s double 1" % name)
            lines.append("LOOKUP_TABLE default")
            for i in range(n1):
                for j in range(n2):
                    lines.append("%.17g" % values[i, j])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Read a structured-grid file written by write_vtk.

    Returns (positions, fields) with positions shaped (n1, n2, 3) and
    fields a dict of (n1, n2) arrays (empty when the file has none).
    """
    with open(path) as fh:
        tokens_by_line = [line.split() for line in fh]
    flat = [tok for line in tokens_by_line for tok in line]

    def find(keyword):
        for pos, tok in enumerate(flat):
            if tok == keyword:
                return pos
        return -1

    k = find("DATASET")
    if k < 0 or k + 1 >= len(flat) or flat[k + 1] != "STRUCTURED_GRID":
        raise ConfigError("%s: not an ASCII STRUCTURED_GRID file" % path)
    k = find("DIMENSIONS")
    if k < 0:
        raise ConfigError("%s: missing DIMENSIONS" % path)
    n2, n1, nz = (int(t) for t in flat[k + 1:k + 4])
    if nz != 1:
        raise ConfigError("%s: expected a single sheet, got nz=%d" % (path, nz))
    k = find("POINTS")
    if k < 0:
        raise ConfigError("%s: missing POINTS" % path)
    count = int(flat[k + 1])
    if count != n1 * n2:
        raise ConfigError("%s: POINTS count %d does not match dimensions"
                          % (path, count))
    start = k + 3
    coords = np.array([float(t) for t in flat[start:start + 3 * count]])
    if coords.size != 3 * count:
        raise ConfigError("%s: truncated coordinate block" % path)
    positions = coords.reshape(n1, n2, 3)

    fields = {}
    idx = start + 3 * count
    while idx < len(flat):
        if flat[idx] == "SCALARS":
            name = flat[idx + 1]
            idx += 4  # SCALARS name type ncomp
            if idx < len(flat) and flat[idx] == "LOOKUP_TABLE":
                idx += 2
            vals = np.array([float(t) for t in flat[idx:idx + count]])
            if vals.size != count:
                raise ConfigError("%s: truncated field %r" % (path, name))
            fields[name] = vals.reshape(n1, n2)
            idx += count
        else:
            idx += 1
    return positions, fields


def write_csv(path, header, rows):
    """RFC-4180 CSV with a header row; floats print with %.17g."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(value):
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, (np.floating,)):
        return "%.17g" % float(value)
    return value


def read_csv(path):
    """(header, rows) with every cell kept as text."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError("%s: empty CSV" % path)
    return rows[0], rows[1:]
