"""Field serialization (SBMF, CSV, legacy VTK) and voxel ingestion.

SBMF is a small self-describing container: a text header terminated by an
``end_header`` line, then the raw little-endian payload in row-major node
order with the last axis fastest.  Headers round-trip bit-exactly (floats
are written with shortest-roundtrip repr).

    SBMF1
    dims: 64 64 64
    spacing: 1.0 1.0 1.0
    origin: 0.0 0.0 0.0
    coord_system: cartesian
    value_kind: real64
    node_order: row-major, last axis fastest
    endianness: little
    end_header
    <payload bytes>
"""

from __future__ import annotations

import io as _io
from pathlib import Path

import numpy as np

from .grid import ComplexScalarField, Grid, ScalarField

MAGIC = b"SBMF1"
VALUE_KINDS = {
    "real64": ("<f8", 8),
    "complex128": ("<c16", 16),
    "label8": ("<u1", 1),
}
NODE_ORDER = "row-major, last axis fastest"


def _format_floats(vals) -> str:
    return " ".join(repr(float(v)) for v in vals)


def write_sbmf(path, field, value_kind: str | None = None) -> None:
    """Write a scalar, complex, or label field; bit-exact round trip."""
    grid = field.grid
    values = field.values
    if value_kind is None:
        value_kind = "complex128" if isinstance(field, ComplexScalarField) else "real64"
    dtype, _ = VALUE_KINDS[value_kind]
    payload = np.ascontiguousarray(values, dtype=dtype)
    header = "\n".join(
        [
            MAGIC.decode(),
            "dims: " + " ".join(str(n) for n in grid.dims),
            "spacing: " + _format_floats(grid.spacing),
            "origin: " + _format_floats(grid.origin),
            f"coord_system: {grid.coord_system}",
            f"value_kind: {value_kind}",
            f"node_order: {NODE_ORDER}",
            "endianness: little",
            "end_header",
            "",
        ]
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes())


class SbmfError(ValueError):
    pass


def read_sbmf(path):
    """Read an SBMF file into (grid, values ndarray, value_kind)."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise SbmfError(f"bad magic at byte 0: expected {MAGIC!r}, got {raw[:5]!r}")
    marker = b"end_header\n"
    pos = raw.find(marker)
    if pos < 0:
        raise SbmfError("missing end_header line")
    header = raw[: pos].decode("ascii").splitlines()[1:]
    payload = raw[pos + len(marker):]

    fields = {}
    for line in header:
        if not line.strip():
            continue
        key, _, val = line.partition(":")
        fields[key.strip()] = val.strip()
    try:
        dims = tuple(int(t) for t in fields["dims"].split())
        spacing = tuple(float(t) for t in fields["spacing"].split())
        origin = tuple(float(t) for t in fields["origin"].split())
        coord = fields["coord_system"]
        kind = fields["value_kind"]
    except KeyError as exc:
        raise SbmfError(f"missing header field {exc}") from exc
    if kind not in VALUE_KINDS:
        raise SbmfError(f"unknown value_kind {kind!r}")
    if fields.get("endianness", "little") != "little":
        raise SbmfError("only little-endian payloads are supported")
    dtype, size = VALUE_KINDS[kind]
    expected = int(np.prod(dims)) * size
    if len(payload) != expected:
        raise SbmfError(
            f"payload length mismatch: expected {expected} bytes, got {len(payload)} "
            f"(header ends at byte {pos + len(marker)})"
        )
    grid = Grid(dims=dims, spacing=spacing, coord_system=coord, origin=origin)
    values = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return grid, values.copy(), kind


def load_voxels(path) -> ScalarField:
    """Voxel label ingestion: labels preserved exactly as float values."""
    grid, values, kind = read_sbmf(path)
    if kind != "label8":
        raise SbmfError(f"expected a label8 voxel file, got value_kind {kind!r}")
    return ScalarField(grid, values.astype(np.float64))


def write_csv_points(path, field, header=None) -> None:
    """CSV rows (coords..., value); complex fields get re and im columns."""
    grid = field.grid
    meshes = grid.meshes()
    cols = [m.ravel() for m in meshes]
    values = field.values
    names = ["x", "y", "z"][: grid.ndim] if grid.coord_system == "cartesian" else ["r", "z"]
    if np.iscomplexobj(values):
        cols += [values.real.ravel(), values.imag.ravel()]
        names += ["re", "im"]
    else:
        cols.append(values.ravel())
        names.append("value")
    with open(path, "w") as fh:
        fh.write(",".join(names if header is None else header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_vtk_structured(path, fields: dict, grid: Grid) -> None:
    """Legacy-ASCII STRUCTURED_POINTS file readable by standard viewers.

    fields maps names to ScalarField/ComplexScalarField; complex fields are
    emitted as two scalar arrays named <name>_re and <name>_im.  VTK's
    x-fastest ordering is handled by transposing the C-ordered values.
    """
    dims = list(grid.dims) + [1] * (3 - grid.ndim)
    spacing = list(grid.spacing) + [1.0] * (3 - grid.ndim)
    origin = list(grid.origin) + [0.0] * (3 - grid.ndim)
    npts = int(np.prod(dims))

    def scalars(name, arr):
        out = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        flat = arr.T.ravel()  # VTK wants x fastest; C order has last axis fastest
        out.extend(" ".join(f"{v:.10g}" for v in flat[i : i + 6]) for i in range(0, len(flat), 6))
        return out

    lines = [
        "# vtk DataFile Version 3.0",
        "sbmlib field export",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}",
        f"ORIGIN {origin[0]:.10g} {origin[1]:.10g} {origin[2]:.10g}",
        f"SPACING {spacing[0]:.10g} {spacing[1]:.10g} {spacing[2]:.10g}",
        f"POINT_DATA {npts}",
    ]
    for name, field in fields.items():
        vals = field.values
        if np.iscomplexobj(vals):
            lines += scalars(f"{name}_re", vals.real)
            lines += scalars(f"{name}_im", vals.imag)
        else:
            lines += scalars(name, vals)
    Path(path).write_text("\n".join(lines) + "\n")


def export_field(field, path, fmt: str = "sbmf", name: str = "field") -> None:
    """Write one field in the chosen format."""
    if not np.all(np.isfinite(np.asarray(field.values, dtype=np.complex128).view(np.float64))):
        raise ValueError("refusing to export a non-finite field")
    if fmt == "sbmf":
        write_sbmf(path, field)
    elif fmt == "csv_points":
        write_csv_points(path, field)
    elif fmt == "vtk_structured":
        write_vtk_structured(path, {name: field}, field.grid)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
