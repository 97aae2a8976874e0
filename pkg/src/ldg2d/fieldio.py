"""Field dumps, tabular outputs and the legacy-VTK export.

A field dump is a single file: one JSON header line describing the grid,
domain and coupling constants, then the per-site records in row-major order
(five coefficients per site, Exterior sites as zeros).  The payload is either
text CSV or little-endian 64-bit floats, declared in the header; the binary
form round-trips bit-exactly.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from . import manifold, qtensor
from .grid import Domain, Field, build_grid
from .potential import derive_params

FORMAT_NAME = "ldg2d-field"
FORMAT_VERSION = 1


class DumpCorrupt(ValueError):
    """Field dump is unreadable, truncated or of the wrong version."""


def atomic_write(path, data):
    """Write bytes (or text) to ``path`` via a temp file + rename."""
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-ldg2d-")
    try:
        with os.fdopen(fd, mode) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(field, payload):
    dom = field.grid.domain
    head = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "payload": payload,
        "nx": field.grid.nx,
        "ny": field.grid.ny,
        "n": field.grid.n,
        "h": field.grid.h,
        "epsilon": field.epsilon,
        "material": {"a": field.params.a, "b": field.params.b, "c": field.params.c},
        "domain": {
            "kind": dom.kind,
            "center": list(dom.center),
            "radius": dom.radius,
        },
    }
    if dom.kind == "annulus":
        head["domain"]["inner_radius"] = dom.inner_radius
    return head


def dump_field(field, path, payload="f64le"):
    """Write a field dump; ``payload`` is 'f64le' (default) or 'csv'."""
    if payload not in ("f64le", "csv"):
        raise ValueError(f"unknown payload {payload!r}")
    head = json.dumps(_header(field, payload)).encode() + b"\n"
    if payload == "f64le":
        body = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    else:
        rows = field.values.reshape(-1, 5)
        body = "\n".join(
            ",".join("%.17g" % x for x in row) for row in rows
        ).encode() + b"\n"
    atomic_write(path, head + body)


def load_field(path):
    """Read a field dump back into a :class:`Field`.

    The grid classification is rebuilt deterministically from the recorded
    domain and resolution.  Raises :class:`DumpCorrupt` on malformed input.
    """
    with open(path, "rb") as handle:
        header_line = handle.readline()
        body = handle.read()
    try:
        head = json.loads(header_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise DumpCorrupt(f"unreadable header: {err}") from err
    if head.get("format") != FORMAT_NAME:
        raise DumpCorrupt("not a field dump")
    if head.get("format_version") != FORMAT_VERSION:
        raise DumpCorrupt(
            f"format version {head.get('format_version')} != {FORMAT_VERSION}"
        )
    try:
        dom_spec = head["domain"]
        domain = Domain(
            kind=dom_spec["kind"],
            radius=float(dom_spec["radius"]),
            center=tuple(dom_spec["center"]),
            inner_radius=float(dom_spec.get("inner_radius", 0.0)),
        )
        grid = build_grid(domain, int(head["n"]))
        params = derive_params(**head["material"])
        epsilon = float(head["epsilon"])
        nx, ny = int(head["nx"]), int(head["ny"])
        payload = head["payload"]
    except (KeyError, TypeError, ValueError) as err:
        raise DumpCorrupt(f"bad header fields: {err}") from err
    if (ny, nx) != grid.kind.shape:
        raise DumpCorrupt("header dimensions disagree with the domain/n pair")
    count = ny * nx * 5
    if payload == "f64le":
        if len(body) != count * 8:
            raise DumpCorrupt(
                f"payload holds {len(body)} bytes, expected {count * 8}"
            )
        values = np.frombuffer(body, dtype="<f8").astype(float).reshape(ny, nx, 5)
    elif payload == "csv":
        try:
            flat = np.array(
                [
                    float(x)
                    for line in body.decode().split()
                    for x in line.split(",")
                ]
            )
        except (UnicodeDecodeError, ValueError) as err:
            raise DumpCorrupt(f"bad CSV payload: {err}") from err
        if flat.size != count:
            raise DumpCorrupt(f"payload holds {flat.size} values, expected {count}")
        values = flat.reshape(ny, nx, 5)
    else:
        raise DumpCorrupt(f"unknown payload {payload!r}")
    return Field(grid=grid, values=values, epsilon=epsilon, params=params)


def write_csv(path, header_cols, rows):
    """Small CSV writer (atomic)."""
    lines = [",".join(header_cols)]
    for row in rows:
        lines.append(",".join("%.17g" % x if isinstance(x, float) else str(x) for x in row))
    atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload):
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def export_vtk(field, path):
    """Legacy-VTK structured-points export of three scalar diagnostics.

    Writes biaxiality, |Q| and distance-to-vacuum on the full lattice (zeros
    on Exterior sites) for external visualization.
    """
    v = field.values
    beta = qtensor.biaxiality(v)
    absq = qtensor.norm(v)
    dist = manifold.vacuum_distance(v)
    dist[~field.grid.active] = 0.0
    ny, nx = field.grid.kind.shape
    lines = [
        "# vtk DataFile Version 3.0",
        "ldg2d scalar diagnostics",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"ORIGIN {field.grid.x0:.17g} {field.grid.y0:.17g} 0",
        f"SPACING {field.grid.h:.17g} {field.grid.h:.17g} 1",
        f"POINT_DATA {nx * ny}",
    ]
    for name, data in (
        ("biaxiality", beta),
        ("order_norm", absq),
        ("vacuum_distance", dist),
    ):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend("%.9g" % x for x in data.ravel())
    atomic_write(path, "\n".join(lines) + "\n")
