"""Snapshot files and VTK export for grid fields.

Snapshot layout (little-endian):

    header   magic "QFLD" (4 bytes) | version (uint32) | N (uint32)
    coeffs   N³ × 5 float64, row-major over (i, j, k, component)
    roles    N³ uint8 (0 interior, 1 boundary shell, 2 exterior)
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from qtensor_defects.errors import CorruptSnapshot, OutOfRange

from .grid import GridSpec, QField, ScalarField

logger = logging.getLogger(__name__)

MAGIC = b"QFLD"
VERSION = 1
HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u4")])


def save_snapshot(field: QField, path: Path | str) -> Path:
    """Write ``field`` in the binary snapshot format and return the path."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([(MAGIC, VERSION, field.spec.n)], dtype=HEADER_DTYPE)
    with path.open("wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(field.coeffs, dtype="<f8").tobytes())
        handle.write(np.ascontiguousarray(field.roles, dtype=np.uint8).tobytes())
    logger.debug("Snapshot written to %s", path)
    return path


def load_snapshot(path: Path | str) -> QField:
    """Read a snapshot written by ``save_snapshot``.

    Raises:
        CorruptSnapshot: wrong magic or version, or a size mismatch.
    """

    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_DTYPE.itemsize:
        raise CorruptSnapshot(f"{path}: file too short for a snapshot header ({len(raw)} bytes)")

    header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise CorruptSnapshot(f"{path}: bad magic {bytes(header['magic'])!r}")
    if int(header["version"]) != VERSION:
        raise CorruptSnapshot(f"{path}: unsupported version {int(header['version'])}")

    n = int(header["n"])
    nodes = n**3
    expected = HEADER_DTYPE.itemsize + nodes * 5 * 8 + nodes
    if len(raw) != expected:
        raise CorruptSnapshot(f"{path}: expected {expected} bytes for N={n}, found {len(raw)}")
    try:
        spec = GridSpec(n)
    except OutOfRange as exc:
        raise CorruptSnapshot(f"{path}: invalid grid size {n}") from exc

    offset = HEADER_DTYPE.itemsize
    coeffs = np.frombuffer(raw, dtype="<f8", count=nodes * 5, offset=offset).reshape(spec.shape + (5,))
    roles = np.frombuffer(raw, dtype=np.uint8, count=nodes, offset=offset + nodes * 40).reshape(spec.shape)
    return QField(spec=spec, coeffs=coeffs.astype(float), roles=roles.copy())


def write_vtk_scalar(field: ScalarField, path: Path | str, name: str, fill: float = 0.0) -> Path:
    """Legacy ASCII STRUCTURED_POINTS export of one scalar (x varies fastest).

    Exterior (NaN) values are written as ``fill``.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    spec = field.spec
    values = np.where(np.isfinite(field.values), field.values, fill)
    lines = [
        "# vtk DataFile Version 3.0",
        f"{name} field",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {spec.n} {spec.n} {spec.n}",
        "ORIGIN -1 -1 -1",
        f"SPACING {spec.h:.17g} {spec.h:.17g} {spec.h:.17g}",
        f"POINT_DATA {spec.n ** 3}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    with path.open("wt", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")
        handle.write("\n".join(f"{value:.17g}" for value in values.ravel(order="F")))
        handle.write("\n")
    logger.debug("VTK scalar '%s' written to %s", name, path)
    return path
