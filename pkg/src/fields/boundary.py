"""Dirichlet boundary data, interior initialization and the boundary degree."""

from __future__ import annotations

import logging
from collections import deque
from typing import Callable, Literal

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.transform import Rotation

from qtensor_defects.config import BoundaryConfig
from qtensor_defects.errors import BoundaryValidationError, DegenerateBoundary, OrientationFailure
from tensors.qcore import biaxiality, eigh_batch, to_matrix, uniaxial_coeffs

from .grid import INTERIOR, SHELL, GridSpec, QField

logger = logging.getLogger(__name__)

BoundaryMap = Callable[[np.ndarray], np.ndarray]
InteriorRule = Literal["radial", "uniform"]

DEGENERATE_BETA_MARGIN = 1e-3
E3 = np.array([0.0, 0.0, 1.0])


def hedgehog_map(omega: np.ndarray) -> np.ndarray:
    """Q_b(ω) = √(3/2)(ω⊗ω − Id/3) for unit vectors ω."""

    return uniaxial_coeffs(omega, "+")


def rotated_hedgehog_map(rotation: Rotation) -> BoundaryMap:
    """Boundary data with director n(ω) = Rω."""

    matrix = rotation.as_matrix()

    def _map(omega: np.ndarray) -> np.ndarray:
        return uniaxial_coeffs(omega @ matrix.T, "+")

    return _map


def uniform_map(director: np.ndarray) -> BoundaryMap:
    director = np.asarray(director, dtype=float)
    director = director / np.linalg.norm(director)
    constant = uniaxial_coeffs(director, "+")

    def _map(omega: np.ndarray) -> np.ndarray:
        return np.broadcast_to(constant, omega.shape[:-1] + (5,)).copy()

    return _map


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def boundary_field(spec: GridSpec, boundary: BoundaryMap, interior: InteriorRule = "radial") -> QField:
    """Build a field holding ``boundary(x/|x|)`` on the shell.

    Interior nodes get either the core value ``boundary(e₃)`` ("uniform") or
    normalize((1 − w)·core + w·boundary(x/|x|)) with a smoothstep weight
    w(|x|) rising from 0 at the centre to 1 at the shell ("radial").
    """

    field = QField.empty(spec)
    positions = spec.positions()
    radius = np.linalg.norm(positions, axis=-1)
    safe = np.where(radius > 0.0, radius, 1.0)
    omega = np.where(radius[..., None] > 0.0, positions / safe[..., None], E3)

    shell = field.roles == SHELL
    field.coeffs[shell] = boundary(omega[shell])

    inner = field.roles == INTERIOR
    core = boundary(E3[None, :])[0]
    if interior == "uniform":
        field.coeffs[inner] = core
    elif interior == "radial":
        weight = _smoothstep(radius[inner])[:, None]
        blend = (1.0 - weight) * core + weight * boundary(omega[inner])
        field.coeffs[inner] = blend / np.linalg.norm(blend, axis=-1, keepdims=True)
    else:
        raise ValueError(f"unknown interior rule {interior!r}")

    logger.debug("Boundary field on N=%d: %d shell nodes, %d interior nodes", spec.n, shell.sum(), inner.sum())
    return field


def hedgehog_boundary(spec: GridSpec, interior: InteriorRule = "radial") -> QField:
    return boundary_field(spec, hedgehog_map, interior)


# --------------------------------------------------------------------------
# degree of the leading eigenvector on the boundary sphere
# --------------------------------------------------------------------------


def fibonacci_sphere(count: int) -> np.ndarray:
    """Quasi-uniform unit vectors on S² (golden-angle spiral)."""

    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    rho = np.sqrt(1.0 - z**2)
    theta = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)


def _outward_faces(points: np.ndarray) -> np.ndarray:
    faces = ConvexHull(points).simplices.copy()
    a, b, c = points[faces[:, 0]], points[faces[:, 1]], points[faces[:, 2]]
    inward = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0.0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces


def signed_solid_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Solid angles of spherical triangles with unit vertices (Van Oosterom–Strackee)."""

    numerator = np.einsum("ij,ij->i", a, np.cross(b, c))
    denominator = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(numerator, denominator)


def _orient_line_field(directors: np.ndarray, faces: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    neighbours: list[set[int]] = [set() for _ in range(len(directors))]
    for tri in faces:
        for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            neighbours[u].add(int(v))
            neighbours[v].add(int(u))

    oriented = directors.copy()
    if oriented[0] @ anchor < 0.0:
        oriented[0] = -oriented[0]
    seen = np.zeros(len(directors), dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        current = queue.popleft()
        for nb in neighbours[current]:
            if seen[nb]:
                continue
            if oriented[nb] @ oriented[current] < 0.0:
                oriented[nb] = -oriented[nb]
            seen[nb] = True
            queue.append(nb)

    edges = faces[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    overlap = np.einsum("ij,ij->i", oriented[edges[:, 0]], oriented[edges[:, 1]])
    if np.any(overlap <= 0.0):
        raise OrientationFailure(
            f"leading-eigenvector line field is not orientable on the boundary ({int(np.sum(overlap <= 0.0))} inconsistent edges)"
        )
    return oriented


def boundary_degree(field: QField, vertices: int | None = None) -> int:
    """Degree of the oriented leading eigenvector n: ∂B₁ → S².

    The sphere is triangulated (Fibonacci points + convex hull), each vertex
    takes the leading eigenvector of its nearest boundary-shell node, signs
    are propagated breadth-first from a vertex aligned with its outward
    normal, and signed solid angles of the image triangles are summed.

    Raises:
        DegenerateBoundary: β ≤ −1 + 1e-3 somewhere on the shell.
        OrientationFailure: sign propagation meets an inconsistent edge.
    """

    shell = field.shell
    beta = biaxiality(field.coeffs[shell])
    if np.min(beta) <= -1.0 + DEGENERATE_BETA_MARGIN:
        raise DegenerateBoundary(f"boundary biaxiality reaches {np.min(beta):.6f}; leading eigenvalue not simple")

    count = vertices or max(200, int(2.0 * np.pi / field.spec.h**2))
    points = fibonacci_sphere(count)
    faces = _outward_faces(points)

    shell_positions = field.spec.positions()[shell]
    _, nearest = cKDTree(shell_positions).query(points)
    _, frames = eigh_batch(to_matrix(field.coeffs[shell][nearest]))
    directors = _orient_line_field(frames[:, :, 0], faces, points[0])

    total = signed_solid_angles(directors[faces[:, 0]], directors[faces[:, 1]], directors[faces[:, 2]]).sum()
    degree = total / (4.0 * np.pi)
    logger.debug("Boundary degree sum %.6f over %d triangles", degree, len(faces))
    return int(np.rint(degree))


def validate_boundary(field: QField, delta_cfg: float) -> int:
    """Check the biaxiality margin of the boundary data and report its degree.

    Raises:
        BoundaryValidationError: min β on the shell is below −1 + δ_cfg.
    """

    beta = biaxiality(field.coeffs[field.shell])
    if np.min(beta) < -1.0 + delta_cfg:
        raise BoundaryValidationError(
            f"boundary.delta_cfg: min boundary beta {np.min(beta):.4f} is below -1 + {delta_cfg:g}"
        )
    degree = boundary_degree(field)
    if degree == 0:
        logger.warning("Boundary data has degree 0; minimizers need not carry defects")
    else:
        logger.info("Boundary data validated: min beta %.4f, degree %d", np.min(beta), degree)
    return degree


def boundary_from_config(spec: GridSpec, cfg: BoundaryConfig) -> QField:
    """Boundary field for a ``boundary`` config section (radial interior)."""

    if cfg.type == "hedgehog":
        boundary = hedgehog_map
    elif cfg.type == "rotated_hedgehog":
        boundary = rotated_hedgehog_map(Rotation.from_rotvec(cfg.rotation))
    else:
        boundary = uniform_map(np.asarray(cfg.director, dtype=float))
    return boundary_field(spec, boundary, "radial")
