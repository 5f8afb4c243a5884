"""Masked cubic grids over the unit ball and the fields living on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from qtensor_defects.errors import NotInterior, OutOfDomain, OutOfRange, ZeroTensor
from tensors.qcore import biaxiality, eigh_batch, to_matrix

logger = logging.getLogger(__name__)

INTERIOR = np.uint8(0)
SHELL = np.uint8(1)
EXTERIOR = np.uint8(2)

ROLE_NAMES = {0: "interior", 1: "boundary-shell", 2: "exterior"}


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Uniform grid on [−1, 1]³ with an odd number of nodes per axis."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 9 or self.n % 2 == 0:
            raise OutOfRange(f"grid size must be odd and >= 9, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 / (self.n - 1)

    @property
    def coords(self) -> np.ndarray:
        """Node coordinates along one axis; the end points are exactly ±1."""

        return np.linspace(-1.0, 1.0, self.n)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def center(self) -> int:
        return self.n // 2

    def positions(self) -> np.ndarray:
        """Node positions with shape ``(n, n, n, 3)`` (``ij`` indexing)."""

        c = self.coords
        return np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions(), axis=-1)

    def roles(self) -> np.ndarray:
        """Role tag of every node: interior, boundary shell or exterior."""

        r = self.radii()
        roles = np.full(self.shape, EXTERIOR, dtype=np.uint8)
        roles[r < 1.0 + self.h * np.sqrt(3.0)] = SHELL
        roles[r < 1.0 - self.h] = INTERIOR
        return roles

    def node_index(self, x: np.ndarray) -> tuple[int, int, int]:
        """Index of the node nearest to ``x``."""

        idx = np.rint((np.asarray(x, dtype=float) + 1.0) / self.h).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, self.n - 1))

    def node_position(self, index: tuple[int, int, int]) -> np.ndarray:
        return self.coords[list(index)]


@dataclass(slots=True)
class QField:
    """Per-node Q-tensor coefficients plus role tags.

    Boundary-shell nodes carry the frozen Dirichlet data; exterior nodes
    hold zeros and are never read by stencils or interpolation.
    """

    spec: GridSpec
    coeffs: np.ndarray
    roles: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != self.spec.shape + (5,):
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {self.spec.shape + (5,)}")
        self.roles = np.asarray(self.roles, dtype=np.uint8)

    @classmethod
    def empty(cls, spec: GridSpec) -> QField:
        return cls(spec=spec, coeffs=np.zeros(spec.shape + (5,)), roles=spec.roles())

    def copy(self) -> QField:
        return QField(spec=self.spec, coeffs=self.coeffs.copy(), roles=self.roles.copy())

    @property
    def interior(self) -> np.ndarray:
        return self.roles == INTERIOR

    @property
    def shell(self) -> np.ndarray:
        return self.roles == SHELL

    @property
    def active(self) -> np.ndarray:
        return self.roles != EXTERIOR

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.coeffs, axis=-1)

    def matrices(self) -> np.ndarray:
        return to_matrix(self.coeffs)

    def max_norm_deviation(self) -> float:
        return float(np.max(np.abs(self.norms()[self.active] - 1.0)))


@dataclass(slots=True)
class ScalarField:
    """Per-node real values; exterior entries are NaN."""

    spec: GridSpec
    values: np.ndarray
    roles: np.ndarray

    def active_values(self) -> np.ndarray:
        return self.values[self.roles != EXTERIOR]


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------


def central_differences(coeffs: np.ndarray, h: float) -> np.ndarray:
    """Central differences of a nodal array along the three grid axes.

    Returns an array of shape ``coeffs.shape[:3] + (3,) + coeffs.shape[3:]``;
    the outermost layer of nodes (never interior) is left at zero.
    """

    out = np.zeros(coeffs.shape[:3] + (3,) + coeffs.shape[3:])
    inner = (slice(1, -1),) * 3
    out[inner + (0,)] = (coeffs[2:, 1:-1, 1:-1] - coeffs[:-2, 1:-1, 1:-1]) / (2.0 * h)
    out[inner + (1,)] = (coeffs[1:-1, 2:, 1:-1] - coeffs[1:-1, :-2, 1:-1]) / (2.0 * h)
    out[inner + (2,)] = (coeffs[1:-1, 1:-1, 2:] - coeffs[1:-1, 1:-1, :-2]) / (2.0 * h)
    return out


def aligned_central_differences(vectors: np.ndarray, h: float) -> np.ndarray:
    """Central differences of a sign-ambiguous unit-vector field.

    Each neighbour is flipped to the hemisphere of the centre vector before
    differencing, so a line field (p ~ −p) is differentiated as a smooth
    vector field. Shape conventions follow ``central_differences``.
    """

    out = np.zeros(vectors.shape[:3] + (3,) + vectors.shape[3:])
    centre = vectors[1:-1, 1:-1, 1:-1]
    neighbours = (
        (vectors[2:, 1:-1, 1:-1], vectors[:-2, 1:-1, 1:-1]),
        (vectors[1:-1, 2:, 1:-1], vectors[1:-1, :-2, 1:-1]),
        (vectors[1:-1, 1:-1, 2:], vectors[1:-1, 1:-1, :-2]),
    )
    for axis, (plus, minus) in enumerate(neighbours):
        plus = np.where(np.sum(plus * centre, axis=-1, keepdims=True) < 0.0, -plus, plus)
        minus = np.where(np.sum(minus * centre, axis=-1, keepdims=True) < 0.0, -minus, minus)
        out[1:-1, 1:-1, 1:-1, axis] = (plus - minus) / (2.0 * h)
    return out


def gradient(field: QField, node: tuple[int, int, int]) -> np.ndarray:
    """Central-difference gradient (3×5) of the coefficients at an interior node.

    Raises:
        NotInterior: the node is not tagged interior.
    """

    i, j, k = (int(v) for v in node)
    if field.roles[i, j, k] != INTERIOR:
        raise NotInterior(f"node {(i, j, k)} has role {ROLE_NAMES[int(field.roles[i, j, k])]}")
    c = field.coeffs
    two_h = 2.0 * field.spec.h
    return np.stack(
        [
            (c[i + 1, j, k] - c[i - 1, j, k]) / two_h,
            (c[i, j + 1, k] - c[i, j - 1, k]) / two_h,
            (c[i, j, k + 1] - c[i, j, k - 1]) / two_h,
        ]
    )


# --------------------------------------------------------------------------
# interpolation
# --------------------------------------------------------------------------


def sample_many(field: QField, points: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of coefficients, renormalized to |Q| = 1.

    Args:
        field: source field.
        points: ``(..., 3)`` positions with |x| ≤ 1 − h.

    Returns:
        ``(..., 5)`` unit-norm coefficients.

    Raises:
        OutOfDomain: some point lies outside |x| ≤ 1 − h.
        ZeroTensor: the interpolant vanishes at some point.
    """

    points = np.asarray(points, dtype=float)
    limit = 1.0 - field.spec.h
    radius = np.linalg.norm(points, axis=-1)
    if np.any(radius > limit + 1e-12):
        raise OutOfDomain(f"sample point at |x| = {np.max(radius):.6f} exceeds 1 - h = {limit:.6f}")

    c = field.spec.coords
    interpolator = RegularGridInterpolator((c, c, c), field.coeffs, method="linear")
    values = interpolator(points.reshape(-1, 3)).reshape(points.shape[:-1] + (5,))
    norms = np.linalg.norm(values, axis=-1, keepdims=True)
    if np.any(norms <= 1e-12):
        raise ZeroTensor("interpolated tensor vanishes; cannot renormalize")
    return values / norms


def sample(field: QField, x: np.ndarray) -> np.ndarray:
    return sample_many(field, np.asarray(x, dtype=float).reshape(1, 3))[0]


def beta_field(field: QField) -> ScalarField:
    """Biaxiality at every non-exterior node (NaN elsewhere)."""

    values = np.full(field.spec.shape, np.nan)
    active = field.active
    values[active] = biaxiality(field.coeffs[active])
    return ScalarField(spec=field.spec, values=values, roles=field.roles)


def s_field(field: QField) -> ScalarField:
    """s = λ₁ − √6/6 at every non-exterior node (NaN elsewhere)."""

    values = np.full(field.spec.shape, np.nan)
    active = field.active
    eigenvalues, _ = eigh_batch(to_matrix(field.coeffs[active]))
    values[active] = eigenvalues[:, 0] - np.sqrt(6.0) / 6.0
    return ScalarField(spec=field.spec, values=values, roles=field.roles)
