"""Exact algebra of Q-tensors (symmetric traceless 3×3 matrices).

A Q-tensor is stored as five coefficients over the fixed orthonormal basis
``QBASIS``::

    B1 = diag(1, -1, 0) / √2          B3 = (e1⊗e2 + e2⊗e1) / √2
    B2 = diag(-1, -1, 2) / √6         B4 = (e1⊗e3 + e3⊗e1) / √2
                                      B5 = (e2⊗e3 + e3⊗e2) / √2

Every function accepts either a single tensor or stacked arrays with the
coefficient (or matrix) axes last, so whole grids are processed in one
call. Spectral decomposition is analytic (trigonometric Cardano) with a
deterministic convention for degenerate eigenspaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from qtensor_defects.errors import NonSymmetric, NonUnitVector, OutOfRange, ZeroTensor

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
SQRT6 = np.sqrt(6.0)

ZERO_NORM_TOL = 1e-12
BETA_CLAMP_TOL = 1e-10
DEGENERATE_GAP = 1e-9
DEGENERATE_AXIS_TOL = 1e-8
UNIT_TOL = 1e-12
SYMMETRY_TOL = 1e-10

QBASIS = np.zeros((5, 3, 3))
QBASIS[0] = np.diag([1.0, -1.0, 0.0]) / SQRT2
QBASIS[1] = np.diag([-1.0, -1.0, 2.0]) / SQRT6
QBASIS[2, 0, 1] = QBASIS[2, 1, 0] = 1.0 / SQRT2
QBASIS[3, 0, 2] = QBASIS[3, 2, 0] = 1.0 / SQRT2
QBASIS[4, 1, 2] = QBASIS[4, 2, 1] = 1.0 / SQRT2

IDENTITY = np.eye(3)

Sign = Literal["+", "-"]


# --------------------------------------------------------------------------
# coefficient <-> matrix
# --------------------------------------------------------------------------


def to_matrix(coeffs: np.ndarray) -> np.ndarray:
    """Map ``(..., 5)`` coefficients to ``(..., 3, 3)`` matrices."""

    return np.einsum("...a,aij->...ij", np.asarray(coeffs, dtype=float), QBASIS)


def to_coeffs(matrices: np.ndarray) -> np.ndarray:
    """Frobenius-project ``(..., 3, 3)`` matrices onto the basis.

    Symmetric traceless input is represented exactly; for other input the
    trace and antisymmetric parts are discarded.
    """

    return np.einsum("...ij,aij->...a", np.asarray(matrices, dtype=float), QBASIS)


def _coeffs_of(q: "QTensor | np.ndarray") -> np.ndarray:
    if isinstance(q, QTensor):
        return q.coeffs
    return np.asarray(q, dtype=float)


@dataclass(frozen=True, slots=True)
class QTensor:
    """A single Q-tensor given by its five basis coefficients."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if coeffs.shape != (5,):
            raise ValueError(f"QTensor needs 5 coefficients, got shape {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> QTensor:
        return cls(to_coeffs(matrix))

    @property
    def matrix(self) -> np.ndarray:
        return to_matrix(self.coeffs)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, slots=True)
class EigenSystem:
    """Ordered eigenvalues λ₁ ≥ λ₂ ≥ λ₃ with the frame columns (n, m, p)."""

    values: np.ndarray
    frame: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return self.frame[:, 0]

    @property
    def m(self) -> np.ndarray:
        return self.frame[:, 1]

    @property
    def p(self) -> np.ndarray:
        return self.frame[:, 2]

    def reconstruct(self) -> np.ndarray:
        return (self.frame * self.values) @ self.frame.T


# --------------------------------------------------------------------------
# invariants
# --------------------------------------------------------------------------


def trace_cube(coeffs: np.ndarray) -> np.ndarray:
    """tr(Q³) for stacked coefficient arrays."""

    mats = to_matrix(coeffs)
    return np.einsum("...ij,...jk,...ki->...", mats, mats, mats)


def biaxiality(q: QTensor | np.ndarray) -> float | np.ndarray:
    """Signed biaxiality β = √6·tr(Q³)/|Q|³.

    Rounding overshoots below ``BETA_CLAMP_TOL`` are clamped into [-1, 1].

    Raises:
        ZeroTensor: if any tensor has |Q| ≤ 1e-12
        OutOfRange: if β leaves [-1, 1] by more than the clamp tolerance
    """

    coeffs = _coeffs_of(q)
    norm = np.linalg.norm(coeffs, axis=-1)
    if np.any(norm <= ZERO_NORM_TOL):
        raise ZeroTensor(f"biaxiality undefined for |Q| <= {ZERO_NORM_TOL:g} (min |Q| = {np.min(norm):.3e})")

    beta = SQRT6 * trace_cube(coeffs) / norm**3
    overshoot = np.abs(beta) - 1.0
    if np.any(overshoot > BETA_CLAMP_TOL):
        raise OutOfRange(f"biaxiality overshoots [-1, 1] by {np.max(overshoot):.3e}")
    beta = np.clip(beta, -1.0, 1.0)
    return float(beta) if np.ndim(beta) == 0 else beta


# --------------------------------------------------------------------------
# orthonormal completions
# --------------------------------------------------------------------------


def orthonormal_completion(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (u, w) completing unit vectors ``v`` to right-handed frames.

    u is the projection of the first canonical axis (in index order) whose
    component orthogonal to v carries more than half its length squared;
    w = v × u.
    """

    v = np.asarray(v, dtype=float)
    axis_weight = 1.0 - v**2
    index = np.argmax(axis_weight > 0.5, axis=-1)
    axis = np.eye(3)[index]
    u = axis - np.take_along_axis(v, index[..., None], axis=-1) * v
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    w = np.cross(v, u)
    return u, w


def up_basis(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis (E₁, E₂) of 𝒰_p for unit vectors ``p``."""

    e1, e2 = orthonormal_completion(p)
    outer11 = np.einsum("...i,...j->...ij", e1, e1)
    outer22 = np.einsum("...i,...j->...ij", e2, e2)
    outer12 = np.einsum("...i,...j->...ij", e1, e2)
    big_e1 = (outer11 - outer22) / SQRT2
    big_e2 = (outer12 + np.swapaxes(outer12, -1, -2)) / SQRT2
    return big_e1, big_e2


# --------------------------------------------------------------------------
# spectral decomposition
# --------------------------------------------------------------------------


def _isolated_eigenvector(shifted: np.ndarray, lam: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Null vector of ``shifted - lam·I`` from the largest row cross product."""

    rows = shifted - lam[..., None, None] * IDENTITY
    crosses = np.stack(
        [
            np.cross(rows[..., 0, :], rows[..., 1, :]),
            np.cross(rows[..., 0, :], rows[..., 2, :]),
            np.cross(rows[..., 1, :], rows[..., 2, :]),
        ],
        axis=-2,
    )
    norms = np.linalg.norm(crosses, axis=-1)
    best = np.argmax(norms, axis=-1)
    vec = np.take_along_axis(crosses, best[..., None, None], axis=-2)[..., 0, :]
    best_norm = np.take_along_axis(norms, best[..., None], axis=-1)[..., 0]

    degenerate = best_norm <= 1e-12 * np.maximum(scale**2, 1e-300)
    safe = np.where(degenerate, 1.0, best_norm)
    vec = vec / safe[..., None]
    return np.where(degenerate[..., None], np.array([1.0, 0.0, 0.0]), vec)


def _canonical_in_complement(v: np.ndarray) -> np.ndarray:
    """First canonical axis, in index order, with a usable projection onto v⊥, orthonormalized against v."""

    projections = np.eye(3) - v[..., :, None] * v[..., None, :]
    norms = np.linalg.norm(projections, axis=-1)
    index = np.argmax(norms > DEGENERATE_AXIS_TOL, axis=-1)
    u = np.take_along_axis(projections, index[..., None, None], axis=-2)[..., 0, :]
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    # second pass restores orthogonality lost to cancellation
    u = u - np.sum(u * v, axis=-1, keepdims=True) * v
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


def eigh_batch(matrices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic eigen-decomposition of stacked symmetric 3×3 matrices.

    The eigenvalue farthest from the other two comes from the trigonometric
    Cardano formula and its eigenvector from row cross products; the
    remaining pair is resolved exactly inside the orthogonal complement,
    which keeps near-degenerate pairs accurate. Pairs closer than
    ``DEGENERATE_GAP`` take their first basis vector from the canonical
    axes projected onto the pair's eigenspace, in index order; the second
    one completes a right-handed frame.

    Returns:
        values ``(..., 3)`` in descending order and frames ``(..., 3, 3)``
        whose columns are (n, m, p), right-handed.
    """

    a = np.asarray(matrices, dtype=float)
    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    shifted = a - q[..., None, None] * IDENTITY

    off = shifted[..., 0, 1] ** 2 + shifted[..., 0, 2] ** 2 + shifted[..., 1, 2] ** 2
    diag = np.diagonal(shifted, axis1=-2, axis2=-1)
    scale = np.sqrt((np.sum(diag**2, axis=-1) + 2.0 * off) / 6.0)
    zero = scale <= 1e-300
    safe_scale = np.where(zero, 1.0, scale)

    r = np.linalg.det(shifted / safe_scale[..., None, None]) / 2.0
    phi = np.arccos(np.clip(r, -1.0, 1.0)) / 3.0
    top = 2.0 * np.cos(phi)
    bottom = 2.0 * np.cos(phi + 2.0 * np.pi / 3.0)
    middle = -top - bottom
    top_is_isolated = (top - middle) >= (middle - bottom)

    first_value = np.where(zero, 0.0, np.where(top_is_isolated, top, bottom) * scale)
    first = _isolated_eigenvector(shifted, first_value, scale)

    u, w = orthonormal_completion(first)
    m11 = np.einsum("...i,...ij,...j->...", u, shifted, u)
    m22 = np.einsum("...i,...ij,...j->...", w, shifted, w)
    m12 = np.einsum("...i,...ij,...j->...", u, shifted, w)
    mean = 0.5 * (m11 + m22)
    half_gap = np.hypot(0.5 * (m11 - m22), m12)
    angle = 0.5 * np.arctan2(2.0 * m12, m11 - m22)
    pair_degenerate = 2.0 * half_gap < DEGENERATE_GAP
    upper = np.cos(angle)[..., None] * u + np.sin(angle)[..., None] * w
    upper = np.where(pair_degenerate[..., None], _canonical_in_complement(first), upper)

    # isolated top: first = n, upper = m; isolated bottom: first = p, upper = n
    n = np.where(top_is_isolated[..., None], first, upper)
    m = np.where(top_is_isolated[..., None], upper, np.cross(first, upper))
    p = np.where(top_is_isolated[..., None], np.cross(first, upper), first)

    lam1 = np.where(top_is_isolated, first_value, mean + half_gap)
    lam2 = np.where(top_is_isolated, mean + half_gap, mean - half_gap)
    lam3 = np.where(top_is_isolated, mean - half_gap, first_value)

    values = np.stack([lam1, lam2, lam3], axis=-1) + q[..., None]
    frames = np.stack([n, m, p], axis=-1)
    return values, frames


def eigen_decompose(q: QTensor | np.ndarray) -> EigenSystem:
    """Eigen-decompose a single Q-tensor (QTensor, 5 coefficients or 3×3)."""

    if isinstance(q, QTensor):
        matrix = q.matrix
    else:
        arr = np.asarray(q, dtype=float)
        matrix = to_matrix(arr) if arr.shape == (5,) else arr
    values, frames = eigh_batch(matrix)
    return EigenSystem(values=values, frame=frames)


# --------------------------------------------------------------------------
# constructors and projections
# --------------------------------------------------------------------------


def _check_unit(v: np.ndarray, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    deviation = np.abs(np.linalg.norm(v, axis=-1) - 1.0)
    if np.any(deviation > UNIT_TOL):
        raise NonUnitVector(f"{name} must have unit length (max deviation {np.max(deviation):.3e})")
    return v


def _sign_factor(sign: Sign | int) -> float:
    if sign in ("+", 1):
        return 1.0
    if sign in ("-", -1):
        return -1.0
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def uniaxial_coeffs(n: np.ndarray, sign: Sign | int = "+") -> np.ndarray:
    """Coefficients of ±√(3/2)(n⊗n − Id/3) for stacked unit vectors."""

    n = _check_unit(n, "director")
    outer = np.einsum("...i,...j->...ij", n, n) - IDENTITY / 3.0
    return _sign_factor(sign) * np.sqrt(1.5) * to_coeffs(outer)


def make_uniaxial(n: np.ndarray, sign: Sign | int = "+") -> QTensor:
    """Unit-norm uniaxial tensor; '+' gives β = 1, '-' gives β = −1."""

    return QTensor(uniaxial_coeffs(np.asarray(n, dtype=float).reshape(3), sign))


def project_to_up_matrices(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Orthogonal projection of symmetric matrices onto 𝒰_p (matrix form).

    Y = V − V·pp − pp·V + (V:pp)pp − ½(V:(Id − pp))(Id − pp), broadcast
    over leading axes of ``v`` and ``p``.
    """

    v = np.asarray(v, dtype=float)
    pp = np.einsum("...i,...j->...ij", p, p)
    v_pp = np.einsum("...ij,...ij->...", v, pp)
    complement = IDENTITY - pp
    v_complement = np.einsum("...ij,...ij->...", v, complement)
    return (
        v
        - v @ pp
        - pp @ v
        + v_pp[..., None, None] * pp
        - 0.5 * v_complement[..., None, None] * complement
    )


@dataclass(frozen=True, slots=True)
class TangentTensor:
    """Element u₁E₁ + u₂E₂ of 𝒰_{p₀}."""

    p0: np.ndarray
    u: np.ndarray

    @property
    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return up_basis(self.p0)

    @property
    def matrix(self) -> np.ndarray:
        e1, e2 = self.basis
        return self.u[0] * e1 + self.u[1] * e2

    @property
    def tensor(self) -> QTensor:
        return QTensor.from_matrix(self.matrix)

    @property
    def norm(self) -> float:
        return float(np.hypot(self.u[0], self.u[1]))


def project_to_Up(v: np.ndarray, p: np.ndarray) -> TangentTensor:
    """Project a symmetric 3×3 matrix onto 𝒰_p.

    Raises:
        NonSymmetric: if |V − Vᵀ| exceeds 1e-10
        NonUnitVector: if p is not a unit vector
    """

    v = np.asarray(v, dtype=float)
    if np.max(np.abs(v - v.T)) > SYMMETRY_TOL:
        raise NonSymmetric(f"V is not symmetric (max |V - V^T| = {np.max(np.abs(v - v.T)):.3e})")
    p = _check_unit(np.asarray(p, dtype=float).reshape(3), "p")

    y = project_to_up_matrices(v, p)
    e1, e2 = up_basis(p)
    u = np.array([np.sum(y * e1), np.sum(y * e2)])
    return TangentTensor(p0=p.copy(), u=u)


def frame_distance(a: EigenSystem | np.ndarray, b: EigenSystem | np.ndarray, unordered: bool = False) -> float | np.ndarray:
    """Sign-invariant distance between eigenframes.

    Ordered: max over axes of 1 − |⟨a_i, b_i⟩|. Unordered: each axis of a is
    matched with its closest axis of b first, so frames that only exchange
    labels are at distance 0.
    """

    fa = a.frame if isinstance(a, EigenSystem) else np.asarray(a, dtype=float)
    fb = b.frame if isinstance(b, EigenSystem) else np.asarray(b, dtype=float)
    overlaps = np.abs(np.einsum("...ki,...kj->...ij", fa, fb))
    if unordered:
        per_axis = 1.0 - np.max(overlaps, axis=-1)
    else:
        per_axis = 1.0 - np.diagonal(overlaps, axis1=-2, axis2=-1)
    result = np.max(per_axis, axis=-1)
    return float(result) if np.ndim(result) == 0 else result
