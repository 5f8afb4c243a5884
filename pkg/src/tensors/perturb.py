"""Eigenvalue algebra near negative-uniaxial states.

On S⁴ the ordered eigenvalues of a tensor close to −(√6/2)(p⊗p − Id/3)
are parametrized by a single number:

    λ₁ = √6/6 + s,   λ₂ = √6/6 + r,   λ₃ = −√6/3 + δ,

with s + r + δ = 0 and s² + r² + δ² + (√6/3)(s + r − 2δ) = 0. The closed
forms below are evaluated in cancellation-free form so that the small-s
behaviour (δ ≈ (√6/3)s², τ ≈ (2/3)s³) is resolved to full precision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from qtensor_defects.errors import EigenvalueGapTooSmall, NonOrthogonal, NotUnitNorm, OutOfRange

from .qcore import (
    SQRT6,
    UNIT_TOL,
    QTensor,
    TangentTensor,
    _check_unit,
    eigh_batch,
    orthonormal_completion,
    project_to_Up,
    to_coeffs,
    to_matrix,
)

logger = logging.getLogger(__name__)

DELTA_MAX = SQRT6 / 6.0
S_MAX = SQRT6 / 6.0
GAP_TOL = 1e-6
NORM_TOL = 1e-8
_RANGE_SLACK = 1e-12


@dataclass(frozen=True, slots=True)
class SplitEigenvalues:
    delta: float
    s: float
    r: float

    @property
    def eigenvalues(self) -> np.ndarray:
        base = SQRT6 / 6.0
        return np.array([base + self.s, base + self.r, -2.0 * base + self.delta])


@dataclass(frozen=True, slots=True)
class Decomposition:
    """Q = −(√6/2)(p⊗p − Id/3) + U + R with U = s(n⊗n − m⊗m) ∈ 𝒰_p."""

    p: np.ndarray
    U: TangentTensor
    R: QTensor
    s: float
    n: np.ndarray
    m: np.ndarray

    def reassemble(self) -> np.ndarray:
        pp = np.outer(self.p, self.p)
        return -(SQRT6 / 2.0) * (pp - np.eye(3) / 3.0) + self.U.matrix + self.R.matrix


@dataclass(slots=True)
class DecomposedArrays:
    """Stacked decomposition data for many nodes (leading axes preserved)."""

    p: np.ndarray
    n: np.ndarray
    m: np.ndarray
    s: np.ndarray
    delta: np.ndarray
    gap: np.ndarray

    @property
    def u_matrix(self) -> np.ndarray:
        nn = np.einsum("...i,...j->...ij", self.n, self.n)
        mm = np.einsum("...i,...j->...ij", self.m, self.m)
        return self.s[..., None, None] * (nn - mm)


def split_from_delta(delta: float) -> SplitEigenvalues:
    """Exact (s, r) for a given δ = λ₃ + √6/3.

    Raises:
        OutOfRange: δ outside [0, √6/6].
    """

    delta = float(delta)
    if delta < 0.0 or delta > DELTA_MAX + _RANGE_SLACK:
        raise OutOfRange(f"delta must lie in [0, {DELTA_MAX:.6f}], got {delta!r}")
    discriminant = 2.0 * SQRT6 * delta - 3.0 * delta**2
    if discriminant < 0.0:
        raise OutOfRange(f"negative discriminant {discriminant:.3e} for delta={delta!r}")
    root = np.sqrt(discriminant)
    return SplitEigenvalues(delta=delta, s=0.5 * (-delta + root), r=0.5 * (-delta - root))


def _check_s(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > S_MAX + _RANGE_SLACK):
        raise OutOfRange(f"s must lie in [0, {S_MAX:.6f}], got range [{np.min(s):.6g}, {np.max(s):.6g}]")
    return np.minimum(s, S_MAX)


def _inner_root(s: np.ndarray) -> np.ndarray:
    # √(24 − 16√6 s − 48 s²), non-negative on [0, S_MAX]
    return np.sqrt(np.maximum(24.0 - 16.0 * SQRT6 * s - 48.0 * s**2, 0.0))


def delta_from_s(s: float | np.ndarray) -> float | np.ndarray:
    """Inverse of ``split_from_delta`` on the s-branch.

    Evaluates ((2√6 − 4s) − √(24 − 16√6 s − 48 s²))/8 as
    8s² / ((2√6 − 4s) + √(...)).

    Raises:
        OutOfRange: s outside [0, √6/6].
    """

    s = _check_s(s)
    delta = 8.0 * s**2 / ((2.0 * SQRT6 - 4.0 * s) + _inner_root(s))
    return float(delta) if np.ndim(delta) == 0 else delta


def tau(s: float | np.ndarray) -> float | np.ndarray:
    """Remainder δ(s) − (√6/3)s², of order (2/3)s³."""

    s = _check_s(s)
    denom = (2.0 * SQRT6 - 4.0 * s) + _inner_root(s)
    x = 96.0 * SQRT6 * s + 288.0 * s**2
    inner = 4.0 * SQRT6 * s + x / (12.0 + np.sqrt(np.maximum(144.0 - x, 0.0)))
    value = s**2 * inner / (3.0 * denom)
    return float(value) if np.ndim(value) == 0 else value


def beta_of_s(s: float | np.ndarray) -> float | np.ndarray:
    """Exact biaxiality of the unit tensor with split parameter s."""

    s = _check_s(s)
    delta = delta_from_s(s)
    base = SQRT6 / 6.0
    lam1 = base + s
    lam2 = base - s - delta
    lam3 = -2.0 * base + delta
    value = SQRT6 * (lam1**3 + lam2**3 + lam3**3)
    return float(value) if np.ndim(value) == 0 else value


def zeta(s: float | np.ndarray) -> float | np.ndarray:
    """Remainder β − (−1 + 9s²), of order s³."""

    value = beta_of_s(s) + 1.0 - 9.0 * np.asarray(s, dtype=float) ** 2
    return float(value) if np.ndim(value) == 0 else value


# --------------------------------------------------------------------------
# decomposition / reconstruction
# --------------------------------------------------------------------------


def _fix_sign(p: np.ndarray) -> np.ndarray:
    """Flip vectors so their first component with |p_i| > 1e-12 is positive."""

    significant = np.abs(p) > 1e-12
    first = np.argmax(significant, axis=-1)
    lead = np.take_along_axis(p, first[..., None], axis=-1)
    return np.where(lead < 0.0, -p, p)


def decompose_many(coeffs: np.ndarray, strict: bool = True) -> DecomposedArrays:
    """Vectorized decomposition of stacked unit tensors.

    Args:
        coeffs: ``(..., 5)`` coefficients with |Q| = 1 within 1e-8.
        strict: raise when some λ₃ is not isolated; otherwise the caller
            inspects ``gap``.

    Raises:
        NotUnitNorm: a tensor is off the unit sphere.
        EigenvalueGapTooSmall: λ₂ − λ₃ < 1e-6 somewhere (strict mode).
    """

    coeffs = np.asarray(coeffs, dtype=float)
    norms = np.linalg.norm(coeffs, axis=-1)
    deviation = np.abs(norms - 1.0)
    if np.any(deviation > NORM_TOL):
        raise NotUnitNorm(f"|Q| must be 1 within {NORM_TOL:g} (max deviation {np.max(deviation):.3e})")

    values, frames = eigh_batch(to_matrix(coeffs))
    gap = values[..., 1] - values[..., 2]
    if strict and np.any(gap < GAP_TOL):
        raise EigenvalueGapTooSmall(f"lambda2 - lambda3 = {np.min(gap):.3e} < {GAP_TOL:g}")

    n = frames[..., :, 0]
    p = _fix_sign(frames[..., :, 2])
    m = np.cross(p, n)
    s = np.maximum(values[..., 0] - SQRT6 / 6.0, 0.0)
    delta = values[..., 2] + SQRT6 / 3.0
    return DecomposedArrays(p=p, n=n, m=m, s=s, delta=delta, gap=gap)


def decompose(q: QTensor | np.ndarray) -> Decomposition:
    """Split a unit tensor into its negative-uniaxial part, U and R.

    Raises:
        NotUnitNorm: |Q| deviates from 1 by more than 1e-8.
        EigenvalueGapTooSmall: λ₂ − λ₃ < 1e-6.
    """

    coeffs = q.coeffs if isinstance(q, QTensor) else np.asarray(q, dtype=float)
    parts = decompose_many(coeffs.reshape(5))
    p, n, m, s = parts.p, parts.n, parts.m, float(parts.s)

    u_matrix = s * (np.outer(n, n) - np.outer(m, m))
    tangent = project_to_Up(u_matrix, p / np.linalg.norm(p))
    remainder = to_matrix(coeffs) + (SQRT6 / 2.0) * (np.outer(p, p) - np.eye(3) / 3.0) - u_matrix
    logger.debug("Decomposed tensor: s=%.3e delta=%.3e |R|=%.3e", s, float(parts.delta), np.linalg.norm(remainder))
    return Decomposition(p=p, U=tangent, R=QTensor.from_matrix(remainder), s=s, n=n, m=m)


def reconstruct_many(p: np.ndarray, s: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Coefficients of λ₁n⊗n + λ₂m⊗m + λ₃p⊗p, m = p × n, for stacked input.

    Raises:
        NonUnitVector: p or n not unit.
        NonOrthogonal: |n·p| > 1e-12.
        OutOfRange: s outside the domain of ``delta_from_s``.
    """

    p = _check_unit(p, "p")
    n = _check_unit(n, "n")
    overlap = np.abs(np.sum(p * n, axis=-1))
    if np.any(overlap > UNIT_TOL):
        raise NonOrthogonal(f"n must be orthogonal to p (max |n.p| = {np.max(overlap):.3e})")
    s = _check_s(s)
    delta = np.asarray(delta_from_s(s))

    base = SQRT6 / 6.0
    m = np.cross(p, n)
    nn = np.einsum("...i,...j->...ij", n, n)
    mm = np.einsum("...i,...j->...ij", m, m)
    pp = np.einsum("...i,...j->...ij", p, p)
    matrix = (
        (base + s)[..., None, None] * nn
        + (base - s - delta)[..., None, None] * mm
        + (-2.0 * base + delta)[..., None, None] * pp
    )
    return to_coeffs(matrix)


def reconstruct(p: np.ndarray, s: float, n: np.ndarray) -> QTensor:
    return QTensor(reconstruct_many(np.asarray(p, dtype=float), np.asarray(float(s)), np.asarray(n, dtype=float)))


def reconstruct_from_tangent(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Unit tensors whose U-part is u₁E₁ + u₂E₂ in 𝒰_p.

    ``u`` has shape ``(..., 2)``; s = |u|/√2 and the leading eigenvector is
    n = cos φ e₁ + sin φ e₂ with φ = ½·atan2(u₂, u₁).
    """

    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    p = np.broadcast_to(p, u.shape[:-1] + (3,))
    e1, e2 = orthonormal_completion(p)
    s = np.hypot(u[..., 0], u[..., 1]) / np.sqrt(2.0)
    phi = 0.5 * np.arctan2(u[..., 1], u[..., 0])
    n = np.cos(phi)[..., None] * e1 + np.sin(phi)[..., None] * e2
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return reconstruct_many(p, s, n)
