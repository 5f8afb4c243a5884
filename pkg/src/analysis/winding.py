"""Winding of the leading eigenvector around closed loops.

The angle is read from the 𝒰_p part of Q: with U = u₁E₁ + u₂E₂ in the
frame of ``p_ref`` the leading eigenvector sits at φ = ½·atan2(u₂, u₁).
Increments of φ are taken modulo π/2, which treats the unordered pair
{n, m} as the tracked object: exchanges of λ₁ and λ₂ (n ↔ m) add nothing,
and on exchange-free loops the count equals the mod-π line-field count.
"""

from __future__ import annotations

import logging

import numpy as np

from fields.grid import QField, sample_many
from qtensor_defects.errors import DegenerateSample, UnderSampledLoop, UnresolvedWinding
from tensors.perturb import decompose_many
from tensors.qcore import orthonormal_completion, up_basis

logger = logging.getLogger(__name__)

ROUNDING_TOL = 0.1
MAX_STEP = np.pi / 4.0


def circle_loop(center: np.ndarray, normal: np.ndarray, radius: float, points: int = 64) -> np.ndarray:
    """Counter-clockwise circle about ``normal``, samples offset half a step."""

    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    c1, c2 = orthonormal_completion(normal)
    theta = 2.0 * np.pi * (np.arange(points) + 0.5) / points
    return np.asarray(center, dtype=float) + radius * (np.cos(theta)[:, None] * c1 + np.sin(theta)[:, None] * c2)


def director_angles(field: QField, loop: np.ndarray, p_ref: np.ndarray, s_min: float = 1e-3) -> np.ndarray:
    """φ = ½·atan2(u₂, u₁) at every loop sample.

    Raises:
        DegenerateSample: s ≤ ``s_min`` at some sample.
    """

    coeffs = sample_many(field, loop)
    parts = decompose_many(coeffs, strict=False)
    weakest = int(np.argmin(parts.s))
    if parts.s[weakest] <= s_min:
        raise DegenerateSample(
            f"s = {parts.s[weakest]:.2e} <= {s_min:g} at loop sample {np.round(loop[weakest], 4).tolist()}"
        )
    e1, e2 = up_basis(np.asarray(p_ref, dtype=float) / np.linalg.norm(p_ref))
    u = parts.u_matrix
    u1 = np.einsum("mij,ij->m", u, e1)
    u2 = np.einsum("mij,ij->m", u, e2)
    return 0.5 * np.arctan2(u2, u1)


def winding_number(field: QField, loop: np.ndarray, p_ref: np.ndarray, s_min: float = 1e-3) -> float:
    """Half-integer winding of the leading eigenvector along a closed loop.

    Raises:
        DegenerateSample: s ≤ ``s_min`` at some sample.
        UnderSampledLoop: the frame turns by π/4 or more between samples.
        UnresolvedWinding: the total is more than 0.1 away from a half-integer.
    """

    loop = np.asarray(loop, dtype=float)
    if len(loop) < 3:
        raise UnderSampledLoop(f"a loop needs at least 3 samples, got {len(loop)}")
    phi = director_angles(field, loop, p_ref, s_min)

    steps = np.diff(np.append(phi, phi[0]))
    steps = (steps + MAX_STEP) % (np.pi / 2.0) - MAX_STEP
    if np.any(np.abs(steps) >= MAX_STEP * (1.0 - 1e-9)):
        raise UnderSampledLoop(f"frame turns by {np.max(np.abs(steps)):.3f} rad between samples; resample the loop")

    total = float(np.sum(steps)) / (2.0 * np.pi)
    rounded = np.round(2.0 * total) / 2.0
    if abs(total - rounded) >= ROUNDING_TOL:
        raise UnresolvedWinding(f"winding {total:.3f} is not within {ROUNDING_TOL} of a half-integer")
    logger.debug("Winding over %d samples: %.4f -> %.1f", len(loop), total, rounded)
    return float(rounded) + 0.0
