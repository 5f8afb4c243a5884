"""Exact unit-norm fields with known defect structure.

Every field here is assembled through ``perturb.reconstruct`` from a
prescribed (p, s, n) or from a prescribed 𝒰_p-valued polynomial Ū, so the
eigenframe, the split parameter s and the tangent map are known in closed
form at every node.
"""

from __future__ import annotations

import logging
from typing import Callable, Literal

import numpy as np

from qtensor_defects.errors import AmplitudeTooLarge
from tensors.perturb import S_MAX, reconstruct_from_tangent, reconstruct_many
from tensors.qcore import _check_unit, orthonormal_completion, uniaxial_coeffs

from .grid import GridSpec, QField

logger = logging.getLogger(__name__)

MAX_LINEAR_AMPLITUDE = 0.2

LocalPolynomial = Callable[[np.ndarray], np.ndarray]
DisclinationCase = Literal["half_degree", "exchange"]


def axis_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e₁, e₂, p) with p = axis/|axis| and (e₁, e₂) its canonical completion."""

    p = np.asarray(axis, dtype=float)
    p = p / np.linalg.norm(p)
    e1, e2 = orthonormal_completion(p)
    return e1, e2, p


def tangent_field(spec: GridSpec, axis: np.ndarray, polynomial: LocalPolynomial) -> QField:
    """Field whose U-part is ``polynomial`` in the axis frame.

    Args:
        spec: grid.
        axis: constant direction p.
        polynomial: maps local coordinates ``(..., 3)`` (components along
            e₁, e₂, p) to the 𝒰_p coefficients ``(..., 2)``.

    Raises:
        AmplitudeTooLarge: s leaves the perturbative domain at some node.
    """

    e1, e2, p = axis_frame(axis)
    field = QField.empty(spec)
    active = field.active
    positions = spec.positions()[active]
    local = np.stack([positions @ e1, positions @ e2, positions @ p], axis=-1)
    u = np.asarray(polynomial(local), dtype=float)

    s_max = float(np.max(np.hypot(u[:, 0], u[:, 1]))) / np.sqrt(2.0)
    if s_max > S_MAX:
        raise AmplitudeTooLarge(f"synthetic field reaches s = {s_max:.4f} > {S_MAX:.4f}")

    field.coeffs[active] = reconstruct_from_tangent(p, u)
    return field


def synthetic_disclination(
    spec: GridSpec,
    axis: np.ndarray,
    amplitude: float,
    case: DisclinationCase = "half_degree",
    exchange_lambda: float = 1.0,
    direction: np.ndarray | None = None,
) -> QField:
    """Straight half-degree line or exchange plane with constant p = axis.

    half_degree: s = amplitude·ρ and n = (cos θ/2, sin θ/2) in cylindrical
    coordinates about the axis, i.e. Ū = √2·amplitude·(x′E₁ + y′E₂).
    exchange: Ū = (a·x)(E₁ + λE₂) with a = amplitude·d, d ⊥ axis (default e₁).

    Raises:
        AmplitudeTooLarge: amplitude above 0.2 or s outside its domain.
    """

    if amplitude < 0.0 or amplitude > MAX_LINEAR_AMPLITUDE:
        raise AmplitudeTooLarge(f"amplitude must lie in [0, {MAX_LINEAR_AMPLITUDE}], got {amplitude}")

    if case == "half_degree":

        def polynomial(local: np.ndarray) -> np.ndarray:
            return np.sqrt(2.0) * amplitude * local[..., :2]

    elif case == "exchange":
        e1, e2, p = axis_frame(axis)
        d = e1 if direction is None else np.asarray(direction, dtype=float)
        d = d - (d @ p) * p
        d = d / np.linalg.norm(d)
        a_local = amplitude * np.array([d @ e1, d @ e2, 0.0])

        def polynomial(local: np.ndarray) -> np.ndarray:
            ax = local @ a_local
            return np.stack([ax, exchange_lambda * ax], axis=-1)

    else:
        raise ValueError(f"unknown disclination case {case!r}")

    field = tangent_field(spec, axis, polynomial)
    logger.info("Synthesized %s field (N=%d, amplitude=%.3f)", case, spec.n, amplitude)
    return field


def synthetic_order_two(spec: GridSpec, axis: np.ndarray, amplitude: float = 0.8) -> QField:
    """Vanishing order two: Ū = amplitude·x′y′·E₂ (harmonic, invariant along p)."""

    def polynomial(local: np.ndarray) -> np.ndarray:
        value = amplitude * local[..., 0] * local[..., 1]
        return np.stack([np.zeros_like(value), value], axis=-1)

    field = tangent_field(spec, axis, polynomial)
    logger.info("Synthesized order-two field (N=%d, amplitude=%.3f)", spec.n, amplitude)
    return field


def constant_s_field(spec: GridSpec, axis: np.ndarray, s0: float) -> QField:
    """Constant biaxial field with s ≡ s₀ (no vanishing)."""

    u = np.array([np.sqrt(2.0) * s0, 0.0])
    return tangent_field(spec, axis, lambda local: np.broadcast_to(u, local.shape[:-1] + (2,)))


def uniform_field(spec: GridSpec, director: np.ndarray, sign: Literal["+", "-"] = "+") -> QField:
    """Constant uniaxial field on every non-exterior node."""

    director = _check_unit(np.asarray(director, dtype=float), "director")
    field = QField.empty(spec)
    field.coeffs[field.active] = uniaxial_coeffs(director, sign)
    return field


def field_from_frames(spec: GridSpec, p: np.ndarray, s: np.ndarray, n: np.ndarray) -> QField:
    """Field from per-node (p, s, n) arrays of shape ``spec.shape + (3,)`` etc.

    Exterior entries are ignored.
    """

    field = QField.empty(spec)
    active = field.active
    field.coeffs[active] = reconstruct_many(p[active], s[active], n[active])
    return field


def synthesize(
    spec: GridSpec,
    case: Literal["half_degree", "exchange", "order_two", "uniform"],
    axis: np.ndarray,
    amplitude: float,
    exchange_lambda: float = 1.0,
) -> QField:
    """Dispatch used by the ``synthesize`` subcommand."""

    if case in ("half_degree", "exchange"):
        return synthetic_disclination(spec, axis, amplitude, case, exchange_lambda=exchange_lambda)
    if case == "order_two":
        return synthetic_order_two(spec, axis, amplitude)
    if case == "uniform":
        return uniform_field(spec, np.asarray(axis, dtype=float) / np.linalg.norm(axis), "+")
    raise ValueError(f"unknown synthetic case {case!r}")
