"""Discrete energies, their gradients and the blow-up decomposition.

All integrals use the node-centred midpoint rule over interior nodes with
cell volume h³, and all derivatives use the central differences of
``fields.grid``. Coefficient norms equal Frobenius norms because the
Q-tensor basis is orthonormal.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Protocol

import numpy as np

from fields.grid import (
    EXTERIOR,
    INTERIOR,
    GridSpec,
    QField,
    ScalarField,
    aligned_central_differences,
    central_differences,
)
from qtensor_defects.errors import DecompositionFailure, DegreeMismatch, NotUnitNorm, OutOfDomain, ScaleTooSmall
from tensors.perturb import NORM_TOL, decompose_many
from tensors.polynomials import TangentPolynomial, evaluate, integrate_ball, laplacian, multiply, total_degree
from tensors.qcore import SQRT6, biaxiality, to_coeffs, to_matrix, trace_cube, uniaxial_coeffs

logger = logging.getLogger(__name__)

NEGATIVE_UNIAXIAL_DENSITY = 2.0 / (3.0 * SQRT6)
MIN_SCALE_STEPS = 4
_EXTERIOR_FILL = uniaxial_coeffs(np.array([0.0, 0.0, 1.0]), "-")


@dataclass(slots=True)
class EnergyBreakdown:
    """Energy terms; the blow-up fields stay ``None`` for plain energies.

    ``u_mass`` is ∫_{B₁}|U_r|², so that −(√6/4)r²·u_mass is the
    sign-indefinite part of ℰ₃.
    """

    dirichlet: float
    potential: float
    total: float
    E1: float | None = None
    E2: float | None = None
    E3: float | None = None
    u_mass: float | None = None
    radius: float | None = None

    @property
    def E3_excess(self) -> float | None:
        """ℰ₃ without the −(√6/4)r²∫|U_r|² term."""

        if self.E3 is None or self.u_mass is None or self.radius is None:
            return None
        return self.E3 + 0.25 * SQRT6 * self.radius**2 * self.u_mass

    def to_dict(self) -> dict[str, float | None]:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class LdGParameters:
    """Landau–de Gennes material constants and the derived λ, μ.

    Attributes:
        a2, b2, c2: bulk constants a², b², c² (c² > 0).
        L: elastic constant.
    """

    a2: float
    b2: float
    c2: float
    L: float

    def __post_init__(self) -> None:
        if self.c2 <= 0.0 or self.L <= 0.0 or self.a2 <= 0.0 or self.b2 <= 0.0:
            raise ValueError(f"material constants must be positive, got a2={self.a2}, b2={self.b2}, c2={self.c2}, L={self.L}")

    @property
    def s_plus(self) -> float:
        return (self.b2 + np.sqrt(self.b2**2 + 24.0 * self.a2 * self.c2)) / (4.0 * self.c2)

    @property
    def lam(self) -> float:
        return float(np.sqrt(2.0 / 3.0) * self.b2 * self.s_plus / self.L)

    @property
    def mu(self) -> float:
        return self.a2 / self.L

    @property
    def bulk_constant(self) -> float:
        """C making min f_b = 0, attained on s₊(n⊗n − Id/3)."""

        s = self.s_plus
        return float(self.a2 * s**2 / 3.0 + 2.0 * self.b2 * s**3 / 27.0 - self.c2 * s**4 / 9.0)

    @property
    def energy_factor(self) -> float:
        """(2/3)s₊²L, the ratio of the dimensional energy to ℰ_{λ,μ}."""

        return 2.0 / 3.0 * self.s_plus**2 * self.L

    def bulk_potential(self, matrices: np.ndarray) -> np.ndarray:
        """f_b(Q) for dimensional ``(..., 3, 3)`` tensors."""

        q2 = np.einsum("...ij,...ji->...", matrices, matrices)
        q3 = np.einsum("...ij,...jk,...ki->...", matrices, matrices, matrices)
        return -0.5 * self.a2 * q2 - self.b2 / 3.0 * q3 + 0.25 * self.c2 * q2**2 + self.bulk_constant

    def rescale(self, matrices: np.ndarray) -> np.ndarray:
        """𝐐 = √(3/2)·Q/s₊ (dimensional matrices to scaled coefficients)."""

        return to_coeffs(np.sqrt(1.5) * np.asarray(matrices, dtype=float) / self.s_plus)


@dataclass(frozen=True, slots=True)
class PenaltyWeights:
    """Plain (λ, μ) pair for penalty-mode runs."""

    lam: float = 1.0
    mu: float = 1e3


class HasPenaltyWeights(Protocol):
    @property
    def lam(self) -> float: ...

    @property
    def mu(self) -> float: ...


# --------------------------------------------------------------------------
# assembly kernels
# --------------------------------------------------------------------------


def _masked_differences(coeffs: np.ndarray, interior: np.ndarray, h: float) -> np.ndarray:
    """Central differences zeroed off the interior."""

    diffs = central_differences(coeffs, h)
    diffs[~interior] = 0.0
    return diffs


def _dirichlet_adjoint(diffs: np.ndarray, h: float) -> np.ndarray:
    """Gradient of h³Σ½|D Q|² with respect to every node's coefficients.

    ``diffs`` must already vanish off the interior.
    """

    grad = np.zeros(diffs.shape[:3] + diffs.shape[4:])
    scale = h**3 / (2.0 * h)
    grad[1:, :, :] += scale * diffs[:-1, :, :, 0]
    grad[:-1, :, :] -= scale * diffs[1:, :, :, 0]
    grad[:, 1:, :] += scale * diffs[:, :-1, :, 1]
    grad[:, :-1, :] -= scale * diffs[:, 1:, :, 1]
    grad[:, :, 1:] += scale * diffs[:, :, :-1, 2]
    grad[:, :, :-1] -= scale * diffs[:, :, 1:, 2]
    return grad


def _square_coeffs(coeffs: np.ndarray) -> np.ndarray:
    mats = to_matrix(coeffs)
    return to_coeffs(mats @ mats)


def _check_unit(field: QField) -> None:
    deviation = field.max_norm_deviation()
    if deviation > NORM_TOL:
        raise NotUnitNorm(f"constrained energy needs |Q| = 1 within {NORM_TOL:g} (max deviation {deviation:.3e})")


def _constrained_terms(coeffs: np.ndarray, interior: np.ndarray, h: float) -> tuple[EnergyBreakdown, np.ndarray]:
    diffs = _masked_differences(coeffs, interior, h)
    dirichlet = 0.5 * h**3 * float(np.sum(diffs**2))
    beta = biaxiality(coeffs[interior])
    potential = h**3 * float(np.sum(1.0 - beta)) / (3.0 * SQRT6)
    breakdown = EnergyBreakdown(dirichlet=dirichlet, potential=potential, total=dirichlet + potential)
    return breakdown, diffs


def constrained_energy(field: QField) -> EnergyBreakdown:
    """ℰ(Q) = Σ_interior h³[½|∇Q|² + (1 − β)/(3√6)].

    Raises:
        NotUnitNorm: some non-exterior node is off S⁴ by more than 1e-8.
    """

    _check_unit(field)
    breakdown, _ = _constrained_terms(field.coeffs, field.interior, field.spec.h)
    return breakdown


def _potential_gradient(coeffs: np.ndarray) -> np.ndarray:
    """d/dc of (1 − β(c))/(3√6) for stacked coefficients."""

    norm = np.linalg.norm(coeffs, axis=-1, keepdims=True)
    tr3 = trace_cube(coeffs)[..., None]
    return -(_square_coeffs(coeffs) / norm**3 - tr3 * coeffs / norm**5)


def tangent_projection(coeffs: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Remove the component of ``vectors`` along ``coeffs`` node by node."""

    norm2 = np.sum(coeffs**2, axis=-1, keepdims=True)
    norm2 = np.where(norm2 > 0.0, norm2, 1.0)
    return vectors - np.sum(vectors * coeffs, axis=-1, keepdims=True) / norm2 * coeffs


def energy_and_gradient(field: QField, check: bool = True) -> tuple[EnergyBreakdown, np.ndarray]:
    """Constrained energy and its projected gradient in one pass."""

    if check:
        _check_unit(field)
    h = field.spec.h
    interior = field.interior
    breakdown, diffs = _constrained_terms(field.coeffs, interior, h)

    grad = _dirichlet_adjoint(diffs, h)
    grad[interior] += h**3 * _potential_gradient(field.coeffs[interior])
    grad[~interior] = 0.0
    grad[interior] = tangent_projection(field.coeffs[interior], grad[interior])
    return breakdown, grad


def energy_gradient(field: QField) -> np.ndarray:
    """Exact gradient of the discrete ℰ, projected orthogonally to Q per node.

    Boundary-shell and exterior nodes get zero.
    """

    _, grad = energy_and_gradient(field, check=False)
    return grad


# --------------------------------------------------------------------------
# penalty energy ℰ_{λ,μ}
# --------------------------------------------------------------------------


def w_potential(coeffs: np.ndarray) -> np.ndarray:
    """W(Q) = |Q|⁴/(4√6) − tr(Q³)/3 + 1/(12√6)."""

    norm2 = np.sum(coeffs**2, axis=-1)
    return norm2**2 / (4.0 * SQRT6) - trace_cube(coeffs) / 3.0 + 1.0 / (12.0 * SQRT6)


def penalty_energy(field: QField, params: HasPenaltyWeights) -> EnergyBreakdown:
    """ℰ_{λ,μ} split into its Dirichlet part and λW + (μ/4)(1 − |Q|²)²."""

    h = field.spec.h
    interior = field.interior
    diffs = _masked_differences(field.coeffs, interior, h)
    c = field.coeffs[interior]
    penalty = 0.25 * params.mu * (1.0 - np.sum(c**2, axis=-1)) ** 2
    dirichlet = 0.5 * h**3 * float(np.sum(diffs**2))
    bulk = h**3 * float(np.sum(params.lam * w_potential(c) + penalty))
    return EnergyBreakdown(dirichlet=dirichlet, potential=bulk, total=dirichlet + bulk)


def full_energy(field: QField, params: HasPenaltyWeights) -> float:
    """ℰ_{λ,μ} = Σ_interior h³[½|∇Q|² + λW(Q) + (μ/4)(1 − |Q|²)²].

    ``params`` is an ``LdGParameters`` or a ``PenaltyWeights``.
    """

    return penalty_energy(field, params).total


def full_energy_gradient(field: QField, params: HasPenaltyWeights) -> np.ndarray:
    """Unprojected gradient of ``full_energy``; zero off the interior."""

    h = field.spec.h
    interior = field.interior
    diffs = _masked_differences(field.coeffs, interior, h)
    grad = _dirichlet_adjoint(diffs, h)

    c = field.coeffs[interior]
    norm2 = np.sum(c**2, axis=-1, keepdims=True)
    dw = norm2 * c / SQRT6 - _square_coeffs(c)
    grad[interior] += h**3 * (params.lam * dw - params.mu * (1.0 - norm2) * c)
    grad[~interior] = 0.0
    return grad


# --------------------------------------------------------------------------
# densities and the leading-order expansion
# --------------------------------------------------------------------------


def energy_density(field: QField) -> ScalarField:
    """½|∇Q|² + (1 − β)/(3√6) at interior nodes (NaN elsewhere)."""

    interior = field.interior
    diffs = _masked_differences(field.coeffs, interior, field.spec.h)
    values = np.full(field.spec.shape, np.nan)
    values[interior] = 0.5 * np.sum(diffs[interior] ** 2, axis=(-2, -1)) + (
        1.0 - biaxiality(field.coeffs[interior])
    ) / (3.0 * SQRT6)
    return ScalarField(spec=field.spec, values=values, roles=field.roles)


def _frame_derivatives(coeffs: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(p, U, ∇p, ∇U) on a block of unit tensors (no gap check)."""

    parts = decompose_many(coeffs, strict=False)
    u_matrix = parts.u_matrix
    dp = aligned_central_differences(parts.p, h)
    du = central_differences(u_matrix, h)
    return parts.p, u_matrix, dp, du


def leading_density(field: QField) -> ScalarField:
    """Leading terms of the energy density written through (p, U).

    (3/2)|∇p|² + ½|∇U|² + √6Σ∂ᵢp_j∂ᵢp_kU_jk + (2 − (9/2)|U|²)/(3√6) at
    interior nodes.
    """

    interior = field.interior
    filled = np.where(field.active[..., None], field.coeffs, _EXTERIOR_FILL)
    _, u, dp, du = _frame_derivatives(filled, field.spec.h)
    coupling = np.einsum("...ij,...ik,...jk->...", dp, dp, u)
    dense = (
        1.5 * np.sum(dp**2, axis=(-2, -1))
        + 0.5 * np.sum(du**2, axis=(-3, -2, -1))
        + SQRT6 * coupling
        + (2.0 - 4.5 * np.sum(u**2, axis=(-2, -1))) / (3.0 * SQRT6)
    )
    values = np.full(field.spec.shape, np.nan)
    values[interior] = dense[interior]
    return ScalarField(spec=field.spec, values=values, roles=field.roles)


# --------------------------------------------------------------------------
# blow-up decomposition
# --------------------------------------------------------------------------


def _ball_block(field: QField, x0: np.ndarray, r: float) -> tuple[tuple[slice, slice, slice], np.ndarray]:
    """Index block around the node nearest ``x0`` plus the mask of B_r in it.

    The block carries one extra layer so every ball node has a full stencil.
    """

    spec = field.spec
    centre = np.array(spec.node_index(x0))
    reach = int(np.floor(r / spec.h + 1e-9))
    lo = centre - reach - 1
    hi = centre + reach + 2
    if np.any(lo < 0) or np.any(hi > spec.n):
        raise OutOfDomain(f"ball of radius {r} around {np.round(x0, 4).tolist()} leaves the grid")

    block = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    offsets = np.indices(tuple(int(b - a) for a, b in zip(lo, hi))).transpose(1, 2, 3, 0) - (reach + 1)
    ball = np.linalg.norm(offsets * spec.h, axis=-1) <= r + 1e-12
    if np.any(field.roles[block][ball] != INTERIOR):
        raise OutOfDomain(f"ball of radius {r} around {np.round(x0, 4).tolist()} leaves the interior")
    return block, ball


def blowup_energy_parts(field: QField, x0: np.ndarray, r: float, k: int) -> EnergyBreakdown:
    """ℰ₁, ℰ₂ and the remainder ℰ₃ of the rescaled field U_r on B₁.

    The rescaling x ↦ x₀ + rx is applied analytically: integrals over
    B_r(x₀) (centred at the nearest node) are multiplied by r^{−(2k+1)}.
    ℰ_r is the full density minus (3/2)|∇p|² and the constant 2/(3√6);
    ℰ₃ = ℰ_r − ℰ₁ − ℰ₂.

    Raises:
        ScaleTooSmall: r < 4h.
        DecompositionFailure: β ≥ 0 or λ₃ not isolated somewhere in the ball.
        OutOfDomain: the ball leaves the interior.
    """

    h = field.spec.h
    if r < MIN_SCALE_STEPS * h - 1e-12:
        raise ScaleTooSmall(f"blow-up radius {r} is below {MIN_SCALE_STEPS}h = {MIN_SCALE_STEPS * h:.4f}")
    if k < 1:
        raise ValueError(f"vanishing order must be positive, got {k}")

    block, ball = _ball_block(field, np.asarray(x0, dtype=float), r)
    coeffs = np.where(field.active[block][..., None], field.coeffs[block], _EXTERIOR_FILL)
    beta = biaxiality(coeffs[ball])
    if np.any(beta >= 0.0):
        raise DecompositionFailure(f"beta reaches {np.max(beta):.3f} >= 0 inside the blow-up ball")

    parts = decompose_many(coeffs, strict=False)
    if np.any(parts.gap[ball] < 1e-6):
        raise DecompositionFailure(f"lambda3 not isolated in the blow-up ball (min gap {np.min(parts.gap[ball]):.3e})")
    u = parts.u_matrix
    dp = aligned_central_differences(parts.p, h)
    du = central_differences(u, h)
    dq = central_differences(coeffs, h)

    scale = h**3 * r ** (-(2 * k + 1))
    dq2 = np.sum(dq[ball] ** 2, axis=(-2, -1))
    dp2 = np.sum(dp[ball] ** 2, axis=(-2, -1))
    full = 0.5 * dq2 + (1.0 - beta) / (3.0 * SQRT6) - 1.5 * dp2 - NEGATIVE_UNIAXIAL_DENSITY
    e_r = scale * float(np.sum(full))
    e1 = scale * 0.5 * float(np.sum(du[ball] ** 2))
    e2 = scale * SQRT6 * float(np.sum(np.einsum("...ij,...ik,...jk->...", dp[ball], dp[ball], u[ball])))
    u_mass = h**3 * r ** (-(2 * k + 3)) * float(np.sum(u[ball] ** 2))

    dirichlet = 0.5 * h**3 * float(np.sum(dq2))
    potential = h**3 * float(np.sum(1.0 - beta)) / (3.0 * SQRT6)
    logger.debug("Blow-up energy at r=%.3f k=%d: E1=%.4e E2=%.4e E3=%.4e", r, k, e1, e2, e_r - e1 - e2)
    return EnergyBreakdown(
        dirichlet=dirichlet,
        potential=potential,
        total=dirichlet + potential,
        E1=e1,
        E2=e2,
        E3=e_r - e1 - e2,
        u_mass=u_mass,
        radius=float(r),
    )


# --------------------------------------------------------------------------
# tangent-map functional ℰᵏ
# --------------------------------------------------------------------------


def _check_source_degree(cube: np.ndarray | None, k: int, name: str) -> None:
    if cube is None:
        return
    if cube.ndim != 5 or cube.shape[-2:] != (3, 3):
        raise DegreeMismatch(f"{name} must be a matrix-valued coefficient cube, got shape {cube.shape}")
    degree = total_degree(cube)
    if degree not in (-1, k - 2):
        raise DegreeMismatch(f"{name} has degree {degree}, expected {k - 2} for k = {k}")


def ek_energy(tangent: TangentPolynomial, v_cube: np.ndarray | None = None) -> float:
    """ℰᵏ(Ū) = ∫_{B₁}(½|∇Ū|² + √6 V_k : Ū), computed exactly.

    Raises:
        DegreeMismatch: V_k is not of degree k − 2.
    """

    k = tangent.degree
    if k < 1:
        raise DegreeMismatch(f"tangent map degree must be >= 1, got {k}")
    _check_source_degree(v_cube, k, "V_k")

    value = tangent.dirichlet_energy()
    if v_cube is not None:
        u_cube = tangent.matrix_cube()
        coupling = 0.0
        for i in range(3):
            for j in range(3):
                coupling += integrate_ball(multiply(v_cube[..., i, j], u_cube[..., i, j]))
        value += SQRT6 * coupling
    return float(value)


def ek_residual(tangent: TangentPolynomial, y_cube: np.ndarray | None = None, n: int = 21) -> ScalarField:
    """|ΔŪ − √6Y_k| on a GridSpec(n) lattice; exterior nodes are NaN.

    The Laplacian is taken exactly from the coefficients.

    Raises:
        DegreeMismatch: Y_k is not of degree k − 2.
    """

    k = tangent.degree
    if k < 1:
        raise DegreeMismatch(f"tangent map degree must be >= 1, got {k}")
    _check_source_degree(y_cube, k, "Y_k")

    residual_cube = laplacian(tangent.matrix_cube())
    if y_cube is not None:
        padded = np.zeros_like(residual_cube)
        size = min(y_cube.shape[0], padded.shape[0])
        padded[:size, :size, :size] = y_cube[:size, :size, :size]
        residual_cube = residual_cube - SQRT6 * padded

    spec = GridSpec(n)
    roles = spec.roles()
    values = np.full(spec.shape, np.nan)
    active = roles != EXTERIOR
    values[active] = np.linalg.norm(evaluate(residual_cube, spec.positions()[active]), axis=(-2, -1))
    return ScalarField(spec=spec, values=values, roles=roles)
