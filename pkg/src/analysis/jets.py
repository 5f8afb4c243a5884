"""Derivative jets of the p-field and the polynomial sources V_m, Y_m.

Mixed partials D^γp(x₀) come from tensor-product central differences on
grid nodes at two spacings (4h and 2h), combined by one Richardson step.
The jets are taken at the node nearest to x₀.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from math import comb, factorial

import numpy as np

from fields.grid import QField
from qtensor_defects.errors import JetEstimationFailure, OutOfDomain
from tensors.perturb import GAP_TOL, decompose_many
from tensors.polynomials import evaluate, monomial_exponents
from tensors.qcore import project_to_up_matrices

from .blowup import unit_ball_lattice

logger = logging.getLogger(__name__)

COARSE_STEPS = 4
FINE_STEPS = 2
MIN_ALIGNMENT = 0.5

Multi = tuple[int, int, int]


@dataclass(slots=True)
class PJets:
    """D^γp at a node for 1 ≤ |γ| ≤ order, plus the Richardson error bound."""

    node: tuple[int, int, int]
    p0: np.ndarray
    order: int
    derivatives: dict[Multi, np.ndarray]
    error: float

    def get(self, gamma: Multi) -> np.ndarray:
        return self.derivatives.get(gamma, np.zeros(3))


@dataclass(slots=True)
class VPoly:
    """V_m as a coefficient cube with trailing 3×3 axes (degree m − 2)."""

    degree: int
    cube: np.ndarray
    jets: PJets

    @property
    def p0(self) -> np.ndarray:
        return self.jets.p0

    def values(self, points: np.ndarray) -> np.ndarray:
        return evaluate(self.cube, points)


def _difference_weights(order: int) -> list[tuple[float, float]]:
    """(offset in steps, weight) of the order-n central difference."""

    return [((order / 2.0 - j), (-1.0) ** j * comb(order, j)) for j in range(order + 1)]


def _mixed_difference(p: np.ndarray, centre: np.ndarray, gamma: Multi, step_nodes: int) -> np.ndarray:
    """Central-difference estimate of D^γp with step ``step_nodes``·h (h = 1 in index units)."""

    total = np.zeros(3)
    axes = [_difference_weights(g) for g in gamma]
    for (ox, wx), (oy, wy), (oz, wz) in product(*axes):
        offset = np.array([ox, oy, oz]) * step_nodes
        index = tuple(int(v) for v in centre + offset.astype(int))
        total += wx * wy * wz * p[index]
    return total


def estimate_jets(field: QField, x0: np.ndarray, order: int, jet_tol: float = 1e-2) -> PJets:
    """Richardson-extrapolated jets of p up to total order ``order``.

    Raises:
        OutOfDomain: the difference stencil leaves the active nodes.
        JetEstimationFailure: λ₃ is not isolated on the stencil, p turns by
            more than 60° against p(x₀), or the two spacings disagree by
            more than ``jet_tol``.
    """

    spec = field.spec
    centre = np.array(spec.node_index(x0))
    if order < 1:
        p0 = decompose_many(field.coeffs[tuple(centre)], strict=False).p
        return PJets(node=tuple(int(v) for v in centre), p0=p0, order=order, derivatives={}, error=0.0)

    reach = int(np.ceil(order / 2.0 * COARSE_STEPS))
    lo = centre - reach
    hi = centre + reach + 1
    if np.any(lo < 0) or np.any(hi > spec.n):
        raise OutOfDomain(f"jet stencil of reach {reach} nodes leaves the grid at node {centre.tolist()}")
    block = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    if not np.all(field.active[block]):
        raise OutOfDomain(f"jet stencil of reach {reach} nodes leaves the domain at node {centre.tolist()}")

    parts = decompose_many(field.coeffs[block], strict=False)
    if np.any(parts.gap < GAP_TOL):
        raise JetEstimationFailure(f"lambda3 not isolated on the jet stencil (min gap {np.min(parts.gap):.3e})")
    local = np.full(3, reach)
    p0 = parts.p[tuple(local)]
    alignment = parts.p @ p0
    if np.min(np.abs(alignment)) < MIN_ALIGNMENT:
        raise JetEstimationFailure(f"p turns too far on the jet stencil (min |p.p0| = {np.min(np.abs(alignment)):.3f})")
    p = np.where(alignment[..., None] < 0.0, -parts.p, parts.p)

    h = spec.h
    derivatives: dict[Multi, np.ndarray] = {}
    error = 0.0
    for total in range(1, order + 1):
        for gamma in monomial_exponents(total):
            coarse = _mixed_difference(p, local, gamma, COARSE_STEPS) / (COARSE_STEPS * h) ** total
            fine = _mixed_difference(p, local, gamma, FINE_STEPS) / (FINE_STEPS * h) ** total
            extrapolated = (4.0 * fine - coarse) / 3.0
            error = max(error, float(np.max(np.abs(extrapolated - fine))))
            derivatives[gamma] = extrapolated

    if error > jet_tol:
        raise JetEstimationFailure(f"Richardson disagreement {error:.3e} exceeds jet_tol {jet_tol:g}")
    logger.debug("Jets of order %d at node %s: error %.2e", order, centre.tolist(), error)
    return PJets(node=tuple(int(v) for v in centre), p0=p0, order=order, derivatives=derivatives, error=error)


def _factorial(alpha: Multi) -> int:
    return factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2])


def assemble_vm(jets: PJets, m: int) -> VPoly:
    """V_m(x) = Σᵢ Σ_{|α|+|β|=m−2} (DᵢD^αp/α!) ⊗ (DᵢD^βp/β!) x^{α+β}."""

    if m < 2:
        raise ValueError(f"V_m needs m >= 2, got {m}")
    if jets.order < m - 1:
        raise ValueError(f"jets of order {jets.order} cannot build V_{m} (need {m - 1})")

    size = m - 1
    cube = np.zeros((size, size, size, 3, 3))
    unit = np.eye(3, dtype=int)
    for a_total in range(m - 1):
        for alpha in monomial_exponents(a_total):
            for beta in monomial_exponents(m - 2 - a_total):
                power = tuple(a + b for a, b in zip(alpha, beta))
                weight = 1.0 / (_factorial(alpha) * _factorial(beta))
                for i in range(3):
                    left = jets.get(tuple(int(v) for v in np.add(alpha, unit[i])))
                    right = jets.get(tuple(int(v) for v in np.add(beta, unit[i])))
                    cube[power] += weight * np.outer(left, right)
    return VPoly(degree=m, cube=cube, jets=jets)


def compute_Vm(field: QField, x0: np.ndarray, m: int, jet_tol: float = 1e-2) -> VPoly:
    return assemble_vm(estimate_jets(field, x0, m - 1, jet_tol), m)


def compute_Ym(vpoly: VPoly, p0: np.ndarray | None = None) -> np.ndarray:
    """Coefficient-wise projection of V_m onto 𝒰_{p₀} (same cube layout)."""

    p0 = vpoly.p0 if p0 is None else np.asarray(p0, dtype=float)
    return project_to_up_matrices(vpoly.cube, p0)


def check_Ym_vanishing(field: QField, x0: np.ndarray, k: int, jet_tol: float = 1e-2) -> list[float]:
    """sup_{B₁}|Y_m| for m = 2, …, k − 1, from one set of jets."""

    if k < 3:
        raise ValueError(f"Y_m vanishing needs k >= 3, got {k}")
    jets = estimate_jets(field, x0, k - 2, jet_tol)
    points = unit_ball_lattice(9)
    norms = []
    for m in range(2, k):
        y_cube = compute_Ym(assemble_vm(jets, m))
        norms.append(float(np.max(np.linalg.norm(evaluate(y_cube, points), axis=(-2, -1)))))
    return norms
