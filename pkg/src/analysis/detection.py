"""Defect candidates: near-negative-uniaxial clusters of the biaxiality field."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy import ndimage

from fields.grid import INTERIOR, QField, beta_field
from tensors.qcore import SQRT6, eigh_batch, frame_distance, to_matrix

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
FRAME_REACH = 2

_OFFSETS = np.stack(np.meshgrid(*([np.arange(-1, 2)] * 3), indexing="ij"), axis=-1).reshape(-1, 3).astype(float)
_QUADRATIC_DESIGN = np.column_stack(
    [
        np.ones(len(_OFFSETS)),
        _OFFSETS,
        _OFFSETS**2,
        _OFFSETS[:, 0] * _OFFSETS[:, 1],
        _OFFSETS[:, 0] * _OFFSETS[:, 2],
        _OFFSETS[:, 1] * _OFFSETS[:, 2],
    ]
)


@dataclass(slots=True)
class DefectCandidate:
    """One detected β minimum plus whatever the analysis managed to add.

    ``is_defect`` is False for candidates whose eigenframe stays continuous
    around them (eigenvalue-exchange planes).
    """

    position: np.ndarray
    beta_min: float
    node: tuple[int, int, int]
    cluster_id: int
    frame_jump: float
    is_defect: bool
    k_hat: float | None = None
    k: int | None = None
    k_hat_delta: float | None = None
    regression_residual: float | None = None
    classification: str = "unresolved"
    axis: np.ndarray | None = None
    winding: float | None = None
    fit_residual: float | None = None
    p0: np.ndarray | None = None
    ek_residual: float | None = None
    ym_norms: list[float] | None = None
    cone_profile: list[float] | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        record = asdict(self)
        for key in ("position", "axis", "p0"):
            if record[key] is not None:
                record[key] = [float(v) for v in record[key]]
        record["node"] = [int(v) for v in self.node]
        return record


def _refine(beta: np.ndarray, node: tuple[int, int, int], h: float, origin: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimizer of the quadratic fitted to β on the 3×3×3 neighbourhood."""

    i, j, k = node
    values = beta[i - 1 : i + 2, j - 1 : j + 2, k - 1 : k + 2].reshape(-1)
    coeffs, *_ = np.linalg.lstsq(_QUADRATIC_DESIGN, values, rcond=None)
    grad = coeffs[1:4]
    hessian = np.array(
        [
            [2.0 * coeffs[4], coeffs[7], coeffs[8]],
            [coeffs[7], 2.0 * coeffs[5], coeffs[9]],
            [coeffs[8], coeffs[9], 2.0 * coeffs[6]],
        ]
    )
    step = np.clip(-np.linalg.pinv(hessian, rcond=1e-8) @ grad, -1.0, 1.0)
    model = coeffs[0] + grad @ step + 0.5 * step @ hessian @ step
    node_beta = float(beta[i, j, k])
    return origin + h * step, float(np.clip(model, -1.0, node_beta))


def frame_jump(field: QField, node: tuple[int, int, int], s_min: float = 1e-3, reach: int = FRAME_REACH) -> float:
    """Largest label-free frame distance between two nodes near ``node``.

    Only active nodes with s > ``s_min`` take part, so the frame is
    well defined at every compared node.
    """

    n = field.spec.n
    lo = [max(v - reach, 0) for v in node]
    hi = [min(v + reach + 1, n) for v in node]
    block = tuple(slice(a, b) for a, b in zip(lo, hi))
    active = field.active[block]
    coeffs = field.coeffs[block][active]
    if len(coeffs) < 2:
        return 0.0

    values, frames = eigh_batch(to_matrix(coeffs))
    frames = frames[values[:, 0] - SQRT6 / 6.0 > s_min]
    if len(frames) < 2:
        return 0.0
    distances = frame_distance(frames[:, None], frames[None, :], unordered=True)
    return float(np.max(distances))


def detect_candidates(
    field: QField,
    beta_threshold: float = 0.05,
    frame_tol: float = 0.2,
    s_min: float = 1e-3,
    max_center_radius: float = 0.9,
) -> list[DefectCandidate]:
    """Tie-tolerant β minima of every cluster where β < −1 + ``beta_threshold``.

    Clusters are 26-connected sets of interior nodes within
    ``max_center_radius`` of the origin. Every node that attains the minimum
    of β over its 3×3×3 neighbourhood yields a candidate, so a line defect
    produces one candidate per grid step along it.
    """

    spec = field.spec
    beta = beta_field(field).values
    interior = field.roles == INTERIOR
    mask = interior & (beta < -1.0 + beta_threshold) & (spec.radii() <= max_center_radius)
    if not np.any(mask):
        logger.info("No node with beta < %.3f; no defect candidates", -1.0 + beta_threshold)
        return []

    labels, cluster_count = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=bool))
    padded = np.where(field.active, beta, np.inf)
    local_min = ndimage.minimum_filter(padded, size=3, mode="nearest")
    minima = mask & (padded <= local_min + TIE_TOL)

    positions = spec.positions()
    candidates: list[DefectCandidate] = []
    for index in np.argwhere(minima):
        node = tuple(int(v) for v in index)
        position, beta_min = _refine(padded, node, spec.h, positions[node])
        jump = frame_jump(field, node, s_min)
        candidates.append(
            DefectCandidate(
                position=position,
                beta_min=beta_min,
                node=node,
                cluster_id=int(labels[node]),
                frame_jump=jump,
                is_defect=jump > frame_tol,
            )
        )

    defects = sum(c.is_defect for c in candidates)
    logger.info(
        "Detected %d candidates in %d clusters (%d with a frame jump above %.2f)",
        len(candidates),
        cluster_count,
        defects,
        frame_tol,
    )
    return candidates


def min_interior_beta(field: QField) -> float:
    beta = beta_field(field).values
    return float(np.min(beta[field.roles == INTERIOR]))


def order_for_analysis(candidates: list[DefectCandidate]) -> list[DefectCandidate]:
    """Interleave clusters, each ordered by (β_min, |x|), so capped analyses cover every cluster.

    β_min is compared at 1e-9 resolution so round-off does not outrank |x|.
    """

    by_cluster: dict[int, list[DefectCandidate]] = {}
    for candidate in candidates:
        by_cluster.setdefault(candidate.cluster_id, []).append(candidate)
    queues = [
        sorted(group, key=lambda c: (round(c.beta_min, 9), float(np.linalg.norm(c.position)), c.node))
        for _, group in sorted(by_cluster.items())
    ]
    ordered: list[DefectCandidate] = []
    depth = 0
    while len(ordered) < len(candidates):
        for queue in queues:
            if depth < len(queue):
                ordered.append(queue[depth])
        depth += 1
    return ordered

