"""Per-candidate analysis and the defect report.

Each candidate goes through the same chain: vanishing order, blow-up,
tangent-map fit, classification, winding, and the order-dependent extras
(cone profile for lines, ℰᵏ residual for k ≥ 2, Y_m norms for k ≥ 3).
A failing step is logged and noted on the candidate; the remaining
candidates are still analyzed.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from fields.grid import QField
from qtensor_defects.config import AnalysisConfig
from qtensor_defects.errors import QTensorError
from solver.energy import ek_residual

from .blowup import blow_up, classify, fit_tangent_map, vanishing_order
from .detection import DefectCandidate, detect_candidates, min_interior_beta, order_for_analysis
from .jets import assemble_vm, check_Ym_vanishing, compute_Ym, estimate_jets
from .rectifiability import tangent_line_check
from .winding import circle_loop, winding_number

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "defect-report/1"
MIN_LOOP_STEPS = 2


@dataclass(slots=True)
class DefectReport:
    """Analysis of one snapshot, serialised as ``defect-report/1``."""

    n: int
    min_beta: float
    cluster_count: int
    analyzed: int
    candidates: list[DefectCandidate] = field(default_factory=list)
    config_hash: str | None = None
    schema: str = REPORT_SCHEMA

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": self.schema,
            "config_hash": self.config_hash,
            "n": self.n,
            "min_beta": self.min_beta,
            "cluster_count": self.cluster_count,
            "analyzed": self.analyzed,
            "candidates": [c.to_dict() for c in self.candidates],
        }

    def by_classification(self, name: str) -> list[DefectCandidate]:
        return [c for c in self.candidates if c.classification == name]


def _note(candidate: DefectCandidate, step: str, exc: QTensorError) -> None:
    logger.warning(
        "Candidate at %s: %s failed (%s: %s)",
        np.round(candidate.position, 4).tolist(),
        step,
        type(exc).__name__,
        exc,
    )
    candidate.notes.append(f"{step}: {type(exc).__name__}")


def _loop_radius(field: QField, x0: np.ndarray, cfg: AnalysisConfig) -> float | None:
    h = field.spec.h
    radius = min(cfg.loop_radius, 1.0 - 2.0 * h - float(np.linalg.norm(x0)))
    return radius if radius >= MIN_LOOP_STEPS * h else None


def analyze_candidate(
    field: QField,
    candidate: DefectCandidate,
    cfg: AnalysisConfig,
    neighbours: list[DefectCandidate] | None = None,
) -> DefectCandidate:
    """Run the analysis chain on a copy of ``candidate``.

    Args:
        neighbours: candidates of the same cluster, used for the cone profile.
    """

    result = replace(candidate, notes=list(candidate.notes))
    x0 = np.asarray(result.position, dtype=float)

    try:
        order = vanishing_order(field, x0, cfg.radii)
    except QTensorError as exc:
        _note(result, "vanishing_order", exc)
        return result
    result.k_hat = order.k_hat
    result.k_hat_delta = order.k_hat_delta
    result.regression_residual = order.residual
    k = order.rounded(cfg.order_tol, cfg.regression_tol, cfg.k_max)
    if k is None:
        result.notes.append(f"vanishing order {order.k_hat:.3f} outside the acceptance band")
        logger.info("Candidate at %s left unresolved: k_hat=%.3f", np.round(x0, 4).tolist(), order.k_hat)
        return result
    result.k = k

    try:
        samples = blow_up(field, x0, float(order.radii[0]), k)
        fit = fit_tangent_map(samples, k)
        result.fit_residual = fit.residual
        result.p0 = fit.p0
        classification = classify(fit, cfg.fit_tol, cfg.tol_parallel, cfg.invariance_tol)
    except QTensorError as exc:
        _note(result, "tangent map", exc)
        return result
    result.classification = classification.name
    result.axis = classification.axis
    result.is_defect = classification.is_defect

    radius = _loop_radius(field, x0, cfg)
    if radius is None:
        result.notes.append("winding skipped: loop does not fit in the domain")
    else:
        normal = classification.axis if classification.axis is not None else fit.p0
        loop = circle_loop(x0, normal, radius, cfg.loop_points)
        try:
            result.winding = winding_number(field, loop, fit.p0, cfg.s_min)
        except QTensorError as exc:
            _note(result, "winding", exc)

    if classification.label == "half_degree_line" and neighbours:
        try:
            profile = tangent_line_check(neighbours, x0, classification.axis)
            result.cone_profile = profile.values.tolist()
            if profile.flagged:
                result.notes.append("cone profile does not shrink to a tangent line")
        except QTensorError as exc:
            _note(result, "cone profile", exc)

    if k >= 2:
        try:
            jets = estimate_jets(field, x0, k - 1, cfg.jet_tol)
            y_cube = compute_Ym(assemble_vm(jets, k), fit.p0)
            residual = ek_residual(fit.polynomial, y_cube)
            result.ek_residual = float(np.nanmax(residual.values))
        except QTensorError as exc:
            _note(result, "ek residual", exc)

    if k >= 3:
        try:
            result.ym_norms = check_Ym_vanishing(field, x0, k, cfg.jet_tol)
            if max(result.ym_norms) > cfg.effective_lemma_tol:
                result.notes.append(f"Y_m above {cfg.effective_lemma_tol:g} for some m < {k}")
        except QTensorError as exc:
            _note(result, "Y_m norms", exc)

    logger.debug(
        "Candidate at %s: %s, k=%d, winding=%s",
        np.round(x0, 4).tolist(),
        result.classification,
        k,
        result.winding,
    )
    return result


def analyze_field(
    field: QField,
    cfg: AnalysisConfig | None = None,
    threads: int = 1,
    config_hash: str | None = None,
) -> DefectReport:
    """Detect candidates and analyze up to ``cfg.max_analyzed`` of them.

    The field is only read, so candidates run on a thread pool; results
    keep the deterministic analysis order whatever ``threads`` is.
    """

    cfg = cfg or AnalysisConfig()
    candidates = detect_candidates(field, cfg.beta_threshold, cfg.frame_tol, cfg.s_min, cfg.max_center_radius)
    ordered = order_for_analysis(candidates)
    selected = ordered[: cfg.max_analyzed]
    skipped = ordered[cfg.max_analyzed :]

    clusters: dict[int, list[DefectCandidate]] = {}
    for candidate in candidates:
        clusters.setdefault(candidate.cluster_id, []).append(candidate)

    def run(candidate: DefectCandidate) -> DefectCandidate:
        return analyze_candidate(field, candidate, cfg, clusters[candidate.cluster_id])

    if threads > 1 and len(selected) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            analyzed = list(pool.map(run, selected))
    else:
        analyzed = [run(c) for c in selected]

    if skipped:
        logger.warning("Analyzing %d of %d candidates (max_analyzed cap)", len(selected), len(ordered))
    for candidate in skipped:
        candidate.notes.append("not analyzed: max_analyzed cap")

    report = DefectReport(
        n=field.spec.n,
        min_beta=min_interior_beta(field),
        cluster_count=len(clusters),
        analyzed=len(analyzed),
        candidates=analyzed + skipped,
        config_hash=config_hash,
    )
    logger.info(
        "Analyzed %d candidates: %s",
        len(analyzed),
        candidate_table(report)["classification"].value_counts().to_dict() if report.candidates else {},
    )
    return report


def candidate_table(report: DefectReport) -> pd.DataFrame:
    """One row per candidate with the scalar report columns."""

    rows = [
        {
            "x": float(c.position[0]),
            "y": float(c.position[1]),
            "z": float(c.position[2]),
            "cluster_id": c.cluster_id,
            "beta_min": c.beta_min,
            "frame_jump": c.frame_jump,
            "k_hat": c.k_hat,
            "k": c.k,
            "classification": c.classification,
            "winding": c.winding,
            "is_defect": c.is_defect,
            "fit_residual": c.fit_residual,
        }
        for c in report.candidates
    ]
    return pd.DataFrame(rows)


def write_report(report: DefectReport, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    logger.info("Wrote defect report with %d candidates to %s", len(report.candidates), path)
    return path


def load_report(path: Path | str) -> dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)
