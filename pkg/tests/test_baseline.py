from __future__ import annotations

import json

import numpy as np
import pytest

from analysis.detection import detect_candidates, min_interior_beta
from analysis.pipeline import analyze_field, candidate_table
from fields.grid import GridSpec
from qtensor_defects.config import AnalysisConfig, BoundaryConfig, SolverConfig, load_settings
from solver.minimize import initial_field, minimize

BASELINE = load_settings().baseline_dir / "hedgehog_n33.json"


@pytest.fixture(scope="module")
def hedgehog33():
    solver_cfg = SolverConfig(seed=42)
    return minimize(initial_field(GridSpec(33), BoundaryConfig(), solver_cfg), solver_cfg)


def test_hedgehog_descent_converges_on_gradient(hedgehog33) -> None:
    _, report = hedgehog33
    assert report.converged
    assert report.grad_sup_norm <= 1e-5
    assert report.monotone
    totals = report.trace["total"].to_numpy()
    assert np.all(np.diff(totals) < 0.0)


def test_hedgehog_core_is_negative_uniaxial(hedgehog33) -> None:
    final, _ = hedgehog33
    assert min_interior_beta(final) <= -0.9

    candidates = detect_candidates(final)
    assert len(candidates) >= 1
    assert len({c.cluster_id for c in candidates}) >= 1


@pytest.mark.skipif(not BASELINE.exists(), reason="run scripts/run_hedgehog_baseline.py first")
def test_hedgehog_matches_recorded_baseline() -> None:
    baseline = json.loads(BASELINE.read_text(encoding="utf-8"))
    solver_cfg = SolverConfig(max_iters=baseline["max_iters"], seed=42)
    final, report = minimize(initial_field(GridSpec(33), BoundaryConfig(), solver_cfg), solver_cfg)

    assert report.iterations == baseline["solver"]["iterations"]
    assert report.final.total == pytest.approx(baseline["solver"]["final_energy"]["total"], rel=1e-9)

    table = candidate_table(analyze_field(final, AnalysisConfig()))
    counts = table["classification"].value_counts().to_dict() if len(table) else {}
    assert counts == baseline["classifications"]
