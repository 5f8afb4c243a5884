#!/usr/bin/env python3
"""Minimize the hedgehog problem and record the regression baseline.

- Build hedgehog boundary data on an N³ grid and validate it
- Run projected descent to a critical point
- Analyze the defect set of the result
- Save the trace, snapshot and report under artifacts/ with a run id
- Write baselines/hedgehog_n{N}.json, which tests/test_baseline.py compares against
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

# Handle imports for both installed and development environments
try:
    from analysis.pipeline import analyze_field, candidate_table, write_report
    from analysis.plots import plot_beta_slice, plot_energy_trace
    from fields.boundary import validate_boundary
    from fields.grid import GridSpec
    from fields.io import save_snapshot
    from qtensor_defects.config import (
        AnalysisConfig,
        BoundaryConfig,
        SolverConfig,
        configure_logging,
        ensure_directories,
        load_settings,
        set_global_seed,
    )
    from solver.minimize import initial_field, minimize, write_trace
except ImportError:
    REPO_ROOT = Path(__file__).resolve().parents[1]
    SRC_PATH = REPO_ROOT / "src"
    if str(SRC_PATH) not in sys.path:
        sys.path.insert(0, str(SRC_PATH))

    from analysis.pipeline import analyze_field, candidate_table, write_report
    from analysis.plots import plot_beta_slice, plot_energy_trace
    from fields.boundary import validate_boundary
    from fields.grid import GridSpec
    from fields.io import save_snapshot
    from qtensor_defects.config import (
        AnalysisConfig,
        BoundaryConfig,
        SolverConfig,
        configure_logging,
        ensure_directories,
        load_settings,
        set_global_seed,
    )
    from solver.minimize import initial_field, minimize, write_trace


logger = logging.getLogger(__name__)


def parse_args() -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Minimize the hedgehog problem and record the regression baseline",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--grid-size", type=int, default=33, help="Nodes per axis (odd, >= 9)")
    parser.add_argument("--max-iters", type=int, default=5000, help="Descent iteration cap")
    parser.add_argument("--threads", type=int, default=1, help="Analysis threads")
    parser.add_argument("--save-plots", action="store_true", default=False, help="Save diagnostic plots")
    parser.add_argument(
        "--no-baseline",
        action="store_true",
        default=False,
        help="Do not overwrite the baseline JSON",
    )
    parser.add_argument("--run-id", type=str, default=None, help="Custom run ID (default: timestamp)")
    return parser.parse_args()


def main() -> None:
    """Main execution function."""
    configure_logging()
    logger.info("=" * 80)
    logger.info("Hedgehog baseline")
    logger.info("=" * 80)

    args = parse_args()
    settings = load_settings()
    ensure_directories(settings)
    set_global_seed(settings.random_seed)

    run_id = args.run_id or datetime.now().strftime("%Y%m%d_%H%M%S")
    logger.info("Run ID: %s", run_id)

    # --- Step 1: Boundary data ---
    logger.info("\n[Step 1] Building hedgehog boundary data (N=%d)...", args.grid_size)
    spec = GridSpec(args.grid_size)
    boundary = BoundaryConfig()
    solver_cfg = SolverConfig(max_iters=args.max_iters, seed=settings.random_seed)
    start = initial_field(spec, boundary, solver_cfg)
    degree = validate_boundary(start, boundary.delta_cfg)

    # --- Step 2: Descent ---
    logger.info("\n[Step 2] Running projected descent...")
    final, report = minimize(start, solver_cfg)
    logger.info("Stopped after %d iterations (%s)", report.iterations, report.stop_reason)

    # --- Step 3: Defect analysis ---
    logger.info("\n[Step 3] Analyzing the defect set...")
    defects = analyze_field(final, AnalysisConfig(), threads=args.threads)
    table = candidate_table(defects)
    counts = table["classification"].value_counts().to_dict() if len(table) else {}
    logger.info("Classifications: %s", counts)

    # --- Step 4: Artifacts ---
    logger.info("\n[Step 4] Saving artifacts...")
    save_snapshot(final, settings.artifacts_dir / f"hedgehog_n{spec.n}_{run_id}.qfld")
    write_trace(report.trace, settings.reports_dir / f"hedgehog_trace_{run_id}.csv")
    write_report(defects, settings.reports_dir / f"hedgehog_defects_{run_id}.json")
    table.to_csv(settings.reports_dir / f"hedgehog_candidates_{run_id}.csv", index=False)

    if args.save_plots:
        plot_energy_trace(
            report.trace,
            title=f"Hedgehog descent (Run: {run_id})",
            save_path=settings.plots_dir / f"hedgehog_trace_{run_id}.png",
        )
        plot_beta_slice(final, axis=2, save_path=settings.plots_dir / f"hedgehog_beta_{run_id}.png")
        logger.info("Plots saved to %s", settings.plots_dir)

    # --- Step 5: Baseline ---
    baseline = {
        "run_id": run_id,
        "timestamp": datetime.now().isoformat(),
        "grid_size": spec.n,
        "max_iters": args.max_iters,
        "boundary_degree": degree,
        "solver": report.to_dict(),
        "min_beta": defects.min_beta,
        "cluster_count": defects.cluster_count,
        "classifications": counts,
    }
    if args.no_baseline:
        logger.info("\n[Step 5] Baseline left untouched (--no-baseline)")
    else:
        logger.info("\n[Step 5] Writing regression baseline...")
        settings.baseline_dir.mkdir(parents=True, exist_ok=True)
        baseline_file = settings.baseline_dir / f"hedgehog_n{spec.n}.json"
        with open(baseline_file, "w") as f:
            json.dump(baseline, f, indent=2, default=str)
        logger.info("Baseline saved to %s", baseline_file)

    logger.info("\n" + "=" * 80)
    logger.info("HEDGEHOG BASELINE SUMMARY")
    logger.info("=" * 80)
    logger.info("  Energy:       %.10f", report.final.total)
    logger.info("  Iterations:   %d", report.iterations)
    logger.info("  Converged:    %s", report.converged)
    logger.info("  Grad sup:     %.3e", report.grad_sup_norm)
    logger.info("  min beta:     %.4f", defects.min_beta)
    logger.info("  Candidates:   %d in %d clusters", len(defects.candidates), defects.cluster_count)


if __name__ == "__main__":
    main()
