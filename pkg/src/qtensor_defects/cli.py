"""Command-line entry point: ``qtensor-defects {minimize,analyze,synthesize,verify}``.

Exit codes: 0 on success, 1 on configuration, snapshot, boundary or IO
problems (one diagnostic line on stderr), 2 when the descent does not
converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from analysis.pipeline import analyze_field, write_report
from analysis.plots import plot_beta_slice, plot_energy_trace
from fields.boundary import validate_boundary
from fields.grid import GridSpec, beta_field, s_field
from fields.io import load_snapshot, save_snapshot, write_vtk_scalar
from fields.synthetic import synthesize
from solver.minimize import initial_field, minimize, resume, write_trace

from .config import RunConfig, config_hash, configure_logging, load_run_config, set_global_seed
from .errors import BoundaryValidationError, ConfigError, CorruptSnapshot, LineSearchStall, NonFiniteEnergy
from .verify import format_table, run_battery

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration (defaults if omitted)")
    parser.add_argument("--out", type=Path, default=None, help="Override output.directory")
    parser.add_argument("--threads", type=int, default=None, help="Override the analysis thread count")
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Override the configured log level",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtensor-defects",
        description="Minimize S4-constrained Q-tensor energies and analyze their defect sets",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("minimize", help="Projected descent from the configured boundary data")
    _add_common(run)
    run.add_argument("--resume", type=Path, default=None, help="Checkpoint snapshot to continue from")

    analyze = sub.add_parser("analyze", help="Detect and classify defects in a snapshot")
    _add_common(analyze)
    analyze.add_argument("--snapshot", type=Path, required=True, help="Field snapshot (.qfld)")

    synth = sub.add_parser("synthesize", help="Write a synthetic ground-truth field")
    _add_common(synth)

    verify = sub.add_parser("verify", help="Run the property battery")
    verify.add_argument("--seed", type=int, default=None, help="Base seed of the battery")
    verify.add_argument("--log-level", type=str, default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    verify.add_argument("--tau-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _effective_config(args: argparse.Namespace) -> tuple[RunConfig, str]:
    """Load the run config, hash it, then apply command-line overrides.

    The hash covers the config as loaded; overrides only affect where
    files go and how fast they are produced.
    """

    cfg = load_run_config(args.config) if args.config is not None else RunConfig()
    digest = config_hash(cfg)
    if args.out is not None:
        cfg.output.directory = str(args.out)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg.threads = args.threads
    if args.log_level is not None:
        cfg.log_level = args.log_level
    return cfg, digest


def _output_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_minimize(cfg: RunConfig, digest: str, resume_from: Path | None = None) -> int:
    out = _output_dir(cfg)
    checkpoint_path = out / cfg.output.field
    if resume_from is not None:
        field, solver_cfg, state = resume(resume_from)
    else:
        field = initial_field(GridSpec(cfg.grid.n), cfg.boundary, cfg.solver)
        solver_cfg, state = cfg.solver, None
    degree = validate_boundary(field, cfg.boundary.delta_cfg)

    final, report = minimize(field, solver_cfg, state=state, checkpoint_path=checkpoint_path)

    save_snapshot(final, checkpoint_path)
    write_trace(report.trace, out / cfg.output.trace)
    payload = {"config_hash": digest, "boundary_degree": degree, **report.to_dict()}
    (out / cfg.output.solver_report).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("Solver report written to %s", out / cfg.output.solver_report)
    if cfg.output.plots:
        plot_energy_trace(report.trace, title=f"Projected descent (N={cfg.grid.n})", save_path=out / "energy_trace.png")

    if not report.converged:
        logger.warning("Descent hit max_iters=%d without converging", solver_cfg.max_iters)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, digest: str, snapshot: Path) -> int:
    field = load_snapshot(snapshot)
    out = _output_dir(cfg)
    report = analyze_field(field, cfg.analysis, threads=cfg.threads, config_hash=digest)
    write_report(report, out / cfg.output.defects)
    # exterior nodes carry no data; VTK readers want finite values
    write_vtk_scalar(beta_field(field), out / cfg.output.beta_vtk, "beta", fill=1.0)
    write_vtk_scalar(s_field(field), out / cfg.output.s_vtk, "s", fill=0.0)
    if cfg.output.plots:
        plot_beta_slice(field, axis=2, save_path=out / "beta_slice.png")
    logger.info("Report lists %d candidates (%d analyzed)", len(report.candidates), report.analyzed)
    return EXIT_OK


def cmd_synthesize(cfg: RunConfig) -> int:
    syn = cfg.synthetic
    field = synthesize(
        GridSpec(cfg.grid.n),
        syn.case,
        np.asarray(syn.axis, dtype=float),
        syn.amplitude,
        exchange_lambda=syn.exchange_lambda,
    )
    save_snapshot(field, _output_dir(cfg) / cfg.output.field)
    logger.info("Synthetic %s field written (N=%d)", syn.case, cfg.grid.n)
    return EXIT_OK


def cmd_verify(seed: int | None = None, tau_offset: float = 0.0) -> int:
    table = run_battery(tau_offset=tau_offset) if seed is None else run_battery(seed=seed, tau_offset=tau_offset)
    print(format_table(table))
    failed = table.loc[~table["passed"], "property"].tolist()
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_INPUT
    print(f"all {len(table)} properties passed")
    return EXIT_OK


def _fail(code: int, exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "verify":
        configure_logging(args.log_level)
        return cmd_verify(args.seed, args.tau_offset)

    try:
        cfg, digest = _effective_config(args)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    configure_logging(cfg.log_level)
    logging.getLogger().setLevel(cfg.log_level)
    set_global_seed(cfg.solver.seed)
    logger.info("Command %s, config hash %s", args.command, digest[:12])

    try:
        if args.command == "minimize":
            return cmd_minimize(cfg, digest, args.resume)
        if args.command == "analyze":
            return cmd_analyze(cfg, digest, args.snapshot)
        return cmd_synthesize(cfg)
    except (ConfigError, CorruptSnapshot, BoundaryValidationError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    except (LineSearchStall, NonFiniteEnergy) as exc:
        return _fail(EXIT_NOT_CONVERGED, exc)


if __name__ == "__main__":
    sys.exit(main())
