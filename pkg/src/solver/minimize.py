"""Projected descent on the product of spheres S⁴, one per interior node.

Each iteration takes a trial step from the Barzilai–Borwein estimate of the
previous iterate pair, then backtracks until the Armijo condition holds on
the true (post-normalization) energy. Boundary-shell values are never
written.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal

import numpy as np
import pandas as pd

from fields.boundary import boundary_from_config
from fields.grid import GridSpec, QField
from fields.io import load_snapshot, save_snapshot
from qtensor_defects.config import BoundaryConfig, SolverConfig
from qtensor_defects.errors import CorruptSnapshot, LineSearchStall, NonFiniteEnergy, NotUnitNorm
from tensors.perturb import NORM_TOL

from .energy import (
    EnergyBreakdown,
    PenaltyWeights,
    energy_and_gradient,
    full_energy_gradient,
    penalty_energy,
    tangent_projection,
)

logger = logging.getLogger(__name__)

MIN_STEP = 1e-14
MAX_STEP_FACTOR = 1e3
TRACE_COLUMNS = ["iter", "dirichlet", "potential", "total", "grad_norm"]

StopReason = Literal["grad_tol", "energy_tol", "max_iters"]


@dataclass(slots=True)
class SolverState:
    """What a resumed run needs besides the field itself."""

    iteration: int = 0
    next_step: float | None = None
    trace: list[dict[str, float]] = field(default_factory=list)


@dataclass(slots=True)
class SolverReport:
    """Outcome of a descent run; outputs are critical points, not certified minima."""

    iterations: int
    final: EnergyBreakdown
    grad_sup_norm: float
    monotone: bool
    wall_time: float
    converged: bool
    stop_reason: StopReason
    mode: str
    max_norm_deviation: float
    trace: pd.DataFrame
    label: str = "critical point"
    last_step: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "mode": self.mode,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "monotone": self.monotone,
            "grad_sup_norm": self.grad_sup_norm,
            "max_norm_deviation": self.max_norm_deviation,
            "wall_time": self.wall_time,
            "last_step": self.last_step,
            "final_energy": self.final.to_dict(),
        }


def default_step(spec: GridSpec, cfg: SolverConfig) -> float:
    return cfg.step0 if cfg.step0 is not None else 0.5 / spec.h


def _objective(cfg: SolverConfig) -> Callable[[QField], tuple[EnergyBreakdown, np.ndarray]]:
    if cfg.mode == "constrained":
        return lambda f: energy_and_gradient(f, check=False)
    weights = PenaltyWeights(lam=cfg.lam, mu=cfg.mu)
    return lambda f: (penalty_energy(f, weights), full_energy_gradient(f, weights))


def _update(field: QField, grad: np.ndarray, alpha: float, constrained: bool) -> QField:
    trial = field.copy()
    inner = field.interior
    moved = field.coeffs[inner] - alpha * grad[inner]
    if constrained:
        moved /= np.linalg.norm(moved, axis=-1, keepdims=True)
    trial.coeffs[inner] = moved
    return trial


def _bb_step(s: np.ndarray, y: np.ndarray, fallback: float, cap: float) -> float:
    sy = float(np.sum(s * y))
    if sy <= 0.0 or not np.isfinite(sy):
        return fallback
    return float(min(np.sum(s * s) / sy, cap))


def perturb_interior(field: QField, amplitude: float, seed: int) -> QField:
    """Seeded random tangent perturbation of the interior, renormalized."""

    rng = np.random.default_rng(seed)
    out = field.copy()
    inner = out.interior
    noise = rng.normal(size=out.coeffs[inner].shape)
    noise = tangent_projection(out.coeffs[inner], noise)
    noise /= np.maximum(np.linalg.norm(noise, axis=-1, keepdims=True), 1e-300)
    moved = out.coeffs[inner] + amplitude * noise
    out.coeffs[inner] = moved / np.linalg.norm(moved, axis=-1, keepdims=True)
    return out


def initial_field(spec: GridSpec, boundary: BoundaryConfig, cfg: SolverConfig) -> QField:
    """Boundary data with the configured interior initialization."""

    field = boundary_from_config(spec, boundary)
    if cfg.init == "perturbed":
        field = perturb_interior(field, cfg.init_amplitude, cfg.seed)
    logger.info("Initial field: boundary=%s init=%s N=%d", boundary.type, cfg.init, spec.n)
    return field


def _row(iteration: int, energy: EnergyBreakdown, grad_norm: float) -> dict[str, float]:
    return {
        "iter": iteration,
        "dirichlet": energy.dirichlet,
        "potential": energy.potential,
        "total": energy.total,
        "grad_norm": grad_norm,
    }


def minimize(
    field: QField,
    cfg: SolverConfig,
    state: SolverState | None = None,
    checkpoint_path: Path | str | None = None,
) -> tuple[QField, SolverReport]:
    """Descend ℰ (constrained mode) or ℰ_{λ,μ} (penalty mode).

    Args:
        field: initial field; interior unit-norm in constrained mode.
        cfg: solver settings; ``max_iters`` counts iterations of the whole
            run including those before a resume.
        state: resume state from ``resume``.
        checkpoint_path: snapshot path written every ``cfg.checkpoint_every``
            iterations (with a JSON sidecar).

    Returns:
        The final field and the run report.

    Raises:
        NotUnitNorm: constrained mode started off S⁴.
        NonFiniteEnergy: the energy or gradient is not finite.
        LineSearchStall: the step underflows 1e-14 while the energy still
            changes by more than ``energy_tol``.
    """

    started = time.perf_counter()
    constrained = cfg.mode == "constrained"
    objective = _objective(cfg)
    step0 = default_step(field.spec, cfg)
    cap = MAX_STEP_FACTOR * step0

    if constrained and field.max_norm_deviation() > NORM_TOL:
        raise NotUnitNorm(f"constrained descent needs a unit-norm start (max deviation {field.max_norm_deviation():.3e})")

    state = state or SolverState()
    current = field.copy()
    energy, grad = objective(current)
    if not np.isfinite(energy.total) or not np.all(np.isfinite(grad)):
        raise NonFiniteEnergy(f"initial energy is {energy.total}")
    grad_sup = float(np.max(np.abs(grad)))
    trace = list(state.trace)
    if not trace:
        trace.append(_row(state.iteration, energy, grad_sup))

    iteration = state.iteration
    alpha = state.next_step if state.next_step is not None else step0
    stop_reason: StopReason = "max_iters"
    monotone = True
    last_step = 0.0
    logger.info(
        "Starting %s descent at iteration %d: energy=%.10f grad=%.3e step=%.3e",
        cfg.mode,
        iteration,
        energy.total,
        grad_sup,
        alpha,
    )

    while True:
        if grad_sup <= cfg.grad_tol:
            stop_reason = "grad_tol"
            break
        if iteration >= cfg.max_iters:
            stop_reason = "max_iters"
            break

        grad_sq = float(np.sum(grad**2))
        trial_alpha = alpha
        while True:
            trial = _update(current, grad, trial_alpha, constrained)
            trial_energy, trial_grad = objective(trial)
            if not np.isfinite(trial_energy.total):
                raise NonFiniteEnergy(f"energy became {trial_energy.total} at iteration {iteration + 1}")
            if trial_energy.total <= energy.total - cfg.armijo_c * trial_alpha * grad_sq:
                break
            trial_alpha *= cfg.shrink
            if trial_alpha < MIN_STEP:
                change = abs(energy.total - trial_energy.total)
                if change <= cfg.energy_tol * max(1.0, abs(energy.total)):
                    stop_reason = "energy_tol"
                    break
                raise LineSearchStall(
                    f"step fell below {MIN_STEP:g} at iteration {iteration + 1} (energy {energy.total:.12e})"
                )
        if trial_alpha < MIN_STEP:
            break

        decrease = energy.total - trial_energy.total
        monotone = monotone and bool(decrease >= 0.0)
        s = trial.coeffs[trial.interior] - current.coeffs[current.interior]
        y = trial_grad[trial.interior] - grad[current.interior]
        alpha = max(_bb_step(s, y, step0, cap), MIN_STEP / cfg.shrink)

        iteration += 1
        current, energy, grad = trial, trial_energy, trial_grad
        last_step = trial_alpha
        grad_sup = float(np.max(np.abs(grad)))
        trace.append(_row(iteration, energy, grad_sup))
        logger.debug("iter %d: energy=%.12f grad=%.3e step=%.3e", iteration, energy.total, grad_sup, trial_alpha)
        if iteration % 500 == 0:
            logger.info("iter %d: energy=%.10f grad=%.3e", iteration, energy.total, grad_sup)

        if checkpoint_path is not None and cfg.checkpoint_every and iteration % cfg.checkpoint_every == 0:
            checkpoint(current, checkpoint_path, cfg, SolverState(iteration=iteration, next_step=alpha, trace=trace))

        if decrease <= cfg.energy_tol * max(1.0, abs(energy.total)):
            stop_reason = "grad_tol" if grad_sup <= cfg.grad_tol else "energy_tol"
            break

    converged = stop_reason != "max_iters"
    report = SolverReport(
        iterations=iteration,
        final=energy,
        grad_sup_norm=grad_sup,
        monotone=monotone,
        wall_time=time.perf_counter() - started,
        converged=converged,
        stop_reason=stop_reason,
        mode=cfg.mode,
        max_norm_deviation=float(np.max(np.abs(current.norms()[current.interior] - 1.0))),
        trace=pd.DataFrame(trace, columns=TRACE_COLUMNS),
        last_step=last_step,
    )
    level = logging.INFO if converged else logging.WARNING
    logger.log(
        level,
        "Descent stopped (%s) after %d iterations: energy=%.10f grad=%.3e",
        stop_reason,
        iteration,
        energy.total,
        grad_sup,
    )
    return current, report


# --------------------------------------------------------------------------
# checkpoints and traces
# --------------------------------------------------------------------------


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def checkpoint(field: QField, path: Path | str, cfg: SolverConfig, state: SolverState) -> Path:
    """Write the snapshot plus a JSON sidecar with the solver state."""

    path = save_snapshot(field, path)
    payload = {"solver": asdict(cfg), "state": asdict(state)}
    _sidecar(path).write_text(json.dumps(payload), encoding="utf-8")
    logger.debug("Checkpoint at iteration %d written to %s", state.iteration, path)
    return path


def resume(path: Path | str) -> tuple[QField, SolverConfig, SolverState]:
    """Load a checkpoint written by ``checkpoint``.

    Raises:
        CorruptSnapshot: bad snapshot or unreadable sidecar.
    """

    path = Path(path)
    field = load_snapshot(path)
    try:
        payload = json.loads(_sidecar(path).read_text(encoding="utf-8"))
        cfg = SolverConfig(**payload["solver"])
        state = SolverState(**payload["state"])
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CorruptSnapshot(f"{path}: checkpoint state unreadable ({exc})") from exc
    logger.info("Resuming from %s at iteration %d", path, state.iteration)
    return field, cfg, state


def write_trace(trace: pd.DataFrame, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(path, index=False, float_format="%.17g")
    logger.info("Energy trace (%d rows) written to %s", len(trace), path)
    return path
