from __future__ import annotations

import dataclasses

import numpy as np
import pandas as pd
import pytest

from fields.boundary import hedgehog_boundary
from fields.grid import GridSpec
from fields.synthetic import uniform_field
from qtensor_defects.config import BoundaryConfig, SolverConfig
from qtensor_defects.errors import CorruptSnapshot, NonFiniteEnergy, NotUnitNorm
from solver.minimize import TRACE_COLUMNS, SolverState, checkpoint, initial_field, minimize, resume, write_trace


@pytest.fixture(scope="module")
def hedgehog_run():
    start = hedgehog_boundary(GridSpec(17))
    final, report = minimize(start, SolverConfig())
    return start, final, report


def test_uniform_field_is_already_critical() -> None:
    field = uniform_field(GridSpec(17), np.array([0.0, 0.0, 1.0]))
    final, report = minimize(field, SolverConfig())
    assert report.iterations == 0
    assert report.stop_reason == "grad_tol"
    assert report.converged
    assert np.array_equal(final.coeffs, field.coeffs)


def test_hedgehog_descent_converges(hedgehog_run) -> None:
    _, _, report = hedgehog_run
    assert report.converged
    assert report.iterations <= 5000
    assert report.label == "critical point"
    assert report.final.total < report.trace["total"].iloc[0]


def test_hedgehog_trace_is_monotone(hedgehog_run) -> None:
    _, _, report = hedgehog_run
    assert report.monotone
    assert list(report.trace.columns) == TRACE_COLUMNS
    assert np.all(np.diff(report.trace["total"].to_numpy()) <= 0.0)


def test_descent_keeps_shell_and_unit_norm(hedgehog_run) -> None:
    start, final, report = hedgehog_run
    assert np.array_equal(final.coeffs[final.shell], start.coeffs[start.shell])
    assert np.array_equal(final.roles, start.roles)
    assert report.max_norm_deviation <= 1e-12
    assert np.max(np.abs(final.norms()[final.interior] - 1.0)) <= 1e-12


def test_descent_is_deterministic() -> None:
    cfg = SolverConfig(max_iters=20)
    start = hedgehog_boundary(GridSpec(17))
    first, first_report = minimize(start, cfg)
    second, second_report = minimize(start, cfg)
    assert np.array_equal(first.coeffs, second.coeffs)
    pd.testing.assert_frame_equal(first_report.trace, second_report.trace)


def test_iteration_cap_is_reported() -> None:
    _, report = minimize(hedgehog_boundary(GridSpec(17)), SolverConfig(max_iters=1))
    assert report.iterations == 1
    assert report.stop_reason == "max_iters"
    assert not report.converged
    assert len(report.trace) == 2


def test_constrained_descent_rejects_off_sphere_start() -> None:
    field = hedgehog_boundary(GridSpec(9))
    field.coeffs[field.interior] *= 0.9
    with pytest.raises(NotUnitNorm):
        minimize(field, SolverConfig())


def test_penalty_descent_stays_near_the_sphere() -> None:
    cfg = SolverConfig(mode="penalty", mu=1e3, lam=1.0, max_iters=200)
    start = hedgehog_boundary(GridSpec(17))
    final, report = minimize(start, cfg)
    assert report.mode == "penalty"
    assert report.monotone
    assert report.max_norm_deviation <= 0.05
    assert np.array_equal(final.coeffs[final.shell], start.coeffs[start.shell])


def test_penalty_descent_rejects_non_finite_fields() -> None:
    field = hedgehog_boundary(GridSpec(9))
    index = tuple(np.argwhere(field.interior)[0])
    field.coeffs[index] = np.nan
    with pytest.raises(NonFiniteEnergy):
        minimize(field, SolverConfig(mode="penalty"))


def test_resume_reproduces_uninterrupted_run(tmp_path) -> None:
    start = hedgehog_boundary(GridSpec(17))
    path = tmp_path / "state.qfld"

    minimize(start, SolverConfig(max_iters=3, checkpoint_every=3), checkpoint_path=path)
    field, cfg, state = resume(path)
    assert state.iteration == 3
    assert cfg.checkpoint_every == 3
    resumed, resumed_report = minimize(field, dataclasses.replace(cfg, max_iters=6, checkpoint_every=0), state=state)

    direct, direct_report = minimize(start, SolverConfig(max_iters=6))
    assert resumed_report.iterations == direct_report.iterations == 6
    assert np.array_equal(resumed.coeffs, direct.coeffs)
    pd.testing.assert_frame_equal(resumed_report.trace, direct_report.trace)


def test_resume_rejects_corrupt_sidecar(tmp_path) -> None:
    path = tmp_path / "state.qfld"
    checkpoint(hedgehog_boundary(GridSpec(9)), path, SolverConfig(), SolverState())
    (tmp_path / "state.qfld.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(CorruptSnapshot):
        resume(path)


def test_initial_field_perturbation_is_seeded() -> None:
    spec = GridSpec(17)
    cfg = SolverConfig(init="perturbed", init_amplitude=0.05, seed=3)
    first = initial_field(spec, BoundaryConfig(), cfg)
    second = initial_field(spec, BoundaryConfig(), cfg)
    radial = initial_field(spec, BoundaryConfig(), SolverConfig())

    assert np.array_equal(first.coeffs, second.coeffs)
    assert not np.array_equal(first.coeffs, radial.coeffs)
    assert np.array_equal(first.coeffs[first.shell], radial.coeffs[radial.shell])
    assert first.max_norm_deviation() <= 1e-12


def test_accepted_step_lives_in_the_report() -> None:
    _, report = minimize(hedgehog_boundary(GridSpec(9)), SolverConfig(max_iters=2))
    assert TRACE_COLUMNS == ["iter", "dirichlet", "potential", "total", "grad_norm"]
    assert "step" not in report.trace.columns
    assert 1 <= report.iterations <= 2
    assert report.last_step > 0.0
    assert report.to_dict()["last_step"] == report.last_step


def test_write_trace_round_trips_columns(tmp_path) -> None:
    _, report = minimize(hedgehog_boundary(GridSpec(9)), SolverConfig(max_iters=2))
    path = write_trace(report.trace, tmp_path / "out" / "trace.csv")
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == TRACE_COLUMNS
    assert np.array_equal(loaded["total"].to_numpy(), report.trace["total"].to_numpy())
