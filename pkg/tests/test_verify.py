from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from scipy.spatial.transform import Rotation

from qtensor_defects.verify import PROPERTIES, bisection_eigenvalues, format_table, run_battery

TAU_PROPERTIES = {"split_identities", "tau_order"}


@pytest.fixture(scope="module")
def clean_table() -> pd.DataFrame:
    return run_battery()


def test_clean_battery_passes(clean_table: pd.DataFrame) -> None:
    assert list(clean_table.columns) == ["property", "value", "tolerance", "passed"]
    assert len(clean_table) == len(PROPERTIES)
    assert clean_table["passed"].all(), clean_table.loc[~clean_table["passed"]].to_string()


def test_battery_is_deterministic(clean_table: pd.DataFrame) -> None:
    pd.testing.assert_frame_equal(run_battery(), clean_table)


def test_expansion_order_is_three_halves(clean_table: pd.DataFrame) -> None:
    row = clean_table.set_index("property").loc["expansion_order"]
    assert row["value"] == pytest.approx(1.5, abs=0.05)


def test_perturbed_tau_is_caught() -> None:
    table = run_battery(tau_offset=1e-6).set_index("property")
    failed = set(table.index[~table["passed"]])
    assert failed == TAU_PROPERTIES
    assert "FAIL" in format_table(table.reset_index())


def test_bisection_oracle_recovers_known_spectra() -> None:
    values = np.array([[2.0, -0.5, -1.5], [1.0, 0.25, -1.25], [0.5, 0.5, -1.0]])
    rotations = Rotation.random(3, random_state=0).as_matrix()
    matrices = rotations @ (values[:, :, None] * np.eye(3)) @ np.swapaxes(rotations, 1, 2)
    assert np.allclose(bisection_eigenvalues(matrices), values, atol=1e-12)
