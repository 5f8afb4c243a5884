from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import fsolve
from sklearn.linear_model import LinearRegression

from qtensor_defects.errors import EigenvalueGapTooSmall, NonOrthogonal, NotUnitNorm, OutOfRange
from tensors.perturb import (
    DELTA_MAX,
    decompose,
    delta_from_s,
    reconstruct,
    reconstruct_from_tangent,
    split_from_delta,
    tau,
    zeta,
)
from tensors.qcore import QTensor, biaxiality, eigen_decompose, make_uniaxial

SQRT6 = np.sqrt(6.0)
E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    model = LinearRegression().fit(np.log(x).reshape(-1, 1), np.log(y))
    return float(model.coef_[0])


def test_split_from_delta_examples() -> None:
    zero = split_from_delta(0.0)
    assert zero.s == 0.0 and zero.r == 0.0

    def system(x: np.ndarray) -> list[float]:
        s, r = x
        d = 0.01
        return [s + r + d, s**2 + r**2 + d**2 + (SQRT6 / 3) * (s + r - 2 * d)]

    oracle_s, _ = fsolve(system, x0=[0.1, -0.1], xtol=1e-14)
    split = split_from_delta(0.01)
    assert np.isclose(split.s, oracle_s, atol=1e-12)
    assert np.isclose(split.s, 0.105329, atol=1e-6)
    assert abs(split.s - (1.5**0.25 * 0.1 - 0.005)) < 1e-3

    tiny = split_from_delta(1e-6)
    assert abs(tiny.s - 1.5**0.25 * 1e-3) < 1e-9


def test_split_constraint_identities_hold_over_range() -> None:
    for delta in np.linspace(0.0, DELTA_MAX, 10_000):
        split = split_from_delta(delta)
        assert abs(split.s + split.r + split.delta) < 1e-13
        quadratic = split.s**2 + split.r**2 + split.delta**2 + (SQRT6 / 3) * (split.s + split.r - 2 * split.delta)
        assert abs(quadratic) < 1e-12


def test_split_from_delta_rejects_out_of_range() -> None:
    with pytest.raises(OutOfRange):
        split_from_delta(-1e-3)
    with pytest.raises(OutOfRange):
        split_from_delta(0.5)


def test_expansion_defect_has_order_three_halves() -> None:
    deltas = np.logspace(-6, -2, 25)
    s = np.array([split_from_delta(d).s for d in deltas])
    defect = np.abs(s - (1.5**0.25 * np.sqrt(deltas) - deltas / 2))
    assert np.max(defect / deltas**1.5) < 1.0
    assert _slope(deltas, defect) >= 1.4


def test_delta_from_s_examples_and_round_trip() -> None:
    assert delta_from_s(0.0) == 0.0
    s_star = split_from_delta(0.01).s
    assert np.isclose(delta_from_s(s_star), 0.01, atol=1e-10)
    assert abs(delta_from_s(0.01) - (SQRT6 / 3) * 1e-4) < 2e-6

    s_values = np.linspace(0.0, 0.4, 2000)
    recovered = np.array([split_from_delta(d).s for d in delta_from_s(s_values)])
    assert np.max(np.abs(recovered - s_values)) < 1e-12

    with pytest.raises(OutOfRange):
        delta_from_s(0.5)


def test_tau_is_third_order() -> None:
    assert tau(0.0) == 0.0
    assert abs(tau(1e-2)) <= 10 * 1e-6

    sweep = np.logspace(-4, -1, 40)
    assert np.all(np.abs(tau(sweep)) <= 10 * sweep**3)
    assert np.allclose(tau(sweep), delta_from_s(sweep) - (SQRT6 / 3) * sweep**2, rtol=1e-6, atol=1e-15)

    s = np.array([1e-3, 2e-3, 4e-3])
    assert _slope(s, np.abs(tau(s))) >= 2.9


def test_decompose_negative_uniaxial() -> None:
    parts = decompose(make_uniaxial(E3, "-"))
    assert np.allclose(parts.p, E3, atol=1e-14)
    assert parts.U.norm < 1e-14
    assert parts.R.norm < 1e-14


def test_decompose_round_trip_and_remainder_bound() -> None:
    p = np.array([0.0, 0.6, 0.8])
    n = np.array([1.0, 0.0, 0.0])
    q = reconstruct(p, 0.1, n)

    parts = decompose(q)
    assert np.isclose(parts.s, 0.1, atol=1e-9)
    assert np.allclose(parts.p, p, atol=1e-9)
    assert abs(abs(parts.n @ n) - 1.0) < 1e-9
    assert np.allclose(parts.reassemble(), q.matrix, atol=1e-10)
    assert abs(parts.U.matrix @ parts.p).max() < 1e-12

    small = decompose(reconstruct(p, 0.05, n))
    assert small.R.norm <= 3 * 0.05**2


def test_decompose_rejects_invalid_input() -> None:
    with pytest.raises(NotUnitNorm):
        decompose(QTensor(2 * make_uniaxial(E3, "-").coeffs))
    with pytest.raises(EigenvalueGapTooSmall):
        decompose(make_uniaxial(E3, "+"))


def test_reconstruct_examples() -> None:
    assert np.allclose(reconstruct(E3, 0.0, E1).coeffs, make_uniaxial(E3, "-").coeffs, atol=1e-15)

    q = reconstruct(E3, 0.1, E1)
    assert abs(q.norm - 1.0) < 1e-12
    assert abs(np.trace(q.matrix)) < 1e-12
    assert abs(biaxiality(q) - (-1 + 9 * 0.01)) < 1e-2
    assert abs(biaxiality(q) - (-1 + 9 * 0.01)) <= 10 * 0.1**3

    system = eigen_decompose(q)
    assert np.isclose(system.values[0], SQRT6 / 6 + 0.1, atol=1e-12)
    assert abs(abs(system.n @ E1) - 1.0) < 1e-12
    assert abs(abs(system.p @ E3) - 1.0) < 1e-12

    with pytest.raises(NonOrthogonal):
        reconstruct(E3, 0.1, np.array([0.0, 0.6, 0.8]))


def test_reconstruct_respects_eigenvalue_bounds() -> None:
    rng = np.random.default_rng(11)
    for s in rng.uniform(0.0, 0.4, size=50):
        values = eigen_decompose(reconstruct(E3, s, E1)).values
        assert values[0] >= values[1] >= values[2]
        assert values[1] <= SQRT6 / 6 + 1e-12
        assert values[2] >= -SQRT6 / 3 - 1e-12


def test_zeta_is_bounded_by_ten_s_cubed() -> None:
    s = np.logspace(-4, -0.7, 30)
    assert np.all(np.abs(zeta(s)) <= 10 * s**3)


def test_reconstruct_from_tangent_has_requested_u_part() -> None:
    u = np.array([[0.03, -0.04], [0.0, 0.0], [0.1, 0.0]])
    coeffs = reconstruct_from_tangent(E3, u)
    for row, c in zip(u, coeffs):
        parts = decompose(c)
        assert np.allclose(parts.U.u, row, atol=1e-12)
