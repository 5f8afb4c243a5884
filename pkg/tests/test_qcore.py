from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from qtensor_defects.errors import NonSymmetric, NonUnitVector, ZeroTensor
from qtensor_defects.verify import bisection_eigenvalues
from tensors.qcore import (
    QBASIS,
    QTensor,
    biaxiality,
    eigen_decompose,
    eigh_batch,
    frame_distance,
    make_uniaxial,
    project_to_Up,
    project_to_up_matrices,
    to_coeffs,
    to_matrix,
    up_basis,
)

SQRT6 = np.sqrt(6.0)


def _random_unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_basis_is_orthonormal_symmetric_and_traceless() -> None:
    gram = np.einsum("aij,bij->ab", QBASIS, QBASIS)
    assert np.allclose(gram, np.eye(5), atol=1e-15)
    assert np.allclose(QBASIS, np.swapaxes(QBASIS, 1, 2))
    assert np.allclose(np.trace(QBASIS, axis1=1, axis2=2), 0.0, atol=1e-15)


def test_qtensor_norm_matches_frobenius_norm() -> None:
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = QTensor(rng.normal(size=5))
        assert np.isclose(q.norm, np.linalg.norm(q.matrix), atol=1e-14)
        assert abs(np.trace(q.matrix)) < 1e-14
        assert np.array_equal(q.matrix, q.matrix.T)


def test_biaxiality_examples() -> None:
    assert np.isclose(biaxiality(make_uniaxial(np.array([0.0, 0.6, 0.8]), "+")), 1.0, atol=1e-12)
    negative = QTensor.from_matrix(np.diag([SQRT6 / 6, SQRT6 / 6, -SQRT6 / 3]))
    assert np.isclose(biaxiality(negative), -1.0, atol=1e-12)
    zero_beta = QTensor.from_matrix(np.diag([1 / np.sqrt(2), 0.0, -1 / np.sqrt(2)]))
    assert abs(biaxiality(zero_beta)) < 1e-14


def test_biaxiality_rejects_zero_tensor() -> None:
    with pytest.raises(ZeroTensor):
        biaxiality(np.zeros(5))


def test_uniaxial_extremes_for_random_directions() -> None:
    n = _random_unit_vectors(np.random.default_rng(1), 1000)
    plus = np.array([make_uniaxial(v, "+").coeffs for v in n])
    minus = np.array([make_uniaxial(v, "-").coeffs for v in n])
    assert np.allclose(biaxiality(plus), 1.0, atol=1e-12)
    assert np.allclose(biaxiality(minus), -1.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(plus, axis=1), 1.0, atol=1e-12)


def test_make_uniaxial_examples() -> None:
    e3 = np.array([0.0, 0.0, 1.0])
    assert np.allclose(make_uniaxial(e3, "+").matrix, np.diag([-1.0, -1.0, 2.0]) / SQRT6, atol=1e-15)
    assert np.allclose(make_uniaxial(e3, "-").matrix, np.diag([1.0, 1.0, -2.0]) / SQRT6, atol=1e-15)
    with pytest.raises(NonUnitVector):
        make_uniaxial(np.array([0.0, 0.0, 1.1]), "+")


def test_biaxiality_matches_eigen_route_and_is_rotation_invariant() -> None:
    rng = np.random.default_rng(2)
    coeffs = rng.normal(size=(200, 5))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    values, _ = eigh_batch(to_matrix(coeffs))
    assert np.allclose(biaxiality(coeffs), SQRT6 * np.sum(values**3, axis=1), atol=1e-12)

    rotations = Rotation.random(200, random_state=3).as_matrix()
    rotated = to_coeffs(rotations @ to_matrix(coeffs) @ np.swapaxes(rotations, 1, 2))
    assert np.allclose(biaxiality(rotated), biaxiality(coeffs), atol=1e-12)


def test_eigen_decompose_examples() -> None:
    system = eigen_decompose(np.diag([2.0, -1.0, -1.0]) / SQRT6)
    assert np.allclose(system.values, np.array([2.0, -1.0, -1.0]) / SQRT6, atol=1e-15)
    assert np.allclose(np.abs(system.n), [1.0, 0.0, 0.0], atol=1e-14)

    zero = eigen_decompose(QTensor(np.zeros(5)))
    assert np.array_equal(zero.values, np.zeros(3))
    assert np.allclose(zero.frame, np.eye(3))


def test_eigen_decompose_matches_bisection_oracle() -> None:
    rng = np.random.default_rng(4)
    matrices = to_matrix(rng.normal(size=(100_000, 5)))

    values, frames = eigh_batch(matrices)
    oracle = bisection_eigenvalues(matrices)

    assert np.max(np.abs(values - oracle)) <= 1e-10
    assert np.all(values[:, 0] >= values[:, 1]) and np.all(values[:, 1] >= values[:, 2])
    assert np.max(np.abs(values.sum(axis=1))) <= 1e-12

    gram = np.einsum("nki,nkj->nij", frames, frames)
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-12
    assert np.allclose(np.linalg.det(frames), 1.0, atol=1e-12)
    rebuilt = np.einsum("nij,nj,nkj->nik", frames, values, frames)
    assert np.max(np.linalg.norm(rebuilt - matrices, axis=(1, 2))) <= 1e-10


def test_degenerate_pair_basis_follows_canonical_index_order() -> None:
    v = np.array([0.8, 0.6, 0.0])
    uniaxial = np.outer(v, v) - np.eye(3) / 3.0
    values, frames = eigh_batch(np.stack([uniaxial, -uniaxial]))
    first_axis = np.array([0.6, -0.8, 0.0])

    # isolated top: m comes from e₁ projected off n
    assert np.allclose(values[0], [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], atol=1e-14)
    assert np.allclose(np.abs(frames[0][:, 0] @ v), 1.0, atol=1e-14)
    assert np.allclose(frames[0][:, 1], first_axis, atol=1e-14)

    # isolated bottom: n comes from e₁ projected off p
    assert np.allclose(np.abs(frames[1][:, 2] @ v), 1.0, atol=1e-14)
    assert np.allclose(frames[1][:, 0], first_axis, atol=1e-14)
    assert np.allclose(np.linalg.det(frames), 1.0, atol=1e-12)


def test_eigen_decompose_near_degenerate_pairs_stays_accurate() -> None:
    rng = np.random.default_rng(5)
    rotations = Rotation.random(500, random_state=6).as_matrix()
    eps = 10.0 ** rng.uniform(-14, -6, size=500)
    diag = np.stack([SQRT6 / 6 + eps, SQRT6 / 6 - eps, -SQRT6 / 3 + 0 * eps], axis=1)
    matrices = rotations @ (diag[:, :, None] * np.eye(3)) @ np.swapaxes(rotations, 1, 2)

    values, frames = eigh_batch(matrices)
    assert np.max(np.abs(values - diag)) <= 1e-12
    rebuilt = np.einsum("nij,nj,nkj->nik", frames, values, frames)
    assert np.max(np.linalg.norm(rebuilt - matrices, axis=(1, 2))) <= 1e-12


def test_project_to_up_examples() -> None:
    rng = np.random.default_rng(7)
    p = np.array([0.0, 0.6, 0.8])
    e1, e2 = up_basis(p)

    inside = 0.3 * e1 - 1.2 * e2
    assert np.allclose(project_to_Up(inside, p).matrix, inside, atol=1e-12)
    assert np.allclose(project_to_Up(np.outer(p, p), p).matrix, 0.0, atol=1e-15)

    v = rng.normal(size=(3, 3))
    v = v + v.T
    tangent = project_to_Up(v, p)
    diff = v - tangent.matrix
    assert abs(np.sum(diff * e1)) < 1e-12 and abs(np.sum(diff * e2)) < 1e-12
    assert np.isclose(tangent.norm, np.linalg.norm(tangent.matrix), atol=1e-14)

    with pytest.raises(NonSymmetric):
        project_to_Up(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]), p)
    with pytest.raises(NonUnitVector):
        project_to_Up(v, 2 * p)


def test_projection_contract_on_random_inputs() -> None:
    rng = np.random.default_rng(8)
    p = _random_unit_vectors(rng, 10_000)
    v = rng.normal(size=(10_000, 3, 3))
    v = v + np.swapaxes(v, 1, 2)

    y = project_to_up_matrices(v, p)
    e1, e2 = up_basis(p)
    assert np.max(np.abs(np.einsum("nij,nj->ni", y, p))) <= 1e-12
    assert np.max(np.abs(np.trace(y, axis1=1, axis2=2))) <= 1e-12
    assert np.max(np.abs(project_to_up_matrices(y, p) - y)) <= 1e-12
    assert np.max(np.abs(np.einsum("nij,nij->n", v - y, e1))) <= 1e-12
    assert np.max(np.abs(np.einsum("nij,nij->n", v - y, e2))) <= 1e-12


def test_frame_distance_examples() -> None:
    rng = np.random.default_rng(9)
    frame = Rotation.random(random_state=10).as_matrix()
    assert frame_distance(frame, frame) == 0.0

    flipped = frame * rng.choice([-1.0, 1.0], size=3)
    assert np.isclose(frame_distance(frame, flipped), 0.0, atol=1e-15)

    n, m, p = frame.T
    quarter_turn = np.stack([m, -n, p], axis=1)
    assert np.isclose(frame_distance(frame, quarter_turn), 1.0, atol=1e-12)
    assert np.isclose(frame_distance(frame, quarter_turn, unordered=True), 0.0, atol=1e-12)
