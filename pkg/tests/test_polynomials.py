from __future__ import annotations

import numpy as np

from tensors.polynomials import (
    TangentPolynomial,
    ball_moment,
    cube_from_homogeneous,
    derivative,
    evaluate,
    homogeneous_part,
    integrate_ball,
    is_homogeneous,
    laplacian,
    monomial_count,
    monomial_exponents,
    monomial_matrix,
    multiply,
    total_degree,
)


def test_monomial_order_and_count() -> None:
    assert monomial_exponents(2) == ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))
    for k in range(6):
        assert len(monomial_exponents(k)) == monomial_count(k)


def test_evaluate_and_design_matrix_agree() -> None:
    rng = np.random.default_rng(3)
    points = rng.uniform(-1.0, 1.0, size=(40, 3))
    coeffs = rng.normal(size=monomial_count(3))
    cube = cube_from_homogeneous(coeffs, 3)

    assert np.allclose(evaluate(cube, points), monomial_matrix(points, 3) @ coeffs, atol=1e-13)
    assert is_homogeneous(cube, 3)
    assert total_degree(cube) == 3
    assert np.allclose(homogeneous_part(cube, 3), coeffs)


def test_derivatives_are_exact() -> None:
    # x²y − 3z
    cube = np.zeros((3, 3, 3))
    cube[2, 1, 0] = 1.0
    cube[0, 0, 1] = -3.0
    point = np.array([[0.3, -0.7, 0.2]])

    assert np.isclose(evaluate(derivative(cube, 0), point)[0], 2 * 0.3 * -0.7)
    assert np.isclose(evaluate(derivative(cube, 2), point)[0], -3.0)
    assert np.isclose(evaluate(laplacian(cube), point)[0], 2 * -0.7)


def test_ball_moments() -> None:
    assert np.isclose(ball_moment(0, 0, 0), 4 * np.pi / 3)
    assert np.isclose(ball_moment(2, 0, 0), 4 * np.pi / 15)
    assert np.isclose(ball_moment(2, 2, 0), 4 * np.pi / 105)
    assert np.isclose(ball_moment(4, 0, 0), 4 * np.pi / 35)
    assert ball_moment(1, 2, 0) == 0.0

    x = np.zeros((2, 2, 2))
    x[1, 0, 0] = 1.0
    assert np.isclose(integrate_ball(multiply(x, x)), 4 * np.pi / 15)


def test_tangent_polynomial_values_and_energy() -> None:
    p0 = np.array([0.0, 0.0, 1.0])
    coeffs = np.zeros((2, monomial_count(2)))
    coeffs[1, 1] = 1.0  # x₁x₂·E₂
    tangent = TangentPolynomial(degree=2, coeffs=coeffs, p0=p0)

    assert np.isclose(tangent.dirichlet_energy(), 0.5 * 8 * np.pi / 15)

    rng = np.random.default_rng(5)
    points = rng.uniform(-1.0, 1.0, size=(20, 3))
    matrices = evaluate(tangent.matrix_cube(), points)
    assert np.allclose(matrices @ p0, 0.0, atol=1e-14)
    assert np.allclose(np.trace(matrices, axis1=1, axis2=2), 0.0, atol=1e-14)

    values = tangent.values(points)
    assert np.allclose(values[:, 0], 0.0)
    assert np.allclose(values[:, 1], points[:, 0] * points[:, 1])
    # |U|² equals u₁² + u₂²
    assert np.allclose(np.sum(matrices**2, axis=(1, 2)), np.sum(values**2, axis=1))
