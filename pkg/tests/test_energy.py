from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.spatial.transform import Rotation
from sklearn.linear_model import LinearRegression

from fields.boundary import hedgehog_boundary
from fields.grid import INTERIOR, GridSpec, QField
from fields.synthetic import synthetic_disclination, uniform_field
from qtensor_defects.errors import DegreeMismatch, NotUnitNorm
from solver.energy import (
    LdGParameters,
    PenaltyWeights,
    constrained_energy,
    ek_energy,
    ek_residual,
    energy_density,
    energy_gradient,
    full_energy,
    full_energy_gradient,
    leading_density,
    tangent_projection,
)
from tensors.polynomials import TangentPolynomial, laplacian, monomial_count
from tensors.qcore import biaxiality, uniaxial_coeffs

SQRT6 = np.sqrt(6.0)
E3 = np.array([0.0, 0.0, 1.0])
BUMP_RADIUS = 0.7


def _bump_angle(r: np.ndarray) -> np.ndarray:
    t = np.clip(r**2 / BUMP_RADIUS**2, 0.0, 1.0)
    return 0.4 * (1.0 - t) ** 4


def _bump_field(spec: GridSpec, centre: np.ndarray, rotation: Rotation | None = None) -> QField:
    """Director tilted about e₁ by a compactly supported angle."""

    x = spec.positions()
    matrix = np.eye(3) if rotation is None else rotation.as_matrix()
    local = x @ matrix  # Rᵀx
    theta = _bump_angle(np.linalg.norm(local - centre, axis=-1))
    n = np.stack([np.zeros_like(theta), np.sin(theta), np.cos(theta)], axis=-1) @ matrix.T
    field = QField.empty(spec)
    field.coeffs[field.active] = uniaxial_coeffs(n[field.active], "+")
    return field


def _random_tangent(field: QField, rng: np.random.Generator) -> np.ndarray:
    direction = np.zeros_like(field.coeffs)
    inner = field.interior
    direction[inner] = tangent_projection(field.coeffs[inner], rng.normal(size=direction[inner].shape))
    return direction / np.linalg.norm(direction)


def test_constant_fields() -> None:
    spec = GridSpec(17)
    positive = uniform_field(spec, E3, "+")
    energy = constrained_energy(positive)
    assert np.isclose(energy.total, 0.0, atol=1e-13)
    assert np.max(np.abs(energy_gradient(positive))) < 1e-12

    negative = uniform_field(spec, E3, "-")
    energy = constrained_energy(negative)
    interior_count = int(np.sum(spec.roles() == INTERIOR))
    assert energy.dirichlet == 0.0
    assert np.isclose(energy.potential, 2.0 / (3.0 * SQRT6) * spec.h**3 * interior_count)
    assert np.isclose(energy.total, energy.dirichlet + energy.potential, atol=1e-12)


def test_constrained_energy_rejects_off_sphere_fields() -> None:
    field = hedgehog_boundary(GridSpec(9))
    field.coeffs *= 1.01
    with pytest.raises(NotUnitNorm):
        constrained_energy(field)


def test_gradient_matches_directional_differences() -> None:
    field = hedgehog_boundary(GridSpec(17))
    grad = energy_gradient(field)
    rng = np.random.default_rng(7)
    eps = 1e-6
    scale = np.linalg.norm(grad)

    for _ in range(100):
        v = _random_tangent(field, rng)
        plus, minus = field.copy(), field.copy()
        plus.coeffs += eps * v
        minus.coeffs -= eps * v
        fd = (constrained_energy(plus).total - constrained_energy(minus).total) / (2.0 * eps)
        assert abs(fd - np.sum(grad * v)) <= 1e-6 * scale


def test_gradient_is_tangent_and_zero_on_the_shell() -> None:
    field = hedgehog_boundary(GridSpec(17))
    grad = energy_gradient(field)
    assert np.all(grad[~field.interior] == 0.0)
    assert np.max(np.abs(np.sum(grad * field.coeffs, axis=-1))) < 1e-12


def test_full_energy_special_values() -> None:
    spec = GridSpec(17)
    interior_count = int(np.sum(spec.roles() == INTERIOR))
    weights = PenaltyWeights(lam=1.0, mu=500.0)

    assert np.isclose(full_energy(uniform_field(spec, E3, "+"), weights), 0.0, atol=1e-13)

    zero = QField.empty(spec)
    expected = spec.h**3 * interior_count * (1.0 / (12.0 * SQRT6) + 500.0 / 4.0)
    assert np.isclose(full_energy(zero, weights), expected)

    hedgehog = hedgehog_boundary(spec)
    assert np.isclose(full_energy(hedgehog, weights), constrained_energy(hedgehog).total, atol=1e-10)


def test_penalty_gradient_matches_directional_differences() -> None:
    field = hedgehog_boundary(GridSpec(17))
    field.coeffs[field.interior] *= 0.9
    weights = PenaltyWeights(lam=1.0, mu=1e3)
    grad = full_energy_gradient(field, weights)
    assert np.all(grad[~field.interior] == 0.0)

    rng = np.random.default_rng(11)
    eps = 1e-6
    scale = np.linalg.norm(grad)
    for _ in range(10):
        v = np.zeros_like(field.coeffs)
        v[field.interior] = rng.normal(size=v[field.interior].shape)
        v /= np.linalg.norm(v)
        plus, minus = field.copy(), field.copy()
        plus.coeffs += eps * v
        minus.coeffs -= eps * v
        fd = (full_energy(plus, weights) - full_energy(minus, weights)) / (2.0 * eps)
        assert abs(fd - np.sum(grad * v)) <= 1e-6 * scale


def test_landau_de_gennes_parameters() -> None:
    params = LdGParameters(a2=1.0, b2=1.0, c2=1.0, L=2.0)
    assert np.isclose(params.s_plus, 1.5)
    assert np.isclose(params.lam, np.sqrt(2.0 / 3.0) * 1.5 / 2.0)
    assert np.isclose(params.mu, 0.5)
    assert np.isclose(params.energy_factor, 2.0 / 3.0 * 1.5**2 * 2.0)

    n = np.array([0.6, 0.0, 0.8])
    vacuum = params.s_plus * (np.outer(n, n) - np.eye(3) / 3.0)
    assert np.isclose(params.bulk_potential(vacuum), 0.0, atol=1e-12)

    scaled = params.rescale(vacuum)
    assert np.isclose(np.linalg.norm(scaled), 1.0)
    assert np.isclose(biaxiality(scaled), 1.0)

    rng = np.random.default_rng(2)
    raw = rng.normal(size=(2000, 3, 3))
    sym = 0.5 * (raw + np.swapaxes(raw, 1, 2))
    sym -= np.trace(sym, axis1=1, axis2=2)[:, None, None] * np.eye(3) / 3.0
    sym *= rng.uniform(0.0, 3.0, size=(2000, 1, 1))
    assert np.min(params.bulk_potential(sym)) >= -1e-12


def test_energy_expansion_residual_is_third_order() -> None:
    spec = GridSpec(33)
    amplitudes = [0.02, 0.04, 0.08]
    residuals = []
    for amplitude in amplitudes:
        field = synthetic_disclination(spec, E3, amplitude, "half_degree")
        diff = energy_density(field).values - leading_density(field).values
        residuals.append(np.nanmax(np.abs(diff)))

    slope = LinearRegression().fit(np.log(amplitudes).reshape(-1, 1), np.log(residuals)).coef_[0]
    assert slope >= 2.7


def test_energy_is_rotation_invariant_up_to_discretization() -> None:
    spec = GridSpec(33)
    centre = np.array([0.1, 0.05, -0.1])
    rotation = Rotation.from_rotvec([0.4, -0.9, 0.3])
    base = constrained_energy(_bump_field(spec, centre)).total
    rotated = constrained_energy(_bump_field(spec, centre, rotation)).total
    assert base > 0.0
    assert abs(base - rotated) <= 5.0 * spec.h**2


def test_dirichlet_energy_converges_at_second_order() -> None:
    def density(r: float) -> float:
        t = r**2 / BUMP_RADIUS**2
        dtheta = 0.4 * 4.0 * (1.0 - t) ** 3 * (-2.0 * r / BUMP_RADIUS**2)
        return 1.5 * dtheta**2 * 4.0 * np.pi * r**2

    exact, _ = quad(density, 0.0, BUMP_RADIUS, epsabs=1e-13, epsrel=1e-13)
    steps, errors = [], []
    for n in (17, 33, 65):
        spec = GridSpec(n)
        energy = constrained_energy(_bump_field(spec, np.zeros(3)))
        assert np.isclose(energy.potential, 0.0, atol=1e-12)
        steps.append(spec.h)
        errors.append(abs(energy.total - exact))

    slope = LinearRegression().fit(np.log(steps).reshape(-1, 1), np.log(errors)).coef_[0]
    assert slope >= 1.7


def test_ek_energy_of_harmonic_quadratic() -> None:
    coeffs = np.zeros((2, monomial_count(2)))
    coeffs[1, 1] = 1.0
    tangent = TangentPolynomial(degree=2, coeffs=coeffs, p0=E3)

    assert np.isclose(ek_energy(tangent), 0.5 * 8.0 * np.pi / 15.0)
    assert np.nanmax(ek_residual(tangent).values) < 1e-12

    zero_source = np.zeros((1, 1, 1, 3, 3))
    assert np.isclose(ek_energy(tangent, zero_source), ek_energy(tangent))


def test_ek_residual_vanishes_for_manufactured_source() -> None:
    coeffs = np.zeros((2, monomial_count(3)))
    coeffs[0, 0] = 1.0  # x³ E₁
    coeffs[1, 4] = -0.5  # x y z E₂
    tangent = TangentPolynomial(degree=3, coeffs=coeffs, p0=np.array([1.0, 2.0, 2.0]) / 3.0)
    source = laplacian(tangent.matrix_cube()) / SQRT6

    residual = ek_residual(tangent, source)
    assert np.nanmax(residual.values) < 1e-12
    assert np.nanmax(ek_residual(tangent).values) > 1e-3


def test_ek_rejects_wrong_source_degree() -> None:
    coeffs = np.zeros((2, monomial_count(2)))
    coeffs[0, 0] = 1.0
    tangent = TangentPolynomial(degree=2, coeffs=coeffs, p0=E3)
    source = np.zeros((2, 2, 2, 3, 3))
    source[1, 0, 0] = np.eye(3)
    with pytest.raises(DegreeMismatch):
        ek_energy(tangent, source)
    with pytest.raises(DegreeMismatch):
        ek_residual(tangent, source)
