from __future__ import annotations

import numpy as np
import pytest

from analysis.jets import check_Ym_vanishing, compute_Vm, compute_Ym, estimate_jets
from fields.grid import GridSpec
from fields.synthetic import field_from_frames, synthetic_disclination
from qtensor_defects.errors import JetEstimationFailure, OutOfDomain
from tensors.polynomials import evaluate

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
ORIGIN = np.zeros(3)
EPS = 0.1


@pytest.fixture(scope="module")
def spec() -> GridSpec:
    return GridSpec(33)


@pytest.fixture(scope="module")
def bent_field(spec: GridSpec):
    """p = normalize(e₃ + ε·x₁e₁), n = e₂, s ≡ 0.05."""

    x = spec.positions()
    p = E3 + EPS * x[..., :1] * E1
    p /= np.linalg.norm(p, axis=-1, keepdims=True)
    n = np.broadcast_to(E2, p.shape)
    s = np.full(spec.shape, 0.05)
    return field_from_frames(spec, p, s, n)


def test_constant_p_gives_vanishing_sources(spec: GridSpec) -> None:
    field = synthetic_disclination(spec, E3, 0.1, "half_degree")
    for m in (2, 3):
        vpoly = compute_Vm(field, ORIGIN, m)
        assert vpoly.cube.shape == (m - 1, m - 1, m - 1, 3, 3)
        assert np.max(np.abs(vpoly.cube)) < 1e-12
    assert max(check_Ym_vanishing(field, ORIGIN, 3)) < 1e-12


def test_first_jet_of_bent_director(bent_field) -> None:
    jets = estimate_jets(bent_field, ORIGIN, 1)
    assert np.allclose(np.abs(jets.p0), E3, atol=1e-12)
    sign = float(np.sign(jets.p0 @ E3))
    assert np.allclose(sign * jets.get((1, 0, 0)), EPS * E1, atol=1e-6)
    assert np.allclose(jets.get((0, 1, 0)), 0.0, atol=1e-10)
    assert jets.error < 1e-2


def test_v2_constant_term_matches_hand_derivative(bent_field) -> None:
    vpoly = compute_Vm(bent_field, ORIGIN, 2)
    assert np.allclose(vpoly.cube[0, 0, 0], EPS**2 * np.outer(E1, E1), atol=1e-6)


def test_sources_are_symmetric_and_annihilate_p0(bent_field) -> None:
    x0 = np.array([0.1, 0.2, 0.0])
    vpoly = compute_Vm(bent_field, x0, 3)
    rng = np.random.default_rng(7)
    points = rng.uniform(-0.5, 0.5, size=(50, 3))

    values = vpoly.values(points)
    assert np.allclose(values, np.swapaxes(values, -1, -2), atol=1e-12)

    y_values = evaluate(compute_Ym(vpoly), points)
    assert np.max(np.abs(y_values @ vpoly.p0)) < 1e-10
    assert np.max(np.abs(np.trace(y_values, axis1=-2, axis2=-1))) < 1e-10


def test_bent_director_violates_ym_vanishing(bent_field) -> None:
    norms = check_Ym_vanishing(bent_field, ORIGIN, 3)
    assert len(norms) == 1
    assert norms[0] > 1e-3


def test_ym_vanishing_needs_order_three(bent_field) -> None:
    with pytest.raises(ValueError):
        check_Ym_vanishing(bent_field, ORIGIN, 2)


def test_jet_failures(bent_field) -> None:
    with pytest.raises(JetEstimationFailure):
        estimate_jets(bent_field, ORIGIN, 1, jet_tol=1e-14)
    with pytest.raises(OutOfDomain):
        estimate_jets(bent_field, np.array([0.9, 0.0, 0.0]), 2)
