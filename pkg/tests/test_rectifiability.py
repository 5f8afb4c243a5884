from __future__ import annotations

import numpy as np
import pytest

from analysis.detection import detect_candidates
from analysis.rectifiability import tangent_line_check
from fields.grid import GridSpec
from fields.synthetic import synthetic_disclination
from qtensor_defects.errors import InsufficientCandidates

E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
ORIGIN = np.zeros(3)


def test_detected_straight_line_has_a_shrinking_cone() -> None:
    field = synthetic_disclination(GridSpec(65), E3, 0.1, "half_degree")
    candidates = detect_candidates(field)
    centre = min(candidates, key=lambda c: float(np.linalg.norm(c.position)))

    profile = tangent_line_check(candidates, centre.position, E3, radii=(0.4, 0.2, 0.1))
    assert profile.decreasing
    assert not profile.flagged
    assert np.all(profile.values <= 1e-6)
    assert np.all(profile.counts >= 5)


def test_curved_line_profile_shrinks_linearly() -> None:
    z = np.linspace(-0.5, 0.5, 201)
    points = np.stack([z**2, np.zeros_like(z), z], axis=-1)
    radii = (0.4, 0.2, 0.1)
    profile = tangent_line_check(points, ORIGIN, E3, radii=radii)

    assert profile.decreasing
    assert not profile.flagged
    ordered = profile.values[np.argsort(profile.radii)[::-1]]
    assert ordered[1] == pytest.approx(ordered[0] / 2.0, rel=0.2)
    assert ordered[2] == pytest.approx(ordered[1] / 2.0, rel=0.1)


def test_planar_candidates_are_flagged() -> None:
    c = np.linspace(-0.5, 0.5, 21)
    y, z = np.meshgrid(c, c, indexing="ij")
    points = np.stack([np.zeros(y.size), y.ravel(), z.ravel()], axis=-1)
    profile = tangent_line_check(points, ORIGIN, E3)
    assert profile.flagged
    assert np.all(profile.values > 0.9)


def test_too_few_candidates() -> None:
    points = np.array([[0.0, 0.0, 0.05], [0.0, 0.0, -0.05], [0.0, 0.0, 0.3]])
    with pytest.raises(InsufficientCandidates):
        tangent_line_check(points, ORIGIN, E3)


def test_axis_direction_is_normalized() -> None:
    z = np.linspace(-0.5, 0.5, 101)
    points = np.outer(z, E1)
    profile = tangent_line_check(points, ORIGIN, 5.0 * E1)
    assert np.allclose(profile.values, 0.0, atol=1e-12)
