"""Cone-angle profile of a candidate set around a line through x₀."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qtensor_defects.errors import InsufficientCandidates

from .detection import DefectCandidate

logger = logging.getLogger(__name__)

MIN_CANDIDATES = 5
CONE_TOL = 0.3


@dataclass(slots=True)
class ConeProfile:
    """max dist(x, l_e)/|x − x₀| over candidates in B_r(x₀), per radius."""

    radii: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    @property
    def decreasing(self) -> bool:
        order = np.argsort(self.radii)[::-1]
        return bool(np.all(np.diff(self.values[order]) <= 1e-12))

    @property
    def flagged(self) -> bool:
        """No 1-D tangent cone: the profile does not shrink below ``CONE_TOL``."""

        return not self.decreasing or float(self.values[np.argmin(self.radii)]) > CONE_TOL


def tangent_line_check(
    candidates: Sequence[DefectCandidate] | np.ndarray,
    x0: np.ndarray,
    axis: np.ndarray,
    radii: Sequence[float] = (0.4, 0.2, 0.1),
) -> ConeProfile:
    """Cone-angle profile of ``candidates`` about the line x₀ + t·axis.

    Raises:
        InsufficientCandidates: fewer than 5 candidates (besides x₀) in some B_r.
    """

    if isinstance(candidates, np.ndarray):
        points = candidates.reshape(-1, 3)
    else:
        points = np.array([c.position for c in candidates]).reshape(-1, 3)
    x0 = np.asarray(x0, dtype=float)
    e = np.asarray(axis, dtype=float)
    e = e / np.linalg.norm(e)

    offsets = points - x0
    distance = np.linalg.norm(offsets, axis=-1)
    off_line = np.linalg.norm(offsets - np.outer(offsets @ e, e), axis=-1)
    away = distance > 1e-12

    radii_arr = np.array(sorted((float(r) for r in radii), reverse=True))
    values, counts = [], []
    for r in radii_arr:
        inside = away & (distance <= r + 1e-12)
        count = int(np.sum(inside))
        if count < MIN_CANDIDATES:
            raise InsufficientCandidates(f"{count} candidates within r = {r} of x0 (need {MIN_CANDIDATES})")
        values.append(float(np.max(off_line[inside] / distance[inside])))
        counts.append(count)

    profile = ConeProfile(radii=radii_arr, values=np.array(values), counts=np.array(counts))
    logger.debug("Cone profile %s over radii %s", np.round(profile.values, 4).tolist(), radii_arr.tolist())
    return profile
