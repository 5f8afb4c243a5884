"""Vanishing order, blow-up sampling, tangent-map fits and their classification.

Blow-ups are taken at grid nodes: the samples of U_r are the nodes of
B_r(x₀) mapped to B₁ by x ↦ (x − x₀)/r, so no interpolation enters the
fits. A fixed unit-ball lattice can be requested instead, in which case
values come from trilinear interpolation of the field.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.spatial import cKDTree
from sklearn.linear_model import LinearRegression

from fields.grid import GridSpec, QField, sample_many
from qtensor_defects.errors import (
    DecompositionFailure,
    OutOfDomain,
    RadiiTooSmall,
    RankDeficientFit,
    ResidualTooLarge,
    SignAlignmentFailure,
)
from solver.energy import MIN_SCALE_STEPS
from tensors.perturb import GAP_TOL, decompose_many
from tensors.polynomials import (
    TangentPolynomial,
    derivative,
    integrate_ball,
    monomial_count,
    monomial_matrix,
    multiply,
)
from tensors.qcore import biaxiality, up_basis

logger = logging.getLogger(__name__)

DEFAULT_RADII = (0.4, 0.28, 0.2, 0.14, 0.1)
SAMPLES_PER_MONOMIAL = 4

Label = Literal["exchange_plane", "half_degree_line", "higher_order"]


@dataclass(slots=True)
class VanishingOrder:
    """Log–log regression of the s² and δ ball averages against r.

    ``k_hat`` comes from A(r) = ⟨s²⟩_{B_r} ∝ r^{2k}; ``k_hat_delta`` from
    ⟨δ⟩_{B_r}, which follows the same power law.
    """

    k_hat: float
    residual: float
    k_hat_delta: float
    residual_delta: float
    radii: np.ndarray
    s2_means: np.ndarray
    delta_means: np.ndarray

    def rounded(self, order_tol: float = 0.2, regression_tol: float = 0.1, k_max: int = 4) -> int | None:
        """Integer order when the estimate is inside the acceptance band, else None."""

        k = int(round(self.k_hat))
        if not 1 <= k <= k_max:
            return None
        if abs(self.k_hat - k) > order_tol or self.residual > regression_tol:
            return None
        return k


def ball_nodes(spec: GridSpec, x0: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices ``(M, 3)`` and positions of the nodes with |x − x₀| ≤ r."""

    x0 = np.asarray(x0, dtype=float)
    lo = np.maximum(np.floor((x0 - r + 1.0) / spec.h).astype(int), 0)
    hi = np.minimum(np.ceil((x0 + r + 1.0) / spec.h).astype(int) + 1, spec.n)
    grids = np.meshgrid(*[np.arange(a, b) for a, b in zip(lo, hi)], indexing="ij")
    index = np.stack([g.reshape(-1) for g in grids], axis=-1)
    positions = spec.coords[index]
    inside = np.linalg.norm(positions - x0, axis=-1) <= r + 1e-12
    return index[inside], positions[inside]


def _check_ball(spec: GridSpec, x0: np.ndarray, r: float) -> None:
    limit = 1.0 - spec.h
    if float(np.linalg.norm(x0)) + r > limit + 1e-12:
        raise OutOfDomain(f"ball of radius {r} around |x0| = {np.linalg.norm(x0):.4f} exceeds 1 - h = {limit:.4f}")


def _check_decomposable(coeffs: np.ndarray, where: str) -> None:
    beta = biaxiality(coeffs)
    if np.any(beta >= 0.0):
        raise DecompositionFailure(f"beta reaches {np.max(beta):.3f} >= 0 in {where}")
    parts = decompose_many(coeffs, strict=False)
    if np.any(parts.gap < GAP_TOL):
        raise DecompositionFailure(f"lambda3 not isolated in {where} (min gap {np.min(parts.gap):.3e})")


def _slope(radii: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    log_r = np.log(radii).reshape(-1, 1)
    log_v = np.log(values)
    model = LinearRegression().fit(log_r, log_v)
    deviation = float(np.max(np.abs(model.predict(log_r) - log_v)))
    return float(model.coef_[0]), deviation


def vanishing_order(field: QField, x0: np.ndarray, radii: Sequence[float] = DEFAULT_RADII) -> VanishingOrder:
    """Estimate the vanishing order of s at ``x0``.

    Radii below 4h, or whose ball leaves |x| ≤ 1 − h, are dropped with a
    warning.

    Raises:
        RadiiTooSmall: fewer than two radii remain.
        DecompositionFailure: β ≥ 0 or λ₃ not isolated on the largest ball,
            or s vanishes on a whole ball.
    """

    spec = field.spec
    x0 = np.asarray(x0, dtype=float)
    kept = []
    for r in sorted(set(float(v) for v in radii), reverse=True):
        if r < MIN_SCALE_STEPS * spec.h - 1e-12:
            logger.warning("Dropping radius %.3f below %dh = %.3f", r, MIN_SCALE_STEPS, MIN_SCALE_STEPS * spec.h)
            continue
        try:
            _check_ball(spec, x0, r)
        except OutOfDomain as exc:
            logger.warning("Dropping radius %.3f: %s", r, exc)
            continue
        kept.append(r)
    if len(kept) < 2:
        raise RadiiTooSmall(f"only {len(kept)} usable radii at x0 = {np.round(x0, 4).tolist()} (need 2)")

    index, _ = ball_nodes(spec, x0, kept[0])
    largest = field.coeffs[tuple(index.T)]
    _check_decomposable(largest, f"B_{kept[0]}")

    s2_means, delta_means = [], []
    for r in kept:
        index, _ = ball_nodes(spec, x0, r)
        parts = decompose_many(field.coeffs[tuple(index.T)], strict=False)
        s2_means.append(float(np.mean(parts.s**2)))
        delta_means.append(float(np.mean(parts.delta)))

    radii_arr = np.array(kept)
    s2 = np.array(s2_means)
    delta = np.array(delta_means)
    if np.any(s2 <= 0.0) or np.any(delta <= 0.0):
        raise DecompositionFailure(f"s vanishes identically on a ball around {np.round(x0, 4).tolist()}")

    slope, residual = _slope(radii_arr, s2)
    slope_delta, residual_delta = _slope(radii_arr, delta)
    result = VanishingOrder(
        k_hat=slope / 2.0,
        residual=residual,
        k_hat_delta=slope_delta / 2.0,
        residual_delta=residual_delta,
        radii=radii_arr,
        s2_means=s2,
        delta_means=delta,
    )
    logger.debug(
        "Vanishing order at %s: k_hat=%.3f (residual %.3f), delta estimate %.3f",
        np.round(x0, 4).tolist(),
        result.k_hat,
        residual,
        result.k_hat_delta,
    )
    return result


# --------------------------------------------------------------------------
# blow-up
# --------------------------------------------------------------------------


@dataclass(slots=True)
class BlowUpSamples:
    """Samples of (U_r, s_r, p_r) at unit-ball points.

    ``U`` is already divided by r^k; ``p`` is sign-aligned to ``p0``.
    """

    points: np.ndarray
    U: np.ndarray
    s: np.ndarray
    p: np.ndarray
    p0: np.ndarray
    x0: np.ndarray
    r: float
    k: int
    spacing: float


def unit_ball_lattice(per_axis: int = 11) -> np.ndarray:
    """Points of a regular lattice on [−1, 1]³ that lie in the closed unit ball."""

    c = np.linspace(-1.0, 1.0, per_axis)
    points = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1).reshape(-1, 3)
    return points[np.linalg.norm(points, axis=-1) <= 1.0 + 1e-12]


def blow_up(
    field: QField,
    x0: np.ndarray,
    r: float,
    k: int,
    lattice: np.ndarray | None = None,
) -> BlowUpSamples:
    """Sample U_r(x) = U(x₀ + rx)/r^k with p aligned to p(x₀).

    Args:
        lattice: unit-ball points to interpolate at; grid nodes when None.

    Raises:
        DecompositionFailure: β ≥ 0 or λ₃ not isolated at a sample.
        OutOfDomain: the ball leaves |x| ≤ 1 − h.
        SignAlignmentFailure: p turns by more than π/2 between adjacent samples.
    """

    spec = field.spec
    x0 = np.asarray(x0, dtype=float)
    if k < 1:
        raise ValueError(f"blow-up order must be positive, got {k}")
    _check_ball(spec, x0, r)

    if lattice is None:
        index, positions = ball_nodes(spec, x0, r)
        coeffs = field.coeffs[tuple(index.T)]
        points = (positions - x0) / r
        spacing = spec.h / r
    else:
        points = np.asarray(lattice, dtype=float)
        coeffs = sample_many(field, x0 + r * points)
        spacing = float(np.min(cKDTree(points).query(points, k=2)[0][:, 1]))
    _check_decomposable(coeffs, f"the blow-up ball of radius {r}")

    parts = decompose_many(coeffs, strict=False)
    centre = int(np.argmin(np.linalg.norm(points, axis=-1)))
    p0 = parts.p[centre]
    p = np.where((parts.p @ p0)[:, None] < 0.0, -parts.p, parts.p)

    pairs = cKDTree(points).query_pairs(1.01 * spacing, output_type="ndarray")
    if len(pairs):
        turn = np.sum(p[pairs[:, 0]] * p[pairs[:, 1]], axis=-1)
        if np.any(turn <= 0.0):
            raise SignAlignmentFailure(f"p turns by more than pi/2 between adjacent samples (min cos {np.min(turn):.3f})")

    scale = r ** (-k)
    return BlowUpSamples(
        points=points,
        U=parts.u_matrix * scale,
        s=parts.s * scale,
        p=p,
        p0=p0,
        x0=x0,
        r=float(r),
        k=int(k),
        spacing=float(spacing),
    )


# --------------------------------------------------------------------------
# tangent-map fit
# --------------------------------------------------------------------------


@dataclass(slots=True)
class TangentMapFit:
    """Least-squares homogeneous fit Ū = u₁E₁ + u₂E₂ ∈ 𝒰_{p₀}.

    ``coeffs`` rows are u₁ and u₂ over ``monomial_exponents(degree)``;
    ``residual`` is the relative L² misfit over the samples.
    """

    degree: int
    coeffs: np.ndarray
    p0: np.ndarray
    residual: float
    sample_count: int

    @property
    def polynomial(self) -> TangentPolynomial:
        return TangentPolynomial(degree=self.degree, coeffs=self.coeffs, p0=self.p0)


def fit_tangent_map(samples: BlowUpSamples, k: int, p0: np.ndarray | None = None) -> TangentMapFit:
    """Fit degree-k homogeneous (u₁, u₂) to the blow-up samples.

    Raises:
        RankDeficientFit: fewer than 4 samples per monomial, or a
            rank-deficient design matrix.
    """

    p0 = samples.p0 if p0 is None else np.asarray(p0, dtype=float)
    nmon = monomial_count(k)
    count = len(samples.points)
    if count < SAMPLES_PER_MONOMIAL * nmon:
        raise RankDeficientFit(f"{count} samples for {nmon} degree-{k} monomials (need {SAMPLES_PER_MONOMIAL * nmon})")

    e1, e2 = up_basis(p0)
    targets = np.stack(
        [np.einsum("mij,ij->m", samples.U, e1), np.einsum("mij,ij->m", samples.U, e2)],
        axis=-1,
    )
    design = monomial_matrix(samples.points, k)
    coeffs, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
    if rank < nmon:
        raise RankDeficientFit(f"design matrix has rank {rank} < {nmon} for degree {k}")

    scale = float(np.linalg.norm(targets))
    misfit = float(np.linalg.norm(design @ coeffs - targets))
    residual = min(misfit / scale, 1.0) if scale > 0.0 else 0.0
    logger.debug("Degree-%d tangent fit on %d samples: residual %.3e", k, count, residual)
    return TangentMapFit(degree=k, coeffs=coeffs.T.copy(), p0=p0.copy(), residual=residual, sample_count=count)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------


@dataclass(slots=True)
class Classification:
    label: Label
    k: int
    axis: np.ndarray | None
    is_defect: bool
    parallel_ratio: float | None = None
    invariance_ratio: float | None = None

    @property
    def name(self) -> str:
        return f"higher_order({self.k})" if self.label == "higher_order" else self.label


def invariance_gram(polynomial: TangentPolynomial) -> np.ndarray:
    """G_ij = ∫_{B₁} ∂ᵢŪ : ∂ⱼŪ, exact."""

    cubes = polynomial.scalar_cubes()
    partials = [[derivative(cubes[..., comp], axis) for comp in range(2)] for axis in range(3)]
    gram = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            value = sum(integrate_ball(multiply(partials[i][c], partials[j][c])) for c in range(2))
            gram[i, j] = gram[j, i] = value
    return gram


def classify(
    fit: TangentMapFit,
    fit_tol: float = 0.15,
    tol_parallel: float = 0.05,
    invariance_tol: float = 0.05,
) -> Classification:
    """Sort a tangent map into exchange plane, half-degree line or higher order.

    Degree one: a, b are the coefficient vectors of u₁, u₂; the pair is an
    exchange plane when |a × b| ≤ tol_parallel·(|a||b| + 1e-15), otherwise
    a half-degree line with axis (a × b)/|a × b|. Higher degree: the
    axis is reported when Ū is almost invariant along some direction.

    Raises:
        ResidualTooLarge: the fit residual exceeds ``fit_tol``.
    """

    if fit.residual > fit_tol:
        raise ResidualTooLarge(f"tangent-map fit residual {fit.residual:.3f} exceeds {fit_tol}")

    if fit.degree == 1:
        a, b = fit.coeffs[0], fit.coeffs[1]
        cross = np.cross(a, b)
        ratio = float(np.linalg.norm(cross)) / (float(np.linalg.norm(a) * np.linalg.norm(b)) + 1e-15)
        if ratio <= tol_parallel:
            return Classification(label="exchange_plane", k=1, axis=None, is_defect=False, parallel_ratio=ratio)
        axis = cross / np.linalg.norm(cross)
        return Classification(label="half_degree_line", k=1, axis=axis, is_defect=True, parallel_ratio=ratio)

    gram = invariance_gram(fit.polynomial)
    values, vectors = np.linalg.eigh(gram)
    ratio = float(values[0] / values[-1]) if values[-1] > 0.0 else 0.0
    axis = vectors[:, 0] if ratio <= invariance_tol else None
    return Classification(label="higher_order", k=fit.degree, axis=axis, is_defect=True, invariance_ratio=ratio)
