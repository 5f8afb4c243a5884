"""Polynomials in three variables stored as coefficient cubes.

A polynomial of degree ≤ d is an array ``C`` with ``C[a, b, c]`` the
coefficient of xᵃyᵇzᶜ; trailing axes (if any) index tensor components, the
layout expected by ``numpy.polynomial.polynomial.polyval3d``. Homogeneous
polynomials of degree k are also handled as coefficient vectors over
``monomial_exponents(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import convolve
from scipy.special import gamma

from .qcore import up_basis


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> tuple[tuple[int, int, int], ...]:
    """Exponents (a, b, c) with a + b + c = k, x-power descending."""

    return tuple((a, b, k - a - b) for a in range(k, -1, -1) for b in range(k - a, -1, -1))


def monomial_count(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def monomial_matrix(points: np.ndarray, k: int) -> np.ndarray:
    """Design matrix of degree-k monomials at ``points`` (shape ``(M, 3)``)."""

    points = np.asarray(points, dtype=float)
    exps = np.array(monomial_exponents(k))
    return np.prod(points[:, None, :] ** exps[None, :, :], axis=-1)


def cube_from_homogeneous(coeffs: np.ndarray, k: int) -> np.ndarray:
    """Coefficient cube of a homogeneous polynomial.

    ``coeffs`` has the monomial axis first; trailing axes are components.
    """

    coeffs = np.asarray(coeffs, dtype=float)
    cube = np.zeros((k + 1, k + 1, k + 1) + coeffs.shape[1:])
    for value, (a, b, c) in zip(coeffs, monomial_exponents(k)):
        cube[a, b, c] = value
    return cube


def homogeneous_part(cube: np.ndarray, k: int) -> np.ndarray:
    """Monomial coefficients of the degree-k part of ``cube``."""

    size = cube.shape[0]
    out = np.zeros((monomial_count(k),) + cube.shape[3:])
    for idx, (a, b, c) in enumerate(monomial_exponents(k)):
        if a < size and b < cube.shape[1] and c < cube.shape[2]:
            out[idx] = cube[a, b, c]
    return out


def total_degree(cube: np.ndarray, tol: float = 0.0) -> int:
    """Highest degree carrying a coefficient above ``tol`` (−1 for zero)."""

    mags = np.abs(cube).reshape(cube.shape[:3] + (-1,)).max(axis=-1)
    a, b, c = np.indices(mags.shape)
    degrees = (a + b + c)[mags > tol]
    return int(degrees.max()) if degrees.size else -1


def is_homogeneous(cube: np.ndarray, k: int, tol: float = 1e-14) -> bool:
    mags = np.abs(cube).reshape(cube.shape[:3] + (-1,)).max(axis=-1)
    a, b, c = np.indices(mags.shape)
    return bool(np.all(mags[(a + b + c) != k] <= tol))


def evaluate(cube: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Values at ``points`` (``(..., 3)``); component axes come last."""

    points = np.asarray(points, dtype=float)
    values = P.polyval3d(points[..., 0], points[..., 1], points[..., 2], cube)
    extra = cube.ndim - 3
    return np.moveaxis(values, tuple(range(extra)), tuple(range(-extra, 0))) if extra else values


def derivative(cube: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Partial derivative, keeping the cube shape."""

    out = np.zeros_like(cube)
    der = P.polyder(cube, m=order, axis=axis)
    out[tuple(slice(0, s) for s in der.shape)] = der
    return out


def laplacian(cube: np.ndarray) -> np.ndarray:
    return sum(derivative(cube, axis, 2) for axis in range(3))


def multiply(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Product of two scalar polynomials."""

    return convolve(left, right, method="direct")


def ball_moment(a: int, b: int, c: int) -> float:
    """∫_{B₁} xᵃyᵇzᶜ dx, exact through Γ-functions (zero unless all even)."""

    if a % 2 or b % 2 or c % 2:
        return 0.0
    s = a + b + c + 3
    return float(2.0 * gamma((a + 1) / 2) * gamma((b + 1) / 2) * gamma((c + 1) / 2) / (gamma(s / 2) * s))


def integrate_ball(cube: np.ndarray) -> float:
    """Exact integral of a scalar polynomial over the unit ball."""

    total = 0.0
    for (a, b, c), value in np.ndenumerate(cube):
        if value != 0.0:
            total += value * ball_moment(a, b, c)
    return float(total)


@dataclass(slots=True)
class TangentPolynomial:
    """Ū = u₁E₁ + u₂E₂ ∈ 𝒰_{p₀} with u₁, u₂ homogeneous of degree k.

    ``coeffs`` has shape ``(2, monomial_count(k))``.
    """

    degree: int
    coeffs: np.ndarray
    p0: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(2, monomial_count(self.degree))
        self.p0 = np.asarray(self.p0, dtype=float)

    def scalar_cubes(self) -> np.ndarray:
        """Cube with a trailing axis of length 2 holding (u₁, u₂)."""

        return cube_from_homogeneous(self.coeffs.T, self.degree)

    def matrix_cube(self) -> np.ndarray:
        """Cube with trailing 3×3 axes: the matrix-valued polynomial."""

        e1, e2 = up_basis(self.p0)
        return np.einsum("abcu,uij->abcij", self.scalar_cubes(), np.stack([e1, e2]))

    def values(self, points: np.ndarray) -> np.ndarray:
        """(u₁, u₂) at ``points``, shape ``(..., 2)``."""

        return evaluate(self.scalar_cubes(), points)

    def dirichlet_energy(self) -> float:
        """½∫_{B₁}|∇Ū|², exact."""

        cubes = self.scalar_cubes()
        total = 0.0
        for comp in range(2):
            for axis in range(3):
                d = derivative(cubes[..., comp], axis)
                total += integrate_ball(multiply(d, d))
        return 0.5 * total
