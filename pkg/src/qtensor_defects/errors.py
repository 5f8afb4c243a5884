"""Exception hierarchy shared by every package in the repository."""

from __future__ import annotations


class QTensorError(ValueError):
    """Base class for domain errors raised by the library."""


# --- tensor algebra -------------------------------------------------------


class ZeroTensor(QTensorError):
    """Biaxiality requested for a tensor of (numerically) zero norm."""


class NonUnitVector(QTensorError):
    pass


class NonSymmetric(QTensorError):
    pass


class NotUnitNorm(QTensorError):
    """A tensor expected on S⁴ has |Q| away from 1."""


class EigenvalueGapTooSmall(QTensorError):
    """λ₃ is not isolated, so the direction p is numerically meaningless."""


class OutOfRange(QTensorError):
    pass


class NonOrthogonal(QTensorError):
    pass


# --- fields ---------------------------------------------------------------


class NotInterior(QTensorError):
    pass


class OutOfDomain(QTensorError):
    pass


class AmplitudeTooLarge(QTensorError):
    pass


class OrientationFailure(QTensorError):
    """Sign propagation of the leading eigenvector met an inconsistent edge."""


class DegenerateBoundary(QTensorError):
    pass


class BoundaryValidationError(QTensorError):
    """Boundary data violates the configured biaxiality margin or degree."""


class CorruptSnapshot(QTensorError):
    pass


# --- energies and solver --------------------------------------------------


class DecompositionFailure(QTensorError):
    pass


class ScaleTooSmall(QTensorError):
    pass


class DegreeMismatch(QTensorError):
    pass


class LineSearchStall(RuntimeError):
    """Armijo backtracking shrank the step below the underflow threshold."""


class NonFiniteEnergy(RuntimeError):
    pass


# --- defect analysis ------------------------------------------------------


class DegenerateSample(QTensorError):
    pass


class UnderSampledLoop(QTensorError):
    pass


class UnresolvedWinding(QTensorError):
    pass


class RadiiTooSmall(QTensorError):
    pass


class SignAlignmentFailure(QTensorError):
    pass


class RankDeficientFit(QTensorError):
    pass


class ResidualTooLarge(QTensorError):
    pass


class JetEstimationFailure(QTensorError):
    pass


class InsufficientCandidates(QTensorError):
    pass


# --- configuration --------------------------------------------------------


class ConfigError(QTensorError):
    """Run configuration is malformed; the message names the offending key."""
