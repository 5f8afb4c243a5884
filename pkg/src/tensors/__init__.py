"""Pointwise Q-tensor algebra: basis, spectra, projections, perturbations."""

from .perturb import (
    Decomposition,
    SplitEigenvalues,
    decompose,
    decompose_many,
    delta_from_s,
    reconstruct,
    reconstruct_from_tangent,
    reconstruct_many,
    split_from_delta,
    tau,
)
from .qcore import (
    QBASIS,
    EigenSystem,
    QTensor,
    TangentTensor,
    biaxiality,
    eigen_decompose,
    eigh_batch,
    frame_distance,
    make_uniaxial,
    project_to_Up,
    to_coeffs,
    to_matrix,
)

__all__ = [
    "QBASIS",
    "Decomposition",
    "EigenSystem",
    "QTensor",
    "SplitEigenvalues",
    "TangentTensor",
    "biaxiality",
    "decompose",
    "decompose_many",
    "delta_from_s",
    "eigen_decompose",
    "eigh_batch",
    "frame_distance",
    "make_uniaxial",
    "project_to_Up",
    "reconstruct",
    "reconstruct_from_tangent",
    "reconstruct_many",
    "split_from_delta",
    "tau",
    "to_coeffs",
    "to_matrix",
]
