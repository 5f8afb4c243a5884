"""Grid fields on the unit ball: roles, stencils, boundary data, I/O."""

from .boundary import boundary_degree, boundary_field, hedgehog_boundary, validate_boundary
from .grid import EXTERIOR, INTERIOR, SHELL, GridSpec, QField, ScalarField, beta_field, gradient, s_field, sample
from .io import load_snapshot, save_snapshot, write_vtk_scalar
from .synthetic import synthetic_disclination, synthetic_order_two, synthesize, uniform_field

__all__ = [
    "EXTERIOR",
    "INTERIOR",
    "SHELL",
    "GridSpec",
    "QField",
    "ScalarField",
    "beta_field",
    "boundary_degree",
    "boundary_field",
    "gradient",
    "hedgehog_boundary",
    "load_snapshot",
    "s_field",
    "sample",
    "save_snapshot",
    "synthesize",
    "synthetic_disclination",
    "synthetic_order_two",
    "uniform_field",
    "validate_boundary",
]
