"""Discrete energies and the projected-descent minimizer."""

from .energy import (
    EnergyBreakdown,
    LdGParameters,
    PenaltyWeights,
    blowup_energy_parts,
    constrained_energy,
    ek_energy,
    ek_residual,
    energy_and_gradient,
    energy_density,
    energy_gradient,
    full_energy,
    full_energy_gradient,
    leading_density,
    penalty_energy,
)
from .minimize import SolverReport, SolverState, checkpoint, initial_field, minimize, resume, write_trace

__all__ = [
    "EnergyBreakdown",
    "LdGParameters",
    "PenaltyWeights",
    "SolverReport",
    "SolverState",
    "blowup_energy_parts",
    "checkpoint",
    "constrained_energy",
    "ek_energy",
    "ek_residual",
    "energy_and_gradient",
    "energy_density",
    "energy_gradient",
    "full_energy",
    "full_energy_gradient",
    "initial_field",
    "leading_density",
    "minimize",
    "penalty_energy",
    "resume",
    "write_trace",
]
