"""Defect analysis: detection, blow-ups, tangent maps, winding and the report."""

from fields.grid import beta_field, s_field

from .blowup import (
    BlowUpSamples,
    Classification,
    TangentMapFit,
    VanishingOrder,
    blow_up,
    classify,
    fit_tangent_map,
    vanishing_order,
)
from .detection import DefectCandidate, detect_candidates
from .jets import VPoly, check_Ym_vanishing, compute_Vm, compute_Ym
from .pipeline import DefectReport, analyze_field, write_report
from .plots import plot_beta_slice, plot_cone_profile, plot_energy_trace, plot_vanishing_order
from .rectifiability import ConeProfile, tangent_line_check
from .winding import circle_loop, winding_number

__all__ = [
    "BlowUpSamples",
    "Classification",
    "ConeProfile",
    "DefectCandidate",
    "DefectReport",
    "TangentMapFit",
    "VPoly",
    "VanishingOrder",
    "analyze_field",
    "beta_field",
    "blow_up",
    "check_Ym_vanishing",
    "circle_loop",
    "classify",
    "compute_Vm",
    "compute_Ym",
    "detect_candidates",
    "fit_tangent_map",
    "plot_beta_slice",
    "plot_cone_profile",
    "plot_energy_trace",
    "plot_vanishing_order",
    "s_field",
    "tangent_line_check",
    "vanishing_order",
    "write_report",
]
