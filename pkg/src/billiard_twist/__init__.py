"""Twist coefficients of period-2 orbits in two-arc billiard tables."""

from .billiard_map import OrbitSegment, PhasePoint, iterate, step, to_cartesian
from .formulas import classify, tau1_asym, tau1_sym, tau2_asym, tau2_sym, TwistInput
from .geometry import BoundaryProfile, CurvatureJet, TableConfig, curvature_jet, named_profile, profile_from_curvature
from .jets import map_jet
from .normal_form import NormalFormResult, analyze
from .tables import build_example

__all__ = [
    "BoundaryProfile",
    "CurvatureJet",
    "NormalFormResult",
    "OrbitSegment",
    "PhasePoint",
    "TableConfig",
    "TwistInput",
    "analyze",
    "build_example",
    "classify",
    "curvature_jet",
    "iterate",
    "map_jet",
    "named_profile",
    "profile_from_curvature",
    "step",
    "tau1_asym",
    "tau1_sym",
    "tau2_asym",
    "tau2_sym",
    "to_cartesian",
]
