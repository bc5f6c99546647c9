"""Optimal systolic metrics and defect inequalities on flat Möbius strips and Klein bottles."""

from .geometry import DeckWord, Profile, SurfaceKind, SurfaceSpec
from .optimal import BETA0, BETA1, klein_optimal, mobius_optimal, optimal_profile, optimal_summary
from .projections import defect_report, projection_inequality_check, rank1_project
from .systole import GridConfig, systole_estimate

__version__ = "0.1.0"

__all__ = [
    "BETA0", "BETA1", "DeckWord", "GridConfig", "Profile", "SurfaceKind", "SurfaceSpec",
    "defect_report", "klein_optimal", "mobius_optimal", "optimal_profile", "optimal_summary",
    "projection_inequality_check", "rank1_project", "systole_estimate", "__version__",
]
