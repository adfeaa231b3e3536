"""Left-invariant Kähler geometry and projective special Kähler checks on Lie algebras."""
from .classify4d import builtin_family, classify, curvature_table, solve_type_i, solve_type_ii
from .conic_lift import build_lift, lift_report
from .deviance import Deviance, bracket_blocks, cubic_to_eta, eta_bracket, phase_rotate
from .lie_kahler import (
    CurvatureTensor,
    KahlerStructure,
    LieAlgebraData,
    curvature,
    kahler_check,
    levi_civita,
    ricci_scalar,
)
from .psk_verify import PskVerdict, d1_residual, d2_check, verify

__all__ = [
    "CurvatureTensor", "Deviance", "KahlerStructure", "LieAlgebraData", "PskVerdict",
    "bracket_blocks", "build_lift", "builtin_family", "classify", "cubic_to_eta", "curvature",
    "curvature_table", "d1_residual", "d2_check", "eta_bracket", "kahler_check", "levi_civita",
    "lift_report", "phase_rotate", "ricci_scalar", "solve_type_i", "solve_type_ii", "verify",
]
