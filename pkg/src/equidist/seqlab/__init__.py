"""Sequences, generators, differences and the hypothesis window scan."""
from .core import (
    MonotonicityProfile,
    RealSequence,
    SequenceSpec,
    UnitSequence,
    forward_differences,
    fractional_parts,
    generate,
    generate_fractional,
    monotonicity_profile,
    parse_spec,
    read_sequence_file,
)
from .expr import Expr, ExprError
from .families import SequenceError, fixed_to_float, float_to_fixed
from .hypothesis import HypothesisReport, HypothesisViolation, hypothesis_scan, window_condition

__all__ = [
    "Expr", "ExprError", "HypothesisReport", "HypothesisViolation", "MonotonicityProfile",
    "RealSequence", "SequenceError", "SequenceSpec", "UnitSequence", "fixed_to_float",
    "float_to_fixed", "forward_differences", "fractional_parts", "generate",
    "generate_fractional", "hypothesis_scan", "monotonicity_profile", "parse_spec",
    "read_sequence_file", "window_condition",
]
