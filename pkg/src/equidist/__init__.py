"""Uniform distribution modulo one: discrepancy, Weyl sums, convergents and segment certificates."""
from .certifier import (
    CertificateRun,
    CertificationError,
    ResidueSequence,
    SegmentCertificate,
    SignChange,
    build_segment,
    certify_range,
    interleave_check,
    residue_sequence,
    sign_change_index,
)
from .diophantine import Convergent, convergents, select_convergent
from .discrepancy import (
    BinnedDiscrepancy,
    DiscrepancyReport,
    Interval,
    Witness,
    count_in_interval,
    extreme_discrepancy,
    extreme_discrepancy_oracle,
    star_discrepancy,
)
from .lemmalab import LemmaCheck, RejectedInstance, SuiteReport, run_suite
from .seqlab import (
    HypothesisReport,
    HypothesisViolation,
    RealSequence,
    SequenceError,
    SequenceSpec,
    UnitSequence,
    forward_differences,
    fractional_parts,
    generate,
    generate_fractional,
    hypothesis_scan,
    monotonicity_profile,
    parse_spec,
)
from .weyl import WeylPoint, weyl_profile, weyl_sum, weyl_sum_spec

__version__ = "0.1.0"

__all__ = [
    "BinnedDiscrepancy", "CertificateRun", "CertificationError", "Convergent",
    "DiscrepancyReport", "HypothesisReport", "HypothesisViolation", "Interval", "LemmaCheck",
    "RealSequence", "RejectedInstance", "ResidueSequence", "SegmentCertificate", "SequenceError",
    "SequenceSpec", "SignChange", "SuiteReport", "UnitSequence", "Witness", "WeylPoint",
    "build_segment", "certify_range", "convergents", "count_in_interval", "extreme_discrepancy",
    "extreme_discrepancy_oracle", "forward_differences", "fractional_parts", "generate",
    "generate_fractional", "hypothesis_scan", "interleave_check", "monotonicity_profile",
    "parse_spec", "residue_sequence", "run_suite", "select_convergent", "sign_change_index",
    "star_discrepancy", "weyl_profile", "weyl_sum", "weyl_sum_spec",
]
