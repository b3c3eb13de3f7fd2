"""Threshold analysis and resolvent Laurent expansions for one-dimensional
discrete Schroedinger operators with compactly supported finite-rank
interactions, in exact rational arithmetic wherever the data allows."""

from .chain import (
    CircularCheck,
    MCoefficients,
    ProjectionChain,
    ThresholdReport,
    build_m_coefficients,
    build_projection_chain,
    circular_isomorphism_check,
    classify,
    multiplicative_dimension_check,
    reconstruction_map,
)
from .expansion import (
    ExpansionCoefficient,
    ExpansionResult,
    expand,
    g0_closed_forms,
    green_identity_check,
    singular_parts,
)
from .kernels import apply_g0, g0_kernel, kernel_polynomial, r0_point
from .oracles import (
    NullspaceReport,
    SlopeReport,
    exact_resolvent_entry,
    nullspace_oracle,
    remainder_slope,
    threshold4_analysis,
)
from .potentials import (
    FactorizedPotential,
    RankOneTerm,
    SchroedingerOperator,
    apply_h,
    from_multiplicative,
    from_rank_one_terms,
    j_conjugate,
    load_potential,
)
from .sequences import CompactSequence, PolyTailSequence, apply_h0, pair, special_sequence
from .series import MatrixLaurentSeries, Pseudoinverse, invert_laurent, jn_step, pseudo_inverse

__all__ = [
    "CircularCheck",
    "CompactSequence",
    "ExpansionCoefficient",
    "ExpansionResult",
    "FactorizedPotential",
    "MCoefficients",
    "MatrixLaurentSeries",
    "NullspaceReport",
    "PolyTailSequence",
    "ProjectionChain",
    "Pseudoinverse",
    "RankOneTerm",
    "SchroedingerOperator",
    "SlopeReport",
    "ThresholdReport",
    "apply_g0",
    "apply_h",
    "apply_h0",
    "build_m_coefficients",
    "build_projection_chain",
    "circular_isomorphism_check",
    "classify",
    "exact_resolvent_entry",
    "expand",
    "from_multiplicative",
    "from_rank_one_terms",
    "g0_closed_forms",
    "g0_kernel",
    "green_identity_check",
    "invert_laurent",
    "j_conjugate",
    "jn_step",
    "kernel_polynomial",
    "load_potential",
    "multiplicative_dimension_check",
    "nullspace_oracle",
    "pair",
    "pseudo_inverse",
    "r0_point",
    "reconstruction_map",
    "remainder_slope",
    "singular_parts",
    "special_sequence",
    "threshold4_analysis",
]
