"""Truncated-basis models of deformed commutation relations.

The package builds finite matrix models of the deformed generators and their
partial-isometry counterpart, converts each family into the other (polar
decomposition one way, weighted shift series the other), and verifies every
defining identity numerically on the truncation core, with an exact rational
rewriting engine as the independent oracle.
"""

from .families import (
    GeneratorFamily,
    IrrepSpec,
    TccrFamily,
    build_fock_tccr,
    build_irrep,
    build_qccr_single,
)
from .fock import (
    BasisMismatchError,
    CapacityError,
    FockBasis,
    LinearOperator,
    NotPositiveError,
    PolarPair,
    TruncationError,
    core_residual,
    enumerate_basis,
    operator_norm,
    polar_left,
    psd_sqrt,
)
from .reconstruct import (
    PreconditionError,
    ReconstructionTrace,
    generators_from_isometries,
    isometries_from_generators,
    roundtrip_check,
    verify_stage_identities,
)
from .relations import (
    Relation,
    RelationSet,
    collapse_check,
    norm_bound_check,
    norm_domination_sample,
    pi_relations,
    pi_residuals,
    qccr_relations,
    tccr_relations,
    tccr_residuals,
)
from .report import Check, VerificationReport
from .symbolic import (
    Letter,
    MuPoly,
    NcPolynomial,
    ParseError,
    eval_and_bridge,
    gram_matrix,
    normal_order,
    parse_polynomial,
    vacuum_expectation,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMismatchError",
    "CapacityError",
    "Check",
    "FockBasis",
    "GeneratorFamily",
    "IrrepSpec",
    "Letter",
    "LinearOperator",
    "MuPoly",
    "NcPolynomial",
    "NotPositiveError",
    "ParseError",
    "PolarPair",
    "PreconditionError",
    "ReconstructionTrace",
    "Relation",
    "RelationSet",
    "TccrFamily",
    "TruncationError",
    "VerificationReport",
    "build_fock_tccr",
    "build_irrep",
    "build_qccr_single",
    "collapse_check",
    "core_residual",
    "enumerate_basis",
    "eval_and_bridge",
    "generators_from_isometries",
    "gram_matrix",
    "isometries_from_generators",
    "norm_bound_check",
    "norm_domination_sample",
    "normal_order",
    "operator_norm",
    "parse_polynomial",
    "pi_relations",
    "pi_residuals",
    "polar_left",
    "psd_sqrt",
    "qccr_relations",
    "roundtrip_check",
    "tccr_relations",
    "tccr_residuals",
    "vacuum_expectation",
]
