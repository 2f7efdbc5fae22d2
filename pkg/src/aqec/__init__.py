"""Exact and approximate error correction of operator algebras."""

from .algebras import (
    AlgebraStructure,
    Block,
    NonUnitalError,
    OperatorBasis,
    block_algebra,
    commutant_of_set,
    commutant_projector_channel,
    commutant_structure,
    diagonal_algebra,
    full_algebra,
    generate_algebra,
    membership,
    project_algebra,
    project_commutant,
    projector_channel,
    scalar_algebra,
    structure_from_basis,
    twirl_estimate,
)
from .channels import (
    Channel,
    Isometry,
    apply,
    apply_dual,
    choi,
    complement,
    compose,
    encoding_channel,
    kraus_from_choi,
    make_channel,
    standard_channel,
    stinespring,
    tensor_id,
)
from .correctability import (
    CorrectabilityReport,
    SubspaceCode,
    commutator_condition,
    delta_estimate,
    exact_check,
    largest_correctable,
    optimal_error,
    product_degradation_demo,
    subspace_estimate,
    verify_theorem1,
)
from .diamond import cb_check, diamond_distance
from .matcore import InputError
from .sdp import SDPProblem, SDPSolution, SolverError, sdp_solve

__all__ = [name for name in dir() if not name.startswith("_")]
