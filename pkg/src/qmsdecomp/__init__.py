"""Decoherence-free subalgebras, fixed points and asymptotics of finite-dimensional GKSL semigroups."""
from .algebra import (
    BlockDecomposition,
    OperatorAlgebra,
    algebra_equal,
    center,
    center_of_commutant_identity,
    commutant,
    double_commutant_check,
    generate_algebra,
    is_factor,
    minimal_central_projections,
    wedderburn,
)
from .asymptotics import (
    invariant_state_block_structure,
    invariant_states,
    reversible_algebra,
    spectral_split,
    stable_space,
    verify_nt_equals_mr,
)
from .errors import QmsError
from .generator import (
    QmsModel,
    build_generator,
    df_membership_check,
    df_subalgebra,
    evolve_observable,
    evolve_state,
    fixed_point_algebra,
)
from .linalg import DEFAULT_TOL, Superoperator, TolerancePolicy
from .structure import extract_block_data, factorization_residuals, verify_component_triviality

__version__ = "0.1.0"

__all__ = [
    "BlockDecomposition", "DEFAULT_TOL", "OperatorAlgebra", "QmsError", "QmsModel", "Superoperator",
    "TolerancePolicy", "algebra_equal", "build_generator", "center", "center_of_commutant_identity",
    "commutant", "df_membership_check", "df_subalgebra", "double_commutant_check", "evolve_observable",
    "evolve_state", "extract_block_data", "factorization_residuals", "fixed_point_algebra",
    "generate_algebra", "invariant_state_block_structure", "invariant_states", "is_factor",
    "minimal_central_projections", "reversible_algebra", "spectral_split", "stable_space",
    "verify_component_triviality", "verify_nt_equals_mr", "wedderburn",
]
