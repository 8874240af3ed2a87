"""Local completely positive multilinear maps on block algebras.

Finite models of locally C*-algebras, their completely positive multilinear
maps into flag-compatible operators, minimal Stinespring-type dilations and
Radon-Nikodym derivatives between dominated maps.
"""
from .errors import (
    AlgebraMismatchError,
    ConstructionError,
    InconsistencyError,
    InvalidSpecError,
    LevelError,
    LocstineError,
    NotAdmissibleError,
    NotInCEDError,
    NotInCommutantError,
    OrderError,
    PreconditionError,
    ShapeError,
)
from .local_algebra import (
    AlgebraElement,
    BlockAlgebra,
    FlagOperator,
    QuantizedDomain,
    identity_operator,
    is_alpha_symmetric,
    is_local_positive,
    local_positive_levels,
    make_block_algebra,
    make_domain,
    make_flag_operator,
    seminorm,
)
from .multilinear import (
    MapCheckReport,
    MultilinearMap,
    adjoint_map,
    amplify,
    check_local_contractivity,
    check_local_positivity,
    evaluate,
    is_invariant,
    is_symmetric,
    make_map,
    map_from_function,
)
from .stinespring import (
    GramData,
    StinespringTriple,
    dilate,
    gram_matrix,
    is_minimal,
    minimize,
    unitary_equivalence,
    verify_dilation,
)
from .radon_nikodym import (
    CommutantBasis,
    RNCertificate,
    commutant_basis,
    connecting_contraction,
    dominates,
    map_from_operator,
    order_interval_check,
    rn_derivative,
)

__version__ = "0.1.0"
