"""Theta-function sections of polarized abelian varieties and the multiplication map."""
from .avcore import (
    PeriodMatrix,
    PolarizationType,
    SymplecticData,
    check_cocycle_identity,
    symplectic_data,
    validate_period_matrix,
)
from .groups import (
    CharacterRho,
    GroupElement,
    characters_of_Z2prime,
    complement_W,
    enumerate_K1,
    group_orders,
    halve,
    psi_counts,
    psi_pairing,
    subgroup_2K1,
    subgroup_Z2,
    subgroup_Z2prime,
    transversal_U,
)
from .multmap import (
    block_structure_check,
    character_blocks,
    injectivity_report,
    kernel_basis,
    mult_matrix_formula,
    mult_matrix_interpolation,
    pullback_invariance_check,
)
from .sections import basis_L, basis_L2, evaluate, linear_independence_check
from .theta import Characteristic, ThetaValue, quasiperiodicity_factor, theta, theta_constant

__version__ = "0.1.0"
