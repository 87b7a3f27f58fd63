"""Two-mode Fock-space simulator of polarization-selective two-photon absorption."""

from .fock import (
    DensityMatrix,
    FockLattice,
    ModeOperator,
    StateVector,
    coherent_vacuum_state,
    fock_state,
    hv_to_rl_transform,
    two_photon_jump_operator,
)
from .lindblad import EvolveConfig, evolve, lindblad_rhs, no_jump_evolve
from .projection import AbsorptionStrength, absorbable_state, project_no_absorption

__all__ = [
    "AbsorptionStrength",
    "DensityMatrix",
    "EvolveConfig",
    "FockLattice",
    "ModeOperator",
    "StateVector",
    "absorbable_state",
    "coherent_vacuum_state",
    "evolve",
    "fock_state",
    "hv_to_rl_transform",
    "lindblad_rhs",
    "no_jump_evolve",
    "project_no_absorption",
    "two_photon_jump_operator",
]
