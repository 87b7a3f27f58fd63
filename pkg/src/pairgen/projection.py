"""Static projection picture of polarization-selective pair absorption.

Absorption removes the |1,1>_RL = (|2,0> + |0,2>)/sqrt2 component; the orthogonal
combination (|2,0> - |0,2>)/sqrt2 is dark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import FockLattice, StateVector


@dataclass(frozen=True)
class AbsorptionStrength:
    epsilon: float

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")

    @classmethod
    def from_time(cls, tau: float) -> "AbsorptionStrength":
        """Strength equivalent to no-jump evolution over normalized time tau."""
        if tau < 0:
            raise ValueError("tau must be non-negative")
        return cls(-math.expm1(-tau))


def _pair_state(lattice: FockLattice, sign: int) -> StateVector:
    lattice.require_two_photon()
    amps = np.zeros(lattice.dimension, dtype=complex)
    amps[lattice.index(2, 0)] = 1 / math.sqrt(2)
    amps[lattice.index(0, 2)] = sign / math.sqrt(2)
    return StateVector(lattice, amps)


def absorbable_state(lattice: FockLattice) -> StateVector:
    return _pair_state(lattice, +1)


def unabsorbable_state(lattice: FockLattice) -> StateVector:
    return _pair_state(lattice, -1)


def project_no_absorption(psi: StateVector, strength: AbsorptionStrength | float) -> StateVector:
    """(1 - eps |Psi_a><Psi_a|) |psi>, unnormalized."""
    if not isinstance(strength, AbsorptionStrength):
        strength = AbsorptionStrength(float(strength))
    target = absorbable_state(psi.lattice)
    overlap = target.inner(psi)
    return StateVector(psi.lattice, psi.amplitudes - strength.epsilon * overlap * target.amplitudes)


def absorption_probability(psi: StateVector, strength: AbsorptionStrength | float) -> float:
    """Norm lost to absorption: <psi|psi> - <psi_f|psi_f>."""
    return psi.norm2() - project_no_absorption(psi, strength).norm2()
