"""Two-mode (H, V) truncated Fock space: lattice, states and ladder operators.

Basis ordering is n_H-major: index(n_H, n_V) = n_H * (cutoff + 1) + n_V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp

NORM_TOL = 1e-12
MODES = ("H", "V")


class DegenerateSpaceError(ValueError):
    """Raised when the lattice is too small for a two-photon operation."""


class CutoffError(ValueError):
    def __init__(self, message: str, minimum_cutoff: int):
        super().__init__(message)
        self.minimum_cutoff = minimum_cutoff


class DimensionError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class FockLattice:
    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise ValueError(f"cutoff must be a non-negative integer, got {self.cutoff!r}")

    @property
    def size(self) -> int:
        """Number of levels per mode."""
        return self.cutoff + 1

    @property
    def dimension(self) -> int:
        return self.size**2

    def index(self, n_h: int, n_v: int) -> int:
        for name, n in (("H", n_h), ("V", n_v)):
            if not 0 <= n <= self.cutoff:
                raise IndexError(
                    f"mode {name} occupation {n} outside [0, {self.cutoff}]"
                )
        return n_h * self.size + n_v

    def decode(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dimension:
            raise IndexError(f"basis index {index} outside [0, {self.dimension})")
        return divmod(index, self.size)

    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (n_H, n_V) indexed by basis position."""
        idx = np.arange(self.dimension)
        return idx // self.size, idx % self.size

    def require_two_photon(self):
        if self.cutoff < 2:
            raise DegenerateSpaceError(
                f"cutoff {self.cutoff} < 2: no two-photon states on this lattice"
            )


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes on a lattice. Sub-normalized vectors are allowed (conditional states)."""

    lattice: FockLattice
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.lattice.dimension,):
            raise DimensionError(
                f"expected {self.lattice.dimension} amplitudes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("amplitudes must be finite")
        if self._norm2(amps) > 1 + NORM_TOL:
            raise InvalidStateError(f"squared norm {self._norm2(amps):.3e} exceeds 1")
        object.__setattr__(self, "amplitudes", amps)

    @staticmethod
    def _norm2(amps) -> float:
        return float(np.vdot(amps, amps).real)

    def norm2(self) -> float:
        return self._norm2(self.amplitudes)

    def normalized(self) -> "StateVector":
        n = math.sqrt(self.norm2())
        if n == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return StateVector(self.lattice, self.amplitudes / n)

    def amplitude(self, n_h: int, n_v: int) -> complex:
        return complex(self.amplitudes[self.lattice.index(n_h, n_v)])

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.lattice != self.lattice:
            raise DimensionError("states live on different lattices")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_dict(self) -> dict:
        return {
            "cutoff": self.lattice.cutoff,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StateVector":
        lattice = FockLattice(int(data["cutoff"]))
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return cls(lattice, amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    lattice: FockLattice
    entries: np.ndarray = field(repr=False)
    validate: bool = field(default=True, repr=False)

    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-9
    POSITIVITY_TOL = 1e-9

    def __post_init__(self):
        rho = _frozen(self.entries)
        d = self.lattice.dimension
        if rho.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix, got shape {rho.shape}")
        object.__setattr__(self, "entries", rho)
        if self.validate:
            problems = self.violations()
            if problems:
                raise InvalidStateError("; ".join(problems))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.lattice, np.outer(psi, psi.conj()))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.entries) - 1))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def violations(self) -> list[str]:
        out = []
        if (e := self.hermiticity_error()) > self.HERMITIAN_TOL:
            out.append(f"not Hermitian (max |rho - rho^dag| = {e:.3e})")
        if (e := self.trace_error()) > self.TRACE_TOL:
            out.append(f"trace deviates from 1 by {e:.3e}")
        if (e := self.min_eigenvalue()) < -self.POSITIVITY_TOL:
            out.append(f"negative eigenvalue {e:.3e}")
        return out

    def population(self, n_h: int, n_v: int) -> float:
        i = self.lattice.index(n_h, n_v)
        return float(self.entries[i, i].real)

    def element(self, bra: tuple[int, int], ket: tuple[int, int]) -> complex:
        """<bra|rho|ket>."""
        return complex(self.entries[self.lattice.index(*bra), self.lattice.index(*ket)])


@dataclass(frozen=True, eq=False)
class ModeOperator:
    lattice: FockLattice
    matrix: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        d = self.lattice.dimension
        if m.shape != (d, d):
            raise DimensionError(f"operator shape {m.shape} does not match dimension {d}")
        object.__setattr__(self, "matrix", m)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.lattice, self.matrix.conj().T)

    def apply(self, state: StateVector) -> np.ndarray:
        """Raw amplitudes of op|state> (not wrapped: the image need not be sub-normalized)."""
        if state.lattice != self.lattice:
            raise DimensionError("operator and state live on different lattices")
        return self.matrix @ state.amplitudes

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        return ModeOperator(self.lattice, self.matrix @ other.matrix)


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")
    return mode


@lru_cache(maxsize=None)
def _single_mode_lowering(size: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, size, dtype=float)), 1, format="csr")


@lru_cache(maxsize=None)
def _lowering_matrix(cutoff: int, mode: str) -> sp.csr_matrix:
    size = cutoff + 1
    a = _single_mode_lowering(size)
    eye = sp.identity(size, format="csr")
    m = sp.kron(a, eye) if mode == "H" else sp.kron(eye, a)
    return sp.csr_matrix(m, dtype=complex)


def annihilation(lattice: FockLattice, mode: str) -> ModeOperator:
    return ModeOperator(lattice, _lowering_matrix(lattice.cutoff, _check_mode(mode)))


def creation(lattice: FockLattice, mode: str) -> ModeOperator:
    """Truncated a^dag: the top level |cutoff> maps to zero."""
    return annihilation(lattice, mode).dag()


def number_operator(lattice: FockLattice, mode: str) -> ModeOperator:
    n_h, n_v = lattice.occupations()
    diag = n_h if _check_mode(mode) == "H" else n_v
    return ModeOperator(lattice, sp.diags(diag.astype(complex), format="csr"))


def circular_annihilation(lattice: FockLattice, mode: str) -> ModeOperator:
    """a_R = (a_H - i a_V)/sqrt2, a_L = (a_H + i a_V)/sqrt2."""
    a_h = _lowering_matrix(lattice.cutoff, "H")
    a_v = _lowering_matrix(lattice.cutoff, "V")
    if mode == "R":
        m = (a_h - 1j * a_v) / math.sqrt(2)
    elif mode == "L":
        m = (a_h + 1j * a_v) / math.sqrt(2)
    else:
        raise ValueError(f"circular mode must be 'R' or 'L', got {mode!r}")
    return ModeOperator(lattice, m)


@lru_cache(maxsize=None)
def _jump_matrix(cutoff: int) -> sp.csr_matrix:
    a_h = _lowering_matrix(cutoff, "H")
    a_v = _lowering_matrix(cutoff, "V")
    return sp.csr_matrix((a_h @ a_h + a_v @ a_v) / 2)


def two_photon_jump_operator(lattice: FockLattice) -> ModeOperator:
    """O = a_R a_L = (a_H^2 + a_V^2)/2."""
    lattice.require_two_photon()
    return ModeOperator(lattice, _jump_matrix(lattice.cutoff))


def fock_state(lattice: FockLattice, n_h: int, n_v: int) -> StateVector:
    amps = np.zeros(lattice.dimension, dtype=complex)
    amps[lattice.index(n_h, n_v)] = 1.0
    return StateVector(lattice, amps)


def minimum_coherent_cutoff(alpha: complex) -> int:
    """Smallest cutoff with |alpha|^2 + 6|alpha| + 4 <= cutoff."""
    r = abs(alpha)
    # guard against r*r landing a hair above an integer through rounding
    return math.ceil(r * r + 6 * r + 4 - 1e-9)


def coherent_vacuum_state(lattice: FockLattice, alpha: complex, strict: bool = True) -> StateVector:
    """|alpha>_H (x) |0>_V, renormalized after truncation.

    With ``strict=False`` an inadequate cutoff is accepted (caller's responsibility).
    """
    need = minimum_coherent_cutoff(alpha)
    if strict and lattice.cutoff < need:
        raise CutoffError(
            f"cutoff {lattice.cutoff} too small for |alpha| = {abs(alpha):.6g}; "
            f"minimum acceptable cutoff is {need}",
            need,
        )
    n = np.arange(lattice.size)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        coeffs = (n == 0).astype(complex)
    else:
        r, phase = abs(alpha), np.angle(alpha)
        mags = np.exp(-r * r / 2 + n * math.log(r) - 0.5 * log_fact)
        coeffs = mags * np.exp(1j * phase * n)
    coeffs /= np.linalg.norm(coeffs)
    amps = np.zeros(lattice.dimension, dtype=complex)
    amps[n * lattice.size] = coeffs
    return StateVector(lattice, amps)


@lru_cache(maxsize=None)
def _hv_to_rl_matrix(cutoff: int) -> np.ndarray:
    """Passive two-mode transform taking HV amplitudes to RL amplitudes.

    If U^dag a_H U = a_R and U^dag a_V U = a_L, then <r,l|_RL psi> = <r,l|_HV U psi>.
    With (a_R, a_L) = M (a_H, a_V), U = exp(-i sum_jk G_jk a_j^dag a_k) where
    exp(-iG) = M. The generator is built from truncated ladder operators and
    conserves total photon number, so U is exactly unitary block by block and
    exact on every block with n_H + n_V <= cutoff.
    """
    lattice = FockLattice(cutoff)
    mixing = np.array([[1, -1j], [1, 1j]]) / math.sqrt(2)
    gen = 1j * scipy.linalg.logm(mixing)
    gen = 0.5 * (gen + gen.conj().T)
    a = [_lowering_matrix(cutoff, "H").toarray(), _lowering_matrix(cutoff, "V").toarray()]
    k = sum(gen[j, m] * a[j].conj().T @ a[m] for j in range(2) for m in range(2))
    n_h, n_v = lattice.occupations()
    total = n_h + n_v
    u = np.zeros((lattice.dimension, lattice.dimension), dtype=complex)
    for n in np.unique(total):
        block = np.flatnonzero(total == n)
        u[np.ix_(block, block)] = scipy.linalg.expm(-1j * k[np.ix_(block, block)])
    u.flags.writeable = False
    return u


def hv_to_rl_matrix(lattice: FockLattice) -> np.ndarray:
    return _hv_to_rl_matrix(lattice.cutoff)


def hv_to_rl_transform(state: StateVector) -> StateVector:
    """Re-express HV amplitudes in the circular (R, L) basis, same index layout."""
    return StateVector(state.lattice, hv_to_rl_matrix(state.lattice) @ state.amplitudes)


def rl_to_hv_transform(state: StateVector) -> StateVector:
    u = hv_to_rl_matrix(state.lattice)
    return StateVector(state.lattice, u.conj().T @ state.amplitudes)
