"""Photon statistics and quadrature moments of two-mode density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import (
    DensityMatrix,
    FockLattice,
    _check_mode,
    _jump_matrix,
    _lowering_matrix,
    _single_mode_lowering,
)

G2_FLOOR = 1e-30
IMAG_TOL = 1e-10


class UndefinedG2Error(ValueError):
    """g2(0) requested for a mode with (numerically) zero photons."""


@dataclass(frozen=True)
class QuadratureReport:
    phi: float
    mean_X: float
    var_X: float


@dataclass(frozen=True)
class EllipseData:
    center: tuple[float, float]
    axes: tuple[float, float]  # (minor, major) standard deviations
    orientation: float  # direction of the minor axis, in [0, pi)

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "axes": list(self.axes),
            "orientation": self.orientation,
        }

    def polyline(self, points: int = 64) -> np.ndarray:
        """(points, 2) array tracing the one-sigma contour in the (X(0), X(pi/2)) plane."""
        theta = 2 * np.pi * np.arange(points) / points
        minor, major = self.axes
        c, s = math.cos(self.orientation), math.sin(self.orientation)
        u = minor * np.cos(theta)
        v = major * np.sin(theta)
        x = self.center[0] + c * u - s * v
        y = self.center[1] + s * u + c * v
        return np.column_stack([x, y])


def _expect(op: sp.spmatrix, rho: np.ndarray) -> complex:
    """trace(op @ rho) without forming the product."""
    coo = op.tocoo()
    return complex(np.sum(coo.data * rho[coo.col, coo.row]))


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def _parts(rho) -> tuple[FockLattice, np.ndarray]:
    return rho.lattice, rho.entries


@dataclass(frozen=True)
class ModeMoments:
    """<a>, <a^2>, <a^dag a>, <a^dag2 a^2> of one mode."""

    a: complex
    a2: complex
    n: float
    a2dag_a2: float

    @property
    def g2(self) -> float:
        if self.n <= G2_FLOOR:
            raise UndefinedG2Error(f"mean photon number {self.n:.3e} is zero: g2 undefined")
        return self.a2dag_a2 / self.n**2

    def var_X(self, phi: float) -> float:
        c, d = self._var_coefficients()
        return float(c + 2 * (np.exp(-2j * phi) * d).real)

    def mean_X(self, phi: float) -> float:
        return float(2 * (self.a * np.exp(-1j * phi)).real)

    def _var_coefficients(self) -> tuple[float, complex]:
        # var X(phi) = C + 2 Re(e^{-2i phi} D)
        c = 1 + 2 * self.n - 2 * abs(self.a) ** 2
        d = self.a2 - self.a**2
        return c, d

    def var_extrema(self) -> tuple[float, float, float]:
        """(phi_min in [0, pi), var_min, var_max)."""
        c, d = self._var_coefficients()
        phi_min = ((np.angle(d) - np.pi) / 2) % np.pi if abs(d) > 0 else 0.0
        return float(phi_min), float(c - 2 * abs(d)), float(c + 2 * abs(d))

    def covariance(self) -> np.ndarray:
        """Symmetrized covariance of (X(0), X(pi/2))."""
        c, d = self._var_coefficients()
        return np.array(
            [[c + 2 * d.real, 2 * d.imag], [2 * d.imag, c - 2 * d.real]]
        )


def mode_moments_array(lattice: FockLattice, rho: np.ndarray, mode: str) -> ModeMoments:
    a = _lowering_matrix(lattice.cutoff, _check_mode(mode))
    a2 = a @ a
    n_h, n_v = lattice.occupations()
    n = (n_h if mode == "H" else n_v).astype(float)
    diag = np.real(np.diagonal(rho))
    return ModeMoments(
        a=_expect(a, rho),
        a2=_expect(a2, rho),
        n=float(np.dot(n, diag)),
        a2dag_a2=float(np.dot(n * (n - 1), diag)),
    )


def mode_moments(rho: DensityMatrix, mode: str) -> ModeMoments:
    return mode_moments_array(*_parts(rho), mode)


def mean_photon_number(rho: DensityMatrix, mode: str) -> float:
    lattice, m = _parts(rho)
    n = _lowering_matrix(lattice.cutoff, _check_mode(mode))
    return _real(_expect(n.conj().T @ n, m), "<a^dag a>")


def second_order_moment(rho: DensityMatrix, mode: str) -> float:
    lattice, m = _parts(rho)
    a = _lowering_matrix(lattice.cutoff, _check_mode(mode))
    a2 = a @ a
    return _real(_expect(a2.conj().T @ a2, m), "<a^dag2 a^2>")


def mean_annihilation(rho: DensityMatrix, mode: str) -> complex:
    lattice, m = _parts(rho)
    return _expect(_lowering_matrix(lattice.cutoff, _check_mode(mode)), m)


def mean_annihilation_squared(rho: DensityMatrix, mode: str) -> complex:
    lattice, m = _parts(rho)
    a = _lowering_matrix(lattice.cutoff, _check_mode(mode))
    return _expect(a @ a, m)


def g2_zero(rho: DensityMatrix, mode: str) -> float:
    n = mean_photon_number(rho, mode)
    if n <= G2_FLOOR:
        raise UndefinedG2Error(
            f"mode {mode} holds {n:.3e} photons: g2(0) undefined for the vacuum"
        )
    return second_order_moment(rho, mode) / n**2


def quadrature_dispersion(rho: DensityMatrix, mode: str, phi: float) -> QuadratureReport:
    mom = mode_moments(rho, mode)
    return QuadratureReport(phi=float(phi), mean_X=mom.mean_X(phi), var_X=mom.var_X(phi))


def ellipse_from_moments(mom: ModeMoments) -> EllipseData:
    cov = mom.covariance()
    evals, evecs = np.linalg.eigh(cov)
    minor_vec = evecs[:, 0]
    if np.isclose(evals[0], evals[1], rtol=0, atol=1e-14):
        orientation = 0.0
    else:
        orientation = float(math.atan2(minor_vec[1], minor_vec[0]) % math.pi)
    axes = tuple(float(math.sqrt(max(e, 0.0))) for e in evals)
    return EllipseData(
        center=(mom.mean_X(0.0), mom.mean_X(math.pi / 2)),
        axes=axes,
        orientation=orientation,
    )


def phase_space_ellipse(rho: DensityMatrix, mode: str) -> EllipseData:
    return ellipse_from_moments(mode_moments(rho, mode))


def reduced_mode_matrix(rho: DensityMatrix, mode: str) -> np.ndarray:
    """Partial trace over the other polarization mode."""
    size = rho.lattice.size
    r = rho.entries.reshape(size, size, size, size)
    if _check_mode(mode) == "H":
        return np.einsum("ikjk->ij", r)
    return np.einsum("kikj->ij", r)


def single_mode_moments(reduced: np.ndarray) -> tuple[float, float]:
    """(<a^dag a>, <a^dag2 a^2>) from a single-mode density matrix."""
    a = _single_mode_lowering(reduced.shape[0]).toarray()
    a2 = a @ a
    n = np.trace(a.conj().T @ a @ reduced)
    n2 = np.trace(a2.conj().T @ a2 @ reduced)
    return float(n.real), float(n2.real)


def parity(rho: DensityMatrix, mode: str) -> float:
    """<(-1)^n> of one mode."""
    n_h, n_v = rho.lattice.occupations()
    n = n_h if _check_mode(mode) == "H" else n_v
    return float(np.dot((-1.0) ** n, np.real(np.diagonal(rho.entries))))


def jump_rate_expectation(rho: DensityMatrix) -> float:
    """<O^dag O>."""
    o = _jump_matrix(rho.lattice.cutoff)
    return _real(_expect(o.conj().T @ o, rho.entries), "<O^dag O>")


def total_photon_number(rho: DensityMatrix) -> float:
    n_h, n_v = rho.lattice.occupations()
    return float(np.dot(n_h + n_v, np.real(np.diagonal(rho.entries))))
