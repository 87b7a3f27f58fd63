import numpy as np
import pytest
import scipy.linalg

from pairgen.fock import DensityMatrix, FockLattice, two_photon_jump_operator

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")


def liouvillian_expm(lattice: FockLattice, rho0: np.ndarray, tau: float) -> np.ndarray:
    """Reference propagator: exact exponential of the vectorized generator (small lattices only)."""
    o = two_photon_jump_operator(lattice).dense()
    odo = o.conj().T @ o
    eye = np.eye(lattice.dimension)
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    gen = 2 * np.kron(o, o.conj()) - np.kron(odo, eye) - np.kron(eye, odo.T)
    vec = scipy.linalg.expm(gen * tau) @ rho0.reshape(-1)
    return vec.reshape(rho0.shape)


def truncated_coherent(lattice: FockLattice, alpha: complex) -> np.ndarray:
    """|alpha>_H|0>_V on an arbitrary (possibly small) lattice, renormalized."""
    from math import factorial

    n = np.arange(lattice.size)
    coeffs = np.array([alpha**k / np.sqrt(factorial(k)) for k in n], dtype=complex)
    coeffs /= np.linalg.norm(coeffs)
    psi = np.zeros(lattice.dimension, dtype=complex)
    psi[n * lattice.size] = coeffs
    return psi


def random_density(lattice: FockLattice, rng: np.random.Generator, rank: int = 3) -> DensityMatrix:
    g = rng.normal(size=(lattice.dimension, rank)) + 1j * rng.normal(size=(lattice.dimension, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(lattice, rho)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
