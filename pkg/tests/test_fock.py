import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairgen.fock import (
    CutoffError,
    DegenerateSpaceError,
    DensityMatrix,
    FockLattice,
    InvalidStateError,
    StateVector,
    annihilation,
    circular_annihilation,
    coherent_vacuum_state,
    creation,
    fock_state,
    hv_to_rl_matrix,
    hv_to_rl_transform,
    minimum_coherent_cutoff,
    number_operator,
    rl_to_hv_transform,
    two_photon_jump_operator,
)
from pairgen.projection import absorbable_state, unabsorbable_state


def test_dimension_and_indexing():
    lattice = FockLattice(4)
    assert lattice.dimension == 25
    assert lattice.index(2, 0) == 10
    assert lattice.index(0, 3) == 3
    assert lattice.decode(10) == (2, 0)


@given(st.integers(0, 12).flatmap(lambda c: st.tuples(st.just(c), st.integers(0, c), st.integers(0, c))))
def test_index_roundtrip(args):
    cutoff, n_h, n_v = args
    lattice = FockLattice(cutoff)
    assert lattice.decode(lattice.index(n_h, n_v)) == (n_h, n_v)


@given(st.integers(0, 10))
def test_index_is_bijective(cutoff):
    lattice = FockLattice(cutoff)
    seen = {lattice.index(h, v) for h in range(lattice.size) for v in range(lattice.size)}
    assert seen == set(range(lattice.dimension))


def test_fock_state_examples():
    lattice = FockLattice(4)
    vac = fock_state(lattice, 0, 0)
    assert vac.amplitudes[0] == 1 and np.count_nonzero(vac.amplitudes) == 1
    two = fock_state(lattice, 2, 0)
    assert two.amplitudes[10] == 1 and np.count_nonzero(two.amplitudes) == 1


@pytest.mark.parametrize("n_h, n_v, mode", [(5, 0, "H"), (0, 7, "V"), (-1, 0, "H")])
def test_fock_state_out_of_range_names_mode(n_h, n_v, mode):
    with pytest.raises(IndexError, match=f"mode {mode}"):
        fock_state(FockLattice(4), n_h, n_v)


def test_state_vector_rejects_overnormalized():
    lattice = FockLattice(2)
    with pytest.raises(InvalidStateError):
        StateVector(lattice, np.full(lattice.dimension, 1.0))
    # sub-normalized is fine
    StateVector(lattice, np.full(lattice.dimension, 0.1))


def test_state_is_immutable():
    psi = fock_state(FockLattice(2), 1, 1)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_coherent_zero_is_vacuum():
    psi = coherent_vacuum_state(FockLattice(20), 0)
    assert np.allclose(psi.amplitudes, fock_state(FockLattice(20), 0, 0).amplitudes)


def test_coherent_mean_photon_number():
    # oracle: Poisson weights summed over the retained levels, renormalized
    lam, cutoff = 4.0, 20
    weights = [math.exp(-lam) * lam**n / math.factorial(n) for n in range(cutoff + 1)]
    expected = sum(n * w for n, w in enumerate(weights)) / sum(weights)
    psi = coherent_vacuum_state(FockLattice(cutoff), 2)
    n_h = number_operator(psi.lattice, "H").apply(psi)
    mean = np.vdot(psi.amplitudes, n_h).real
    assert mean == pytest.approx(expected, abs=1e-12)
    # the ~2e-9 tail beyond n = 20 carries ~3.3e-8 of the mean
    assert abs(mean - 4) < 4e-8


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2 ** 0.5, 2.0, 2.5, 3.0, 4.0])
def test_coherent_tail_mass_is_small(alpha):
    cutoff = minimum_coherent_cutoff(alpha)
    lam = alpha**2
    log_terms = [-lam + n * math.log(lam) - math.lgamma(n + 1) for n in range(cutoff + 1, cutoff + 200)]
    tail = sum(math.exp(t) for t in log_terms)
    assert tail < 3e-9


def test_coherent_inadequate_cutoff_reports_minimum():
    with pytest.raises(CutoffError) as info:
        coherent_vacuum_state(FockLattice(4), 2)
    assert info.value.minimum_cutoff == 20
    assert "20" in str(info.value)


def test_coherent_phase_enters_amplitudes():
    psi = coherent_vacuum_state(FockLattice(12), 1j)
    a = annihilation(psi.lattice, "H").apply(psi)
    assert np.vdot(psi.amplitudes, a) == pytest.approx(1j, abs=1e-9)


def test_jump_operator_examples():
    lattice = FockLattice(4)
    o = two_photon_jump_operator(lattice)
    out = o.apply(fock_state(lattice, 2, 0))
    expected = np.zeros(lattice.dimension, complex)
    expected[0] = math.sqrt(2) / 2
    assert np.allclose(out, expected, atol=1e-15)
    assert np.allclose(o.apply(fock_state(lattice, 1, 1)), 0)
    assert np.allclose(o.apply(absorbable_state(lattice)), fock_state(lattice, 0, 0).amplitudes)
    assert np.allclose(o.apply(unabsorbable_state(lattice)), 0, atol=1e-15)


def test_jump_operator_needs_two_photons():
    with pytest.raises(DegenerateSpaceError):
        two_photon_jump_operator(FockLattice(1))


def test_ladder_operators_commute():
    lattice = FockLattice(6)
    a_h, a_v = annihilation(lattice, "H").matrix, annihilation(lattice, "V").matrix
    assert abs(a_h @ a_v - a_v @ a_h).max() == 0


def test_number_from_ladder_on_interior():
    lattice = FockLattice(6)
    for mode in "HV":
        a = annihilation(lattice, mode)
        ad = creation(lattice, mode)
        n_op = (ad @ a).dense()
        for n in range(lattice.cutoff):
            state = fock_state(lattice, n, 0) if mode == "H" else fock_state(lattice, 0, n)
            # sqrt(n)**2 may differ from n in the last bit
            np.testing.assert_allclose(n_op @ state.amplitudes, n * state.amplitudes, rtol=1e-15, atol=0)


def test_creation_truncates_at_edge():
    lattice = FockLattice(3)
    assert np.allclose(creation(lattice, "H").apply(fock_state(lattice, 3, 0)), 0)


def _interior(lattice, limit):
    return [lattice.index(h, v) for h in range(limit + 1) for v in range(limit + 1)]


@pytest.mark.parametrize("cutoff", [2, 4, 7])
def test_jump_operator_matches_ladder_form_on_interior(cutoff):
    lattice = FockLattice(cutoff)
    o = two_photon_jump_operator(lattice).dense()
    a_h, a_v = annihilation(lattice, "H").dense(), annihilation(lattice, "V").dense()
    ref = (a_h @ a_h + a_v @ a_v) / 2
    cols = _interior(lattice, cutoff - 2)
    assert np.array_equal(o[:, cols], ref[:, cols])


@pytest.mark.parametrize("cutoff", [2, 5, 8])
def test_circular_product_equals_jump_operator(cutoff):
    lattice = FockLattice(cutoff)
    a_r = circular_annihilation(lattice, "R")
    a_l = circular_annihilation(lattice, "L")
    o = two_photon_jump_operator(lattice).dense()
    cols = _interior(lattice, cutoff - 2)
    assert np.max(np.abs((a_r @ a_l).dense()[:, cols] - o[:, cols])) <= 1e-12


def test_hv_to_rl_examples():
    lattice = FockLattice(4)
    vac = hv_to_rl_transform(fock_state(lattice, 0, 0))
    assert np.allclose(vac.amplitudes, fock_state(lattice, 0, 0).amplitudes, atol=1e-12)
    rl = hv_to_rl_transform(absorbable_state(lattice))
    assert abs(abs(rl.amplitude(1, 1)) - 1) < 1e-12
    assert rl.norm2() == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("cutoff", [2, 4, 6])
def test_hv_to_rl_is_unitary(cutoff):
    u = hv_to_rl_matrix(FockLattice(cutoff))
    assert np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= 1e-12


def test_hv_to_rl_matches_polynomial_expansion():
    # oracle: expand (a_R^dag)^r (a_L^dag)^l |0> / sqrt(r! l!) with
    # a_R^dag = (a_H^dag + i a_V^dag)/sqrt2, a_L^dag = (a_H^dag - i a_V^dag)/sqrt2
    cutoff = 5
    lattice = FockLattice(cutoff)
    u = hv_to_rl_matrix(lattice)
    for total in range(cutoff + 1):
        for r in range(total + 1):
            l = total - r
            # bivariate polynomial in (h, v) stored as 2D coefficient array
            poly = np.array([[1.0 + 0j]])
            rp = np.array([[0, 1j], [1, 0]]) / math.sqrt(2)  # h + i v
            lp = np.array([[0, -1j], [1, 0]]) / math.sqrt(2)  # h - i v
            for _ in range(r):
                poly = _polymul2d(poly, rp)
            for _ in range(l):
                poly = _polymul2d(poly, lp)
            ket_hv = np.zeros(lattice.dimension, complex)
            for h in range(poly.shape[0]):
                for v in range(poly.shape[1]):
                    if poly[h, v] != 0:
                        ket_hv[lattice.index(h, v)] = poly[h, v] * math.sqrt(
                            math.factorial(h) * math.factorial(v) / (math.factorial(r) * math.factorial(l))
                        )
            # RL amplitude of |r,l>_RL is the row of u at index (r, l)
            assert np.allclose(u[lattice.index(r, l)], ket_hv.conj(), atol=1e-12)


def _polymul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=16, max_size=16))
def test_hv_to_rl_roundtrip_and_norm(values):
    lattice = FockLattice(3)
    amps = np.array(values)
    norm = np.linalg.norm(amps)
    if norm == 0:
        return
    psi = StateVector(lattice, amps / norm)
    rl = hv_to_rl_transform(psi)
    assert abs(rl.norm2() - 1) <= 1e-12
    back = rl_to_hv_transform(rl)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-12


def test_state_json_roundtrip():
    psi = coherent_vacuum_state(FockLattice(12), 0.7 - 0.3j)
    data = json.loads(json.dumps(psi.to_dict()))
    assert data["cutoff"] == 12
    assert len(data["amplitudes"]) == psi.lattice.dimension
    back = StateVector.from_dict(data)
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_density_matrix_validation():
    lattice = FockLattice(2)
    DensityMatrix.from_state(fock_state(lattice, 1, 0))
    with pytest.raises(InvalidStateError, match="trace"):
        DensityMatrix(lattice, 2 * np.eye(lattice.dimension) / lattice.dimension)
    bad = np.zeros((lattice.dimension, lattice.dimension), complex)
    bad[0, 0], bad[1, 1] = 1.5, -0.5
    with pytest.raises(InvalidStateError, match="negative"):
        DensityMatrix(lattice, bad)
