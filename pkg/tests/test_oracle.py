import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quenchlab.model import HoppingModel, coupling_matrix, nearest_neighbour
from quenchlab.oracle import (
    FockSpace,
    ManyBodyState,
    build_hamiltonian,
    covariance_of,
    diagonalize,
    evolve_state,
    fock_state,
    gibbs_state,
    paired_state,
    wick_deviation,
)
from quenchlab.propagator import propagate


def test_anticommutation_relations():
    assert FockSpace(5).check_anticommutation() < 1e-14


def test_single_particle_energies():
    m = HoppingModel(6, [0.1, 1.0, 0.3])
    spec = diagonalize(build_hamiltonian(m))
    E1 = np.sort(spec.sectors[1][2])
    np.testing.assert_allclose(E1, np.linalg.eigvalsh(coupling_matrix(m)), atol=1e-12)
    # free fermions: many-body levels are sums of single-particle ones
    assert spec.energies.min() == pytest.approx(np.sum(np.minimum(np.linalg.eigvalsh(coupling_matrix(m)), 0)))


def test_number_conservation_checked():
    sp = FockSpace(3)
    with pytest.raises(ValueError):
        diagonalize(sp.annihilator(0) + sp.creator(0))


def test_fock_state_covariance():
    np.testing.assert_allclose(covariance_of(fock_state([1, 0, 1])), np.diag([1, 0, 1]), atol=0)


def test_single_particle_amplitude_is_conjugate_propagator():
    L, t = 7, 1.4
    m = nearest_neighbour(L)
    G = propagate(m, t).matrix()
    psi = np.zeros(1 << L, dtype=complex)
    psi[1 << 2] = 1
    out = evolve_state(psi, build_hamiltonian(m), t).data
    np.testing.assert_allclose([out[1 << x] for x in range(L)], np.conj(G[2]), atol=1e-12)


def test_density_matrix_evolution_matches_vector():
    m = HoppingModel(5, [0.0, 1.0, 0.4])
    H = build_hamiltonian(m)
    psi = fock_state([1, 1, 0, 0, 1]).data
    rho = ManyBodyState(np.outer(psi, psi.conj()), 5)
    a = covariance_of(evolve_state(psi, H, 0.9))
    b = covariance_of(evolve_state(rho, H, 0.9))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_gibbs_trace_and_ground_state_limit():
    m = nearest_neighbour(6)
    H = build_hamiltonian(m)
    rho = gibbs_state(H, 1.0, 0.0)
    assert np.trace(rho.data).real == pytest.approx(1.0, abs=1e-12)
    cold = covariance_of(gibbs_state(H, 200.0, 0.1))
    # mu = 0.1 fills exactly the modes with omega < 0.1
    w = np.linalg.eigvalsh(coupling_matrix(m))
    assert np.trace(cold).real == pytest.approx(np.sum(w < 0.1), abs=1e-8)


def test_energy_decreases_with_beta():
    H = build_hamiltonian(HoppingModel(5, [0.2, 1.0]))
    E = [np.trace(H @ gibbs_state(H, b, 0.0).data).real for b in np.geomspace(0.05, 20, 12)]
    assert np.all(np.diff(E) < 0)


def test_parity():
    assert fock_state([1, 1, 0]).parity == "even"
    assert fock_state([1, 0, 0]).parity == "odd"
    mixed = ManyBodyState((fock_state([1, 0]).data + fock_state([1, 1]).data) / np.sqrt(2), 2)
    assert mixed.parity == "mixed"


def test_wick_zero_on_fock_nonzero_on_paired():
    quartets = [(0, 1, 2, 3), (0, 1, 1, 0), (2, 3, 0, 1)]
    assert wick_deviation(fock_state([1, 0, 1, 1, 0, 0]), [(0, 2, 3, 0), (0, 2, 2, 0)]) < 1e-12
    assert wick_deviation(paired_state(1), quartets) == pytest.approx(0.5)


def test_size_limits():
    H = build_hamiltonian(nearest_neighbour(13))
    with pytest.raises(ValueError):
        gibbs_state(H, 1.0, 0.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 6), st.floats(0.1, 5), st.floats(0, 3), st.integers(0, 2**31))
def test_gaussian_closure_and_parity_preservation(L, beta, t, seed):
    rng = np.random.default_rng(seed)
    J = [rng.normal(), rng.normal()]
    H = build_hamiltonian(HoppingModel(L, J))
    rho = evolve_state(gibbs_state(H, beta, rng.normal()), H, t)
    q = [tuple(rng.integers(0, L, 4)) for _ in range(6)]
    assert wick_deviation(rho, q) < 1e-10
    occ = rng.integers(0, 2, L)
    st0 = fock_state(occ)
    assert evolve_state(st0, H, t).parity == st0.parity
