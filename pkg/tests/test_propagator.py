import numpy as np
import pytest
from scipy.linalg import expm

from quenchlab.model import HoppingModel, coupling_matrix, nearest_neighbour, sample_anderson
from quenchlab.propagator import bessel_approximation, bessel_error_bound, propagate


def test_matches_expm_clean():
    m = HoppingModel(20, [0.2, 1.0, -0.6, 0.3])
    G = propagate(m, 2.3)
    np.testing.assert_allclose(G.matrix(), expm(2.3j * coupling_matrix(m)), atol=1e-12)


def test_matches_expm_disordered():
    m = sample_anderson(24, 3.0, seed=2)
    G = propagate(m, 1.1)
    assert G.kind == "dense"
    np.testing.assert_allclose(G.matrix(), expm(1.1j * coupling_matrix(m)), atol=1e-12)


def test_entry_is_one_based_and_periodic():
    G = propagate(HoppingModel(11, [0, 1.0, 0.4]), 0.7)
    M = G.matrix()
    assert G.entry(1, 1) == pytest.approx(M[0, 0])
    assert G.entry(3, 1) == pytest.approx(M[2, 0])
    assert G.entry(12, 1) == pytest.approx(M[0, 0])


def test_zero_time_is_identity():
    G = propagate(nearest_neighbour(9), 0.0)
    np.testing.assert_allclose(G.matrix(), np.eye(9), atol=1e-15)


def test_composition():
    m = HoppingModel(15, [0.1, 1.0, 0.5])
    a, b = propagate(m, 0.4), propagate(m, 1.9)
    np.testing.assert_allclose((a @ b).matrix(), propagate(m, 2.3).matrix(), atol=1e-13)
    d = sample_anderson(15, 1.0, seed=3)
    np.testing.assert_allclose(
        (propagate(d, 0.4) @ propagate(d, 1.9)).matrix(), propagate(d, 2.3).matrix(), atol=1e-12
    )


def test_unitarity_and_max_abs():
    G = propagate(HoppingModel(64, [0, 1.0, 0.3, -0.2]), 13.0)
    assert G.unitarity_defect() < 1e-12
    assert 0 < G.max_abs() <= 1 + 1e-12


def test_bessel_known_value():
    # J_0(0) = 1, J_1(-2) = -0.5767248077568734
    assert bessel_approximation(0, 0.0) == pytest.approx(1.0)
    assert bessel_approximation(1, 1.0) == pytest.approx(1j * -0.5767248077568734)


def test_bessel_is_conjugate_of_stored_entry():
    L, t = 400, 7.0
    G = propagate(nearest_neighbour(L), t)
    for d in range(-20, 21):
        err = abs(np.conj(G.entry(d + 1, 1)) - bessel_approximation(d, t))
        assert err <= bessel_error_bound(d, t, L) + 1e-12


def test_bessel_bound_rejects_bad_L():
    with pytest.raises(ValueError):
        bessel_error_bound(1, 1.0, 0)
