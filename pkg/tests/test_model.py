import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quenchlab.model import (
    HoppingModel,
    coupling_matrix,
    dispersion,
    dispersion_derivative,
    eigenvalues,
    fft_ordered_eigenvalues,
    nearest_neighbour,
    next_nearest_neighbour,
    sample_anderson,
    shift_symmetries,
)


def test_nn_eigenvalues_small_ring():
    # omega_k = 2 cos(2 pi k / 4) for k = 1..4
    np.testing.assert_allclose(eigenvalues(nearest_neighbour(4)), [0, -2, 0, 2], atol=1e-15)


def test_eigenvalues_match_dense_diagonalisation():
    m = HoppingModel(17, [0.3, 1.0, -0.4, 0.25])
    w = np.linalg.eigvalsh(coupling_matrix(m))
    np.testing.assert_allclose(np.sort(eigenvalues(m)), w, atol=1e-12)


def test_fft_order_is_rotation_of_k_order():
    m = HoppingModel(9, [0.0, 1.0, 0.5])
    np.testing.assert_allclose(fft_ordered_eigenvalues(m), np.roll(eigenvalues(m), 1))


def test_coupling_matrix_entries():
    h = coupling_matrix(HoppingModel(8, [0.5, 1.0, 2.0]))
    assert h[0, 0] == 0.5
    assert h[0, 1] == h[1, 0] == h[0, 7] == 1.0
    assert h[0, 2] == h[0, 6] == 2.0
    assert h[0, 3] == 0.0


def test_model_validation():
    with pytest.raises(ValueError):
        HoppingModel(4, [0, 1, 1])  # L must exceed 2R
    with pytest.raises(ValueError):
        HoppingModel(0, [0])
    with pytest.raises(ValueError):
        HoppingModel(5, [])


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_finite_difference(order):
    m = HoppingModel(50, [0.1, 1.0, -0.3, 0.2])
    p = np.linspace(0.1, 6.0, 13)
    h = 1e-4
    f = lambda q: dispersion_derivative(m, order - 1, q) if order > 1 else dispersion(m, q)
    fd = (f(p + h) - f(p - h)) / (2 * h)
    # central differences carry an O(h^2) relative error
    np.testing.assert_allclose(dispersion_derivative(m, order, p), fd, rtol=1e-6, atol=1e-7)


def test_shift_symmetries():
    assert shift_symmetries(nearest_neighbour(10)) == set()
    # E(p + pi) = E(p) when only even hoppings are present
    assert shift_symmetries(next_nearest_neighbour(10)) == {5}
    assert shift_symmetries(HoppingModel(12, [0, 0, 0, 0, 1.0])) == {3, 6, 9}


def test_anderson_reproducible_and_in_range():
    a = sample_anderson(50, 5.0, seed=7)
    b = sample_anderson(50, 5.0, seed=7)
    c = sample_anderson(50, 5.0, seed=8)
    assert np.array_equal(a.xi, b.xi)
    assert not np.array_equal(a.xi, c.xi)
    assert np.all(np.abs(a.xi) <= 5.0)
    assert np.all(sample_anderson(10, 0.0).xi == 0)


def test_anderson_eigensystem_cached():
    m = sample_anderson(30, 2.0, seed=1)
    w, V = m.eigensystem()
    assert m.eigensystem()[0] is w
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, coupling_matrix(m), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.lists(st.floats(-2, 2), min_size=1, max_size=4))
def test_coupling_matrix_symmetric_and_circulant(L, J):
    if L <= 2 * (len(J) - 1):
        L = 2 * len(J) + 1
    h = coupling_matrix(HoppingModel(L, J))
    assert np.array_equal(h, h.T)
    assert np.array_equal(np.roll(np.roll(h, 1, 0), 1, 1), h)
