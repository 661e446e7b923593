import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex._numerics import derivative, fornberg_weights, illinois, sign_changes
from glvortex.settings import Settings, current, use_settings


def test_illinois_vectorized_cubic():
    lo, hi = np.array([0.5, -1.5]), np.array([1.5, -0.5])
    x, _ = illinois(lambda v: v ** 3 - v, lo, hi, xtol=1e-14)
    assert np.allclose(x, [1.0, -1.0], atol=1e-12)


def test_illinois_indexed_callback_sees_subset():
    targets = np.array([0.3, 0.7, 1.1])
    x, _ = illinois(lambda v, idx: v - targets[idx], np.zeros(3), np.full(3, 2.0),
                    xtol=1e-14, indexed=True)
    assert np.allclose(x, targets, atol=1e-13)


@given(st.floats(0.01, 0.99), st.floats(0.5, 5.0))
@settings(max_examples=50, deadline=None)
def test_illinois_finds_root_of_monotone_function(root, k):
    f = lambda v: np.tanh(k * (v - root))
    x, _ = illinois(f, np.array([0.0]), np.array([1.0]), xtol=1e-13)
    assert abs(x[0] - root) < 1e-11


def test_fornberg_weights_reproduce_polynomials():
    x = np.array([0.0, 0.1, 0.25, 0.45, 0.7])
    w = fornberg_weights(0.2, x, 1)
    for p in range(5):
        exact = p * 0.2 ** (p - 1) if p else 0.0
        assert np.dot(w, x ** p) == pytest.approx(exact, abs=1e-10)


def test_derivative_on_graded_grid():
    x = np.geomspace(1e-3, 1.0, 200)
    dy = derivative(x, np.sin(3 * x))
    assert np.max(np.abs(dy - 3 * np.cos(3 * x))) < 1e-6


def test_sign_changes_ignores_values_below_floor():
    v = np.array([1.0, 1e-14, -1e-14, 2.0, -1.0, -3.0, 0.5])
    assert sign_changes(v, 1e-12) == 2


def test_settings_scaled_and_scoped():
    base = current()
    with use_settings(base.scaled(10.0)) as s:
        assert current().rtol == pytest.approx(10 * base.rtol)
        assert s.mesh_size == base.mesh_size
    assert current() == base
    assert Settings().scaled(1.0) == Settings()
