import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex.errors import (DerivativeViolated, GeometryError, PositivityViolated,
                             RobinDegenerate, SymmetryViolated)
from glvortex.geometry import (Regularizer, make_custom, make_disk, make_sphere,
                               surface_from_config)


def sphere_samples(n=400):
    s = np.linspace(0.0, np.pi, n)
    return np.column_stack([s, np.sin(s)])


def test_disk_and_sphere_profiles(disk, sphere):
    assert disk.a_prime(0.0) == 1.0
    assert disk.a(disk.s_star) == 1.0
    assert sphere.a(sphere.s_star) == pytest.approx(0.0, abs=1e-15)
    assert sphere.boundary_empty and not disk.boundary_empty
    assert disk.robin == (1.0, 0.0)


def test_robin_sign_condition():
    with pytest.raises(RobinDegenerate):
        make_disk((1.0, -1.0))
    with pytest.raises(RobinDegenerate):
        make_disk((0.0, 0.0))
    assert make_disk((0.0, 1.0)).robin == (0.0, 1.0)


def test_custom_profile_validation():
    s = np.linspace(0, 1, 50)
    with pytest.raises(PositivityViolated):
        make_custom(np.column_stack([s, s * (s - 0.5)]), False, (1, 0))
    with pytest.raises(DerivativeViolated):
        make_custom(np.column_stack([s, 2 * s]), False, (1, 0))
    with pytest.raises(RobinDegenerate):
        make_custom(np.column_stack([s, s]), False, None)
    with pytest.raises(GeometryError):
        make_custom([[0, 0], [1, 1]], False, (1, 0))


def test_closed_custom_surface_must_be_symmetric():
    s = np.linspace(0, np.pi, 400)
    a = np.sin(s) * (1 + 0.3 * np.sin(s) * np.cos(s))
    with pytest.raises(SymmetryViolated):
        make_custom(np.column_stack([s, a]), True)


def test_surface_from_config_round_trip(sphere):
    again = surface_from_config(sphere.to_config())
    assert again.kind == "sphere" and again.s_star == sphere.s_star
    with pytest.raises(GeometryError):
        surface_from_config({"kind": "torus"})


@pytest.mark.parametrize("m", [1, 2, 3])
def test_regularizer_closed_forms(disk, sphere, m):
    s = np.array([0.1, 0.7, 1.0])
    assert np.allclose(Regularizer(disk, m).E(s), s ** m, rtol=1e-14)
    assert np.allclose(Regularizer(sphere, m).E(s), (2 * np.tan(s / 2)) ** m, rtol=1e-14)


def test_sphere_regularizer_normalization(sphere):
    E = Regularizer(sphere, 1)
    assert E.E(1e-4) / 1e-4 == pytest.approx(1.0, abs=1e-7)
    assert E.E(np.pi / 2) == pytest.approx(2.0, rel=1e-14)


def test_quadrature_regularizer_matches_closed_form(sphere):
    # [DERIVED] closed form int ds / sin s = log tan(s/2)
    quad = Regularizer(sphere, 2, closed_form=False)
    s = np.linspace(0.05, np.pi - 0.05, 23)
    assert np.allclose(quad.E(s), (2 * np.tan(s / 2)) ** 2, rtol=1e-10)


def test_custom_sphere_regularizer_close_to_closed_form():
    surf = make_custom(sphere_samples(), True)
    s = np.array([0.2, 1.0, 1.5, 2.5])
    assert np.allclose(Regularizer(surf, 1).E(s), 2 * np.tan(s / 2), rtol=1e-6)


@given(st.floats(0.01, np.pi - 0.01))
@settings(max_examples=40, deadline=None)
def test_reflection_identity(s):
    E = Regularizer(make_sphere(), 1, closed_form=False)
    assert E.E(s) * E.E(np.pi - s) == pytest.approx(E.E(np.pi / 2) ** 2, rel=1e-10)


@given(st.floats(0.01, 0.99))
@settings(max_examples=30, deadline=None)
def test_log_derivative_is_m_over_a(s):
    E = Regularizer(make_sphere(), 2)
    h = 1e-6
    fd = (E.log_E(s + h) - E.log_E(s - h)) / (2 * h)
    assert fd == pytest.approx(E.dlog_E(s), rel=1e-6)


def test_regularizer_rejects_points_outside_domain(sphere):
    with pytest.raises(ValueError):
        Regularizer(sphere, 1).E(0.0)
    with pytest.raises(ValueError):
        Regularizer(sphere, 0)
