import numpy as np
import pytest
from scipy.special import jn_zeros, jnp_zeros

from glvortex.discretize import build_mesh
from glvortex.errors import ZeroEigenvalueSuspected
from glvortex.geometry import make_disk, make_sphere
from glvortex.sturm import (EigenProblem, bifurcation_points, count_unstable, eigenvalues,
                            spectrum)


def test_sphere_m1_spectrum():
    # [DERIVED] spherical harmonics: l (l + 1) with l >= m
    lam = bifurcation_points(make_sphere(), 1, 6).lambdas
    want = np.array([(k + 1) * (k + 2) for k in range(6)], dtype=float)
    assert np.allclose(lam, want, rtol=1e-8)


def test_sphere_m2_spectrum(sphere):
    lam = bifurcation_points(sphere, 2, 4).lambdas
    assert np.allclose(lam, [6.0, 12.0, 20.0, 30.0], rtol=1e-8)


@pytest.mark.parametrize("m", [1, 2])
def test_disk_dirichlet_bessel_zeros(m):
    # [DERIVED] Dirichlet: lambda_k = j_{m,k+1}**2 (scipy.special as the oracle)
    lam = bifurcation_points(make_disk((1.0, 0.0)), m, 4).lambdas
    assert np.allclose(lam, jn_zeros(m, 4) ** 2, rtol=1e-6)


@pytest.mark.parametrize("m", [1, 2])
def test_disk_neumann_bessel_derivative_zeros(m):
    lam = bifurcation_points(make_disk((0.0, 1.0)), m, 4).lambdas
    assert np.allclose(lam, jnp_zeros(m, 4) ** 2, rtol=1e-6)


def test_robin_eigenvalues_between_neumann_and_dirichlet():
    dirichlet = bifurcation_points(make_disk((1.0, 0.0)), 1, 3).lambdas
    neumann = bifurcation_points(make_disk((0.0, 1.0)), 1, 3).lambdas
    robin = bifurcation_points(make_disk((1.0, 1.0)), 1, 3).lambdas
    assert np.all(neumann < robin) and np.all(robin < dirichlet)


def test_constant_potential_shifts_spectrum(sphere):
    base = eigenvalues(EigenProblem.constant(sphere, 1, 0.0), 3)
    shifted = eigenvalues(EigenProblem.constant(sphere, 1, 5.0), 3)
    assert np.allclose(shifted - base, 5.0, atol=1e-9)


def test_eigenfunction_oscillation_counts(sphere, disk):
    for surf in (sphere, disk):
        result = spectrum(EigenProblem.constant(surf, 1, 0.0), 4, build_mesh(surf, 512))
        assert result.oscillations == [0, 1, 2, 3]
        w = np.gradient(result.nodes) * surf.a(result.nodes)
        gram = (result.eigenfunctions * w) @ result.eigenfunctions.T
        assert np.allclose(gram, np.eye(4), atol=2e-3)


def test_count_unstable_on_trivial_equilibrium(sphere):
    # q = lam: eigenvalues lam - lambda_k; positive ones are those with lambda_k < lam
    assert count_unstable(EigenProblem.constant(sphere, 1, 7.0)) == 2
    assert count_unstable(EigenProblem.constant(sphere, 1, 1.0)) == 0
    res = count_unstable(EigenProblem.constant(sphere, 1, 4.0))
    assert res.count == 1 and res.nearest == pytest.approx(2.0, rel=1e-9)


def test_zero_eigenvalue_is_refused_at_bifurcation_point(sphere):
    with pytest.raises(ZeroEigenvalueSuspected) as info:
        count_unstable(EigenProblem.constant(sphere, 1, 6.0))
    assert info.value.nearest < 1e-6


def test_nonsymmetric_potential_on_closed_surface(sphere):
    # q(s) = c s has no reflection symmetry; Rayleigh bounds bracket the top eigenvalue
    problem = EigenProblem(sphere, 1, lambda s: 0.5 * s, (0.0, 0.5 * np.pi), symmetric=False)
    mu0 = eigenvalues(problem, 1)[0]
    assert -2.0 < mu0 < -2.0 + 0.5 * np.pi
