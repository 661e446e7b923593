import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal
from scipy.special import jn_zeros

from glvortex.discretize import FVOperator, build_mesh, operator
from glvortex.geometry import make_disk, make_sphere


def smallest(op, count=3):
    w = 1 / np.sqrt(op.V)
    return eigh_tridiagonal(op.diag * w * w, op.off * w[:-1] * w[1:], eigvals_only=True,
                            select="i", select_range=(0, count - 1), tol=1e-14)


def test_mesh_is_graded_and_symmetric(sphere, disk):
    nodes = build_mesh(sphere, 512)
    assert np.allclose(nodes + nodes[::-1], np.pi, atol=1e-14)
    assert nodes[0] == pytest.approx(1e-3 * np.pi)
    assert np.all(np.diff(nodes) > 0)
    h = np.diff(build_mesh(disk, 512))
    assert h[0] < h[-1]
    with pytest.raises(ValueError):
        build_mesh(sphere, 511)


def test_stiffness_is_symmetric_positive(sphere):
    op = operator(sphere, 1, 256)
    K = op.K_sparse().toarray()
    assert np.allclose(K, K.T)
    assert np.linalg.eigvalsh(K).min() > 0


def test_dirichlet_end_is_eliminated(disk):
    op = operator(disk, 1, 256)
    assert op.size == 255 and not op.free[-1]
    assert op.extend(np.ones(op.size))[-1] == 0.0


@pytest.mark.parametrize("surface, exact, bound", [
    (make_sphere(), np.array([2.0, 6.0, 12.0]), 2e-5),
    (make_disk(), jn_zeros(1, 3) ** 2, 5e-5),
])
def test_second_order_convergence(surface, exact, bound):
    errs = [np.abs(smallest(operator(surface, 1, n)) - exact) / exact for n in (512, 1024, 2048)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)
    assert errs[-1].max() < bound


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_residual_is_minus_energy_gradient(seed):
    op = operator(make_sphere(), 1, 256)
    rng = np.random.default_rng(seed)
    u = 0.8 * rng.standard_normal(op.size)
    v = rng.standard_normal(op.size)
    lam, h = 7.0, 1e-6
    fd = (op.energy(u + h * v, lam) - op.energy(u - h * v, lam)) / (2 * h)
    assert fd == pytest.approx(-op.residual(u, lam) @ v, rel=1e-6, abs=1e-8)


def test_banded_solve_matches_dense(disk):
    op = operator(disk, 2, 256)
    shift = np.linspace(0.1, 1.0, op.size)
    rhs = np.sin(np.arange(op.size))
    dense = op.K_sparse().toarray() + np.diag(shift)
    assert np.allclose(op.solve(shift, rhs), np.linalg.solve(dense, rhs))


def test_robin_term_enters_last_diagonal():
    plain = FVOperator.build(make_disk((0.0, 1.0)), 1, build_mesh(make_disk((0.0, 1.0)), 256))
    robin = FVOperator.build(make_disk((2.0, 1.0)), 1, plain.nodes)
    assert robin.diag[-1] - plain.diag[-1] == pytest.approx(2.0)
    assert np.array_equal(robin.diag[:-1], plain.diag[:-1])
