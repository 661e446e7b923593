import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex.errors import DimensionMismatch
from glvortex.spiral import (SpiralProblem, from_equilibrium, kernel_dimension_check,
                             newton_solve, residual, sweep)


@pytest.fixture(scope="module")
def source(eq_sphere):
    return next(e for e in eq_sphere(4.0, 1024) if e.label == "u0+")


@pytest.fixture(scope="module")
def problem(source, sphere):
    return SpiralProblem(source, sphere)


def test_trivial_source_is_rejected(eq_sphere, sphere):
    with pytest.raises(ValueError):
        SpiralProblem(eq_sphere(4.0, 1024)[0], sphere)


@pytest.mark.parametrize("c", [0.0, 0.05, -0.3, 1.0])
def test_diagonal_wave_is_rotating_vortex(problem, c):
    # eta = beta: the real vortex rotates rigidly with Omega = eta
    base = newton_solve(problem, from_equilibrium(problem.source), 0.0, 0.0)
    wave = newton_solve(problem, base, c, c)
    assert wave.omega == pytest.approx(c, abs=1e-10)
    assert np.max(np.abs(wave.uI)) < 1e-10
    assert np.allclose(wave.uR, base.uR, atol=1e-10)
    assert wave.kind == "vortex"


def test_zero_length_path(source, sphere):
    res = sweep(source, sphere, [(0.0, 0.0)])
    assert len(res.waves) == 1 and res.waves[0].omega == 0.0
    assert res.omega_jump_constant == 0.0


def test_sweep_off_diagonal(source, sphere):
    res = sweep(source, sphere, [(0.0, 0.0), (0.05, 0.02)])
    last = res.waves[-1]
    assert (last.eta, last.beta) == (0.05, 0.02)
    assert last.kind == "spiral" and last.residual_norm < 1e-10
    assert abs(last.phase) < 1e-12
    assert np.max(np.abs(last.uI)) > 1e-6


def test_sweep_must_start_at_origin(source, sphere):
    with pytest.raises(ValueError):
        sweep(source, sphere, [(0.1, 0.0)])


def test_kernel_dimensions(problem):
    out = kernel_dimension_check(problem)
    assert (out["unbordered"], out["bordered"]) == (1, 0)
    assert out["smallest_unbordered"] < out["threshold"] < out["second_unbordered"]


def test_kernel_check_flags_missing_phase_condition(problem, monkeypatch):
    # an identically zero border row leaves the gauge direction unresolved
    import glvortex.spiral as spiral
    orig = spiral._energy_scaled

    def no_border(p):
        A_R, A_I, col, row = orig(p)
        return A_R, A_I, col, 0.0 * row

    monkeypatch.setattr(spiral, "_energy_scaled", no_border)
    with pytest.raises(DimensionMismatch):
        kernel_dimension_check(problem, polish=False)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_jacobian_matches_finite_differences(seed):
    prob = _small_problem()
    rng = np.random.default_rng(seed)
    n = prob.n
    uR, uI = 0.5 * rng.standard_normal(n), 0.5 * rng.standard_normal(n)
    omega, eta, beta = rng.uniform(-0.5, 0.5, 3)
    J = prob.jacobian(uR, uI, omega, eta, beta).toarray()
    dx = rng.standard_normal(2 * n + 1)
    h = 1e-6

    def F(x):
        RR, RI, ph = prob.residual(uR + x[:n], uI + x[n:2 * n], omega + x[-1], eta, beta)
        return np.concatenate([RR, RI, [ph]])

    fd = (F(h * dx) - F(-h * dx)) / (2 * h)
    assert np.allclose(fd, J @ dx, rtol=1e-6, atol=1e-6 * np.abs(fd).max())


_cache = {}


def _small_problem():
    if "p" not in _cache:
        from glvortex.discretize import build_mesh
        from glvortex.equilibria import solve_all
        from glvortex.geometry import make_sphere
        s = make_sphere()
        src = solve_all(s, 1, 4.0, nodes=build_mesh(s, 256))[1]
        _cache["p"] = SpiralProblem(src, s)
    return _cache["p"]


@given(st.floats(-np.pi, np.pi), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
@settings(max_examples=25, deadline=None)
def test_gauge_covariance(c, eta, beta):
    prob = _small_problem()
    rng = np.random.default_rng(0)
    uR, uI = rng.standard_normal(prob.n), rng.standard_normal(prob.n)
    RR, RI, _ = prob.residual(uR, uI, 0.2, eta, beta)
    cs, sn = np.cos(c), np.sin(c)
    RR2, RI2, _ = prob.residual(cs * uR - sn * uI, sn * uR + cs * uI, 0.2, eta, beta)
    scale = np.abs(RR).max() + np.abs(RI).max()
    assert np.allclose(RR2, cs * RR - sn * RI, atol=1e-12 * scale)
    assert np.allclose(RI2, sn * RR + cs * RI, atol=1e-12 * scale)


def test_module_residual_agrees_with_problem():
    prob = _small_problem()
    rng = np.random.default_rng(3)
    uR, uI = rng.standard_normal(prob.n), rng.standard_normal(prob.n)
    R, ph = residual((uR, uI), 0.1, 0.2, 0.3, prob.lam, None, 1, template=prob.u_ref, op=prob.op)
    RR, RI, ph2 = prob.residual(uR, uI, 0.1, 0.2, 0.3)
    assert np.array_equal(R, np.concatenate([RR, RI])) and ph == ph2


def test_real_block_is_equilibrium_linearization():
    # at a real profile with Omega = eta = beta = 0 the RR block is -K + lam V (1 - 3 u**2)
    prob = _small_problem()
    u = prob.u_ref
    J = prob.jacobian(u, 0 * u, 0.0, 0.0, 0.0, bordered=False).toarray()
    n = prob.n
    want = -prob.K.toarray() + np.diag(prob.lam * prob.op.V * (1 - 3 * u * u))
    assert np.allclose(J[:n, :n], want)
    assert np.allclose(J[:n, n:], 0) and np.allclose(J[n:, :n], 0)
