import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex.errors import Unmatched
from glvortex.evolve import (PIN_SLACK, Controls, discrete_library, evolve_equilibria,
                             evolve_operator, harvest, integrate, linearized_spectrum, lyapunov,
                             omega_limit)
from glvortex.geometry import make_sphere

N = 256


@pytest.fixture(scope="module")
def setup4():
    s = make_sphere()
    eqs = evolve_equilibria(s, 1, 4.0, N)
    op = evolve_operator(s, 1, N)
    return s, eqs, op, discrete_library(eqs, op)


def test_energy_of_trivial_and_vortex(setup4):
    s, eqs, op, lib = setup4
    assert lyapunov(np.zeros(N), 4.0, s, 1, op) == 0.0
    u0 = next(e for e in lib if e.label == "u0+")
    assert lyapunov(u0.u, 4.0, s, 1, op) < 0.0


def test_discrete_library_matches_shooting(setup4):
    _, eqs, _, lib = setup4
    for e, d in zip(eqs, lib):
        assert d.label == e.label and d.morse_index == e.morse_index
        assert d.defect < 1e-3
    trivial = lib[0]
    assert trivial.eigenvalues[0] == pytest.approx(4.0 - 2.0, rel=1e-3)


def test_equilibrium_is_fixed(setup4):
    _, _, op, lib = setup4
    u0 = next(e for e in lib if e.label == "u0+").u
    trace = integrate(u0, 4.0, 10.0, op, Controls(stop_when_stationary=False))
    assert trace.times[-1] == pytest.approx(10.0)
    assert np.max(np.abs(trace.profiles - u0)) < 1e-7


def test_decay_below_first_bifurcation():
    s = make_sphere()
    op = evolve_operator(s, 1, N)
    u = 0.3 * np.sin(op.nodes)
    trace = integrate(u, 1.0, 1e4, op)
    assert trace.stationary
    assert np.max(np.abs(trace.final)) < 1e-7


def test_small_perturbation_of_trivial_reaches_vortex(setup4):
    _, _, op, lib = setup4
    phi = lib[0].eigenvectors[0]
    sign = np.sign(phi[N // 2])
    trace = integrate(1e-3 * sign * phi, 4.0, 1e4, op)
    label, dist = omega_limit(trace, lib, op)
    assert label == "u0+" and dist < 1e-4
    assert trace.max_energy_increase < 1e-10


def test_unstationary_trace_is_unmatched(setup4):
    _, _, op, lib = setup4
    trace = integrate(1e-3 * lib[0].eigenvectors[0], 4.0, 0.1, op)
    with pytest.raises(Unmatched):
        omega_limit(trace, lib, op)


def test_parity_is_preserved(setup4):
    s = make_sphere()
    op = evolve_operator(s, 1, N)
    vals, vecs = linearized_spectrum(op, np.zeros(N), 8.0, 2)
    odd = vecs[1]
    assert np.allclose(odd, -odd[::-1], atol=1e-10)
    trace = integrate(1e-3 * odd, 8.0, 50.0, op, Controls(stop_when_stationary=False))
    assert np.allclose(trace.final, -trace.final[::-1], atol=1e-14)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=5, deadline=None)
def test_comparison_principle(seed):
    # ordered initial data stay ordered under the flow
    op = evolve_operator(make_sphere(), 1, 128)
    rng = np.random.default_rng(seed)
    u = 0.4 * rng.standard_normal(128)
    v = u + np.abs(rng.standard_normal(128))
    ctl = Controls(stop_when_stationary=False, parity=None)
    tu = integrate(u, 4.0, 2.0, op, ctl)
    tv = integrate(v, 4.0, 2.0, op, ctl)
    assert np.all(tv.final - tu.final > -1e-8)


def test_harvest_at_lambda_4(setup4):
    s, eqs, _, _ = setup4
    report = harvest(eqs, 4.0, s)
    assert report.realized == {("0", "u0+"), ("0", "u0-")}
    assert report.predicted_drop_one == report.realized
    for dep in report.departures:
        assert dep.max_energy_increase < 1e-10
        assert dep.pin_ratio <= 1 + PIN_SLACK
        assert dep.final_sup < 1.0
    js = report.to_json()
    assert all(e["realized"] for e in js["edges"])


def test_trace_rows(setup4):
    _, _, op, lib = setup4
    trace = integrate(lib[1].u, 4.0, 1.0, op, Controls(stop_when_stationary=False, record_dt=0.25))
    rows = list(trace.rows())
    assert len(rows) == len(trace.times) and len(rows[0]) == N + 2
    assert rows[-1][0] == pytest.approx(1.0)
