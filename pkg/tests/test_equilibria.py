import numpy as np
import pytest
from hypothesis import given, strategies as st

from glvortex.discretize import build_mesh
from glvortex.equilibria import (branch_index, diagram, morse_index, solve_all, zero_number)
from glvortex.errors import LambdaTooClose, UnresolvedZero
from glvortex.geometry import make_disk


def test_only_trivial_below_first_bifurcation(eq_sphere):
    eqs = eq_sphere(1.0, 512)
    assert [e.label for e in eqs] == ["0"]
    assert eqs[0].morse_index == 0


@pytest.mark.parametrize("lam, k", [(4.0, 0), (8.0, 1), (13.0, 2)])
def test_sphere_equilibria_labels_and_certificates(eq_sphere, lam, k):
    eqs = eq_sphere(lam)
    labels = [e.label for e in eqs]
    assert labels[0] == "0" and eqs[0].morse_index == k + 1
    assert sorted(labels[1:]) == sorted(f"u{j}{s}" for j in range(k + 1) for s in "+-")
    for e in eqs[1:]:
        j = e.branch[0]
        assert e.zero_number == e.morse_index == j
        assert e.sup_norm < 1.0
        assert e.ode_residual < 1e-6
        assert e.parity == ("even" if j % 2 == 0 else "odd")
        assert e.margin > 1e-8 and e.eigen_gap > 1e-6


def test_negated_partner_and_ordering(eq_sphere):
    eqs = eq_sphere(13.0)
    plus = {e.label: e for e in eqs if e.label.endswith("+")}
    for label, e in plus.items():
        minus = next(x for x in eqs if x.label == label[:-1] + "-")
        assert np.array_equal(minus.u, -e.u) and minus.d == -e.d
    d = [plus[f"u{j}+"].d for j in range(3)]
    assert d[0] > d[1] > d[2] > 0


def test_equilibrium_profiles_are_symmetric(eq_sphere):
    for e in eq_sphere(8.0)[1:]:
        sgn = 1 if e.parity == "even" else -1
        assert np.allclose(e.u[::-1], sgn * e.u, atol=1e-12)


def test_disk_equilibria():
    disk = make_disk()
    eqs = solve_all(disk, 1, 60.0, nodes=build_mesh(disk, 1024))
    assert len(eqs) == 5
    for e in eqs[1:]:
        assert e.zero_number == e.morse_index == e.branch[0]
        assert abs(e.u[-1]) < 1e-8


def test_trivial_index_matches_eigenvalue_count(sphere):
    assert morse_index(sphere, 1, 4.0, 0.958734721299686).count == 0


@pytest.mark.parametrize("profile, count", [
    ([0, 1, 2, 1, 0], 0),
    ([0, 1, -1, 1, 0], 2),
    ([0, 1, 1e-12, -1, 0], 1),
    ([0, -1, -2, 3, 4, 0], 1),
])
def test_zero_number_examples(profile, count):
    assert zero_number(profile) == count


def test_zero_number_refuses_touching_profile():
    with pytest.raises(UnresolvedZero):
        zero_number([0, 1, 1e-12, 1, 0])


@given(st.lists(st.floats(-10, 10).filter(lambda x: abs(x) > 1e-6), min_size=3, max_size=40))
def test_zero_number_counts_sign_changes(values):
    v = np.array([0.0] + values + [0.0])
    assert zero_number(v) == np.count_nonzero(np.diff(np.sign(values)))


def test_lambda_too_close_to_bifurcation_point():
    lams = np.array([2.0, 6.0, 12.0])
    assert branch_index(7.0, lams) == 1
    assert branch_index(1.0, lams) == -1
    with pytest.raises(LambdaTooClose):
        branch_index(6.0 + 1e-8, lams)


def test_small_diagram(sphere):
    dia = diagram(sphere, 1, (3.0, 9.0), 7, mesh=256)
    assert sorted(dia.branches) == ["0+", "0-", "1+", "1-"]
    assert [p["lambda"] for p in dia.branches["1+"]] == [7.0, 8.0, 9.0]
    assert dia.refused == [6.0]
    sup = [p["sup_norm"] for p in dia.branches["0+"]]
    assert np.all(np.diff(sup) > 0)
    assert dia.onsets["1+"]["bifurcation_point"] == pytest.approx(6.0, rel=1e-8)
    assert np.allclose(dia.bifurcation_points, [2.0, 6.0], rtol=1e-8)
