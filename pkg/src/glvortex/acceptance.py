"""The acceptance suite: fourteen end-to-end checks at their stated tolerances.

Each check returns a :class:`Outcome`; nothing here loosens a tolerance to
make a check pass.  Expensive intermediate results (equilibrium lists,
harvests) are cached so that related checks share them.
"""
from __future__ import annotations

import dataclasses
import functools
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import jn_zeros, jnp_zeros

from .attractor import connection_graph, is_chafee_infante
from .discretize import build_mesh
from .equilibria import solve_all
from .errors import (MonotonicityViolation, TangencySuspected, TheoremContradiction,
                     VortexError)
from .evolve import evolve_equilibria, harvest
from .geometry import make_disk, make_sphere
from .settings import current, use_settings
from .shooting import find_equilibrium_roots, monotonicity_report, section, transversality_margin
from .spiral import SpiralProblem, kernel_dimension_check, sweep
from .sturm import bifurcation_points

SPHERE_LAMBDAS = (4.0, 8.0, 13.0)
DISK_LAMBDAS = (30.0, 60.0)
SPIRAL_TARGET = (0.05, 0.02)


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    contradiction: bool = False

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.1f} s)"


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) / np.abs(b)


@functools.lru_cache(maxsize=None)
def _sphere():
    return make_sphere()


@functools.lru_cache(maxsize=None)
def _disk(robin=(1.0, 0.0)):
    return make_disk(robin)


@functools.lru_cache(maxsize=None)
def equilibria(kind: str, lam: float, mesh: int = 2048) -> tuple:
    surface = _sphere() if kind == "sphere" else _disk()
    return tuple(solve_all(surface, 1, lam, nodes=build_mesh(surface, mesh)))


def _instances():
    return [("sphere", x) for x in SPHERE_LAMBDAS] + [("disk", x) for x in DISK_LAMBDAS]


@functools.lru_cache(maxsize=None)
def _harvest(lam: float):
    eqs = evolve_equilibria(_sphere(), 1, lam)
    return harvest(eqs, lam, _sphere(), keep_traces=True)


# -- criteria ----------------------------------------------------------------------

def sphere_eigenvalues():
    lam1 = bifurcation_points(_sphere(), 1, 6).lambdas
    want1 = np.array([(k + 1) * (k + 2) for k in range(6)], dtype=float)
    lam2 = bifurcation_points(_sphere(), 2, 6).lambdas
    want2 = np.array([l * (l + 1) for l in range(2, 8)], dtype=float)
    err = max(_rel(lam1, want1).max(), _rel(lam2, want2).max())
    return err <= 1e-8, f"max relative error {err:.2e} (tolerance 1e-8)"


def disk_eigenvalues():
    worst = 0.0
    for m in (1, 2):
        dirichlet = bifurcation_points(_disk((1.0, 0.0)), m, 4).lambdas
        neumann = bifurcation_points(_disk((0.0, 1.0)), m, 4).lambdas
        worst = max(worst, _rel(dirichlet, jn_zeros(m, 4) ** 2).max(),
                    _rel(neumann, jnp_zeros(m, 4) ** 2).max())
    return worst <= 1e-6, f"max relative error {worst:.2e} against Bessel zeros (tolerance 1e-6)"


def _k_for(kind, lam):
    surface = _sphere() if kind == "sphere" else _disk()
    lambdas = bifurcation_points(surface, 1, 4).lambdas
    return int(np.searchsorted(lambdas, lam)) - 1


def equilibrium_count():
    parts, ok = [], True
    for kind, lam in _instances():
        k = _k_for(kind, lam)
        n = sum(not e.trivial for e in equilibria(kind, lam))
        ok &= n == 2 * k + 2
        parts.append(f"{kind} {lam:g}: {n}/{2 * k + 2}")
    return ok, ", ".join(parts)


def index_identities():
    bad = []
    for kind, lam in _instances():
        k = _k_for(kind, lam)
        for e in equilibria(kind, lam):
            if e.trivial:
                good = e.morse_index == k + 1
            else:
                good = e.morse_index == e.zero_number == e.branch[0]
            if not good:
                bad.append(f"{kind} {lam:g} {e.label}")
    n = sum(len(equilibria(*x)) for x in _instances())
    return not bad, f"{n} equilibria checked" + (f"; failing {bad}" if bad else "")


def a_priori_bound():
    sup = max(e.sup_norm for x in _instances() for e in equilibria(*x))
    return sup <= 1 + 1e-8, f"largest sup|u| = {sup:.6f}"


def _section_point(kind):
    surface = _sphere() if kind == "sphere" else _disk()
    return surface, (surface.midpoint if surface.boundary_empty else surface.s_star)


def monotonicity():
    parts, ok = [], True
    for kind, lam in (("sphere", 4.0), ("disk", 30.0)):
        surface, s_hat = _section_point(kind)
        d_lam = find_equilibrium_roots(surface, 1, lam)[0].d
        grid = d_lam * np.arange(1, 51) / 51.0
        curve = section(surface, 1, lam, grid, s_hat)
        try:
            rep = monotonicity_report(curve, d_lam)
            parts.append(f"{kind} {lam:g}: monotone (min mu drop {rep.min_mu_drop:.2e}, "
                         f"min rho gain {rep.min_rho_gain:.2e})")
        except MonotonicityViolation as exc:
            ok = False
            parts.append(f"{kind} {lam:g}: {exc}")
    return ok, "; ".join(parts)


def hyperbolicity():
    gap = current().zero_gap
    bad = []
    for kind, lam in _instances():
        for e in equilibria(kind, lam):
            certified = e.eigen_gap > gap
            transversal = e.trivial or (e.margin is not None and e.margin > 0)
            if certified != transversal or not certified:
                bad.append(f"{kind} {lam:g} {e.label}")
    lam0 = float(bifurcation_points(_sphere(), 1, 1).lambdas[0])
    try:
        margin = transversality_margin(_sphere(), 1, lam0, 0.0, "even")
        tangency = f"no tangency flagged at lambda_0 (margin {margin:.2e})"
        ok_tan = False
    except TangencySuspected as exc:
        tangency = f"tangency flagged at lambda_0 (margin {exc.margin:.1e})"
        ok_tan = True
    return (not bad and ok_tan), ("margins and eigenvalue gaps agree" if not bad
                                  else f"disagreement at {bad}") + f"; {tangency}"


def attractor_graphs():
    parts, ok = [], True
    for k, lam in enumerate(SPHERE_LAMBDAS):
        g = connection_graph(list(equilibria("sphere", lam)), _sphere().ident)
        good = is_chafee_infante(g, k)
        ok &= good
        parts.append(f"lambda {lam:g}: {len(g.nodes)} nodes, {len(g.edges)} edges"
                     f"{'' if good else ' (not Chafee-Infante)'}")
    return ok, "; ".join(parts)


def heteroclinic_harvest():
    parts, ok = [], True
    for lam in (4.0, 8.0):
        rep, _ = _harvest(lam)
        worst = max(d.distance for d in rep.departures)
        ok &= worst < 1e-4 and rep.predicted_drop_one <= rep.realized
        parts.append(f"lambda {lam:g}: {len(rep.predicted_drop_one)} index-drop-one edges realized, "
                     f"{len(rep.realized)} realized in all, worst match {worst:.1e}")
    return ok, "; ".join(parts)


def spiral_diagonal():
    surface = _sphere()
    eqs = equilibria("sphere", 4.0)
    path = [(0.0, 0.0)] + [(x, x) for x in np.linspace(0.02, 0.1, 5)]
    worst_omega = worst_imag = 0.0
    for src in eqs[1:3]:
        res = sweep(src, surface, path)
        for w in res.waves:
            worst_omega = max(worst_omega, abs(w.omega - w.eta))
            worst_imag = max(worst_imag, float(np.max(np.abs(w.uI))))
        if abs(res.waves[-1].eta - 0.1) > 0:
            return False, "sweep did not reach eta = beta = 0.1"
    ok = worst_omega < 1e-7 and worst_imag < 1e-8
    return ok, f"max |Omega - eta| = {worst_omega:.1e}, max |u_I| = {worst_imag:.1e}"


@functools.lru_cache(maxsize=None)
def _spiral_runs(lam: float, mesh: int = 2048):
    surface = _sphere()
    eqs = equilibria("sphere", lam, mesh)
    path = [(0.0, 0.0)] + [(SPIRAL_TARGET[0] * t, SPIRAL_TARGET[1] * t) for t in (0.25, 0.5, 0.75, 1.0)]
    return {src.label: sweep(src, surface, path) for src in eqs if not src.trivial}


def spiral_existence():
    parts, ok = [], True
    for lam in (4.0, 8.0):
        runs = _spiral_runs(lam)
        finals = [r.waves[-1] for r in runs.values()]
        res = max(w.residual_norm for w in finals)
        start = max(abs(r.waves[0].omega) for r in runs.values())
        reached = all((w.eta, w.beta) == SPIRAL_TARGET for w in finals)
        rotating = all(w.omega != 0 and np.max(np.abs(w.uI)) > 1e-6 for w in finals)
        jump = max(r.omega_jump_constant for r in runs.values())
        profiles = [np.concatenate([w.uR, w.uI]) for w in finals]
        distinct = all(np.max(np.abs(a - b)) > 1e-3 for i, a in enumerate(profiles)
                       for b in profiles[i + 1:])
        good = reached and res < 1e-10 and start == 0.0 and rotating and distinct and jump < 10.0
        ok &= good
        parts.append(f"lambda {lam:g}: {len(finals)} waves, residual <= {res:.1e}, "
                     f"Omega(0,0) = {start:g}, |dOmega|/|step| <= {jump:.3f}")
    return ok, "; ".join(parts)


def kernel_conditions():
    dims = []
    for lam in (4.0, 8.0):
        for src in equilibria("sphere", lam):
            if src.trivial:
                continue
            out = kernel_dimension_check(SpiralProblem(src, _sphere()))
            dims.append((out["unbordered"], out["bordered"], out["second_unbordered"]))
    ok = all(u == 1 and b == 0 for u, b, _ in dims)
    gap = min(g for _, _, g in dims)
    return ok, f"{len(dims)} sources with kernel dimensions (1, 0); smallest nonzero singular value {gap:.2e}"


def lyapunov_monotonicity():
    worst, n = 0.0, 0
    for lam in (4.0, 8.0):
        _, traces = _harvest(lam)
        n += len(traces)
        worst = max(worst, max(t.max_energy_increase for t in traces))
    return worst <= 1e-8, f"{n} traces, largest per-step energy increase {worst:.1e}"


def mesh_convergence():
    parts, ok = [], True
    lam_err = 0.0
    for n in (2048, 4096):
        with use_settings(_with_mesh(n)):
            points = bifurcation_points(_sphere(), 1, 4, with_functions=True)
        if n == 2048:
            ref = points.lambdas
        else:
            lam_err = float(_rel(points.lambdas, ref).max())
    ok &= lam_err < 4e-8
    parts.append(f"lambda_k relative change {lam_err:.1e} (limit 4e-8)")
    d_err = 0.0
    for kind, lam in _instances():
        a = [e.d for e in equilibria(kind, lam, 2048)]
        b = [e.d for e in equilibria(kind, lam, 4096)]
        d_err = max(d_err, float(np.max(np.abs(np.subtract(a, b)))))
    ok &= d_err < 4e-12
    parts.append(f"d-root change {d_err:.1e} (limit 4e-12)")
    om_err = 0.0
    for lam in (4.0, 8.0):
        coarse, fine = _spiral_runs(lam, 2048), _spiral_runs(lam, 4096)
        for label in coarse:
            om_err = max(om_err, max(abs(a.omega - b.omega) for a, b in
                                     zip(coarse[label].waves, fine[label].waves)))
    ok &= om_err < 4e-7
    parts.append(f"Omega change {om_err:.1e} (limit 4e-7)")
    return ok, "; ".join(parts)


def _with_mesh(n):
    return dataclasses.replace(current(), mesh_size=n)


CRITERIA = [
    (1, "sphere eigenvalues", sphere_eigenvalues),
    (2, "disk eigenvalues", disk_eigenvalues),
    (3, "equilibrium count", equilibrium_count),
    (4, "index identities", index_identities),
    (5, "a-priori bound", a_priori_bound),
    (6, "shooting-curve monotonicity", monotonicity),
    (7, "hyperbolicity double entry", hyperbolicity),
    (8, "attractor graphs", attractor_graphs),
    (9, "heteroclinic harvest", heteroclinic_harvest),
    (10, "spiral diagonal identity", spiral_diagonal),
    (11, "spiral existence", spiral_existence),
    (12, "kernel conditions", kernel_conditions),
    (13, "Lyapunov monotonicity", lyapunov_monotonicity),
    (14, "mesh convergence", mesh_convergence),
]


def run_one(number: int) -> Outcome:
    _, title, check = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        passed, detail = check()
        contradiction = False
    except TheoremContradiction as exc:
        passed, detail, contradiction = False, f"{type(exc).__name__}: {exc}", True
    except VortexError as exc:
        passed, detail, contradiction = False, f"{type(exc).__name__}: {exc}", False
    return Outcome(number, title, bool(passed), detail, time.perf_counter() - t0, contradiction)


def run_all(numbers=None, echo=print) -> list:
    out = []
    for number, _, _ in CRITERIA:
        if numbers is None or number in numbers:
            res = run_one(number)
            if echo is not None:
                echo(res.line())
            out.append(res)
    return out
