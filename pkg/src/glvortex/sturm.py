"""Singular Sturm-Liouville problems in the m-armed subspace.

Eigenpairs of ``L y = (a y')'/a - m**2 y/a**2 + q y`` are counted with the
Pruefer angle ``theta = atan2(y, a y')``, which obeys

    dtheta/ds = (cos(theta)**2 + (a**2 (q - mu) - m**2) sin(theta)**2) / a

and starts at ``arctan(1/m)`` on the regular branch ``y ~ s**m``.  The
angle only increases through multiples of pi, so the number of
eigenvalues above ``mu`` is read off from the angle at the far end (or the
sum of the two half-angles on a closed surface).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import illinois, sign_changes
from .errors import NonConvergence, StepFailure, ZeroEigenvalueSuspected
from .geometry import Regularizer, Surface
from .settings import current

PRUEFER_CUTOFF = 1e-5  # launch point as a fraction of s_star
MU_WINDOW = 1e7


@dataclass
class EigenProblem:
    """Eigenproblem for ``L`` with potential ``q`` on a surface.

    ``potential`` maps a scalar ``s`` to ``q(s)``.  ``q_range`` bounds the
    potential; ``symmetric`` says ``q(s) = q(s_star - s)`` on closed surfaces.
    """

    surface: Surface
    m: int
    potential: Callable[[float], float]
    q_range: tuple
    symmetric: bool = True

    @classmethod
    def constant(cls, surface: Surface, m: int, value: float) -> "EigenProblem":
        value = float(value)
        return cls(surface, m, lambda s: value, (value, value), True)


@dataclass
class Spectrum:
    """Eigenvalues in decreasing order (``mu``) with eigenfunction zero counts.

    For the bifurcation problem ``lambdas`` lists ``-mu`` increasingly.
    """

    mu: np.ndarray
    oscillations: list
    eigenfunctions: Optional[np.ndarray] = None
    nodes: Optional[np.ndarray] = None
    lambdas: Optional[np.ndarray] = None


@dataclass
class UnstableCount:
    count: int
    gap: float
    nearest: float = field(default=np.inf)

    def __int__(self):
        return self.count

    def __eq__(self, other):
        if isinstance(other, int):
            return self.count == other
        return NotImplemented


class _Pruefer:
    def __init__(self, problem: EigenProblem):
        self.p = problem
        surf = problem.surface
        self.s0 = PRUEFER_CUTOFF * surf.s_star
        self.theta0 = float(np.arctan(1.0 / problem.m))
        self.end = surf.midpoint if surf.boundary_empty else surf.s_star
        if not surf.boundary_empty:
            a1, a2 = surf.robin
            if a1 < 0 or a2 < 0:
                a1, a2 = -a1, -a2
            self.theta_b = np.pi if a2 == 0 else float(np.arctan2(a2, -a1 * surf.a(surf.s_star)))

    def _angles(self, mu, reflected: bool):
        cfg = current()
        surf, m = self.p.surface, self.p.m
        q = self.p.potential
        s_star = surf.s_star
        a_of = surf.a if surf.kind == "custom" else (np.sin if surf.kind == "sphere" else (lambda s: s))

        def f(s, th):
            a = float(a_of(s))
            qs = q(s_star - s) if reflected else q(s)
            c = a * a * (qs - mu) - m * m
            sn = np.sin(th)
            cs = np.cos(th)
            return (cs * cs + c * sn * sn) / a

        sol = solve_ivp(f, (self.s0, self.end), np.full(mu.shape, self.theta0), method="DOP853",
                        rtol=cfg.rtol, atol=1e-12)
        if sol.status != 0:
            raise StepFailure(f"Pruefer integration failed: {sol.message}")
        return sol.y[:, -1]

    def mismatch(self, mu):
        """``D(mu)``; eigenvalue ``j`` solves ``D = j pi`` and ``D`` decreases in ``mu``."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        left = self._angles(mu, False)
        if not self.p.surface.boundary_empty:
            return left - self.theta_b
        right = left if self.p.symmetric else self._angles(mu, True)
        return left + right - np.pi

    def count(self, mu):
        """Number of eigenvalues strictly above each ``mu``."""
        D = self.mismatch(mu)
        return np.maximum(0, np.ceil(D / np.pi - 1e-12)).astype(int)


def _bracket_low(pr: _Pruefer, K: int) -> float:
    qmin, qmax = pr.p.q_range
    step = 10.0
    while True:
        low = qmin - step
        if pr.count([low])[0] >= K:
            return low
        step *= 4.0
        if step > MU_WINDOW:
            raise NonConvergence(f"could not bracket {K} eigenvalues within the mu window")


def _isolate(pr: _Pruefer, js, lo, hi, clo, chi):
    """Bisect on the count until bracket ``j`` holds only eigenvalue ``j``."""
    js = np.asarray(js)
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    clo, chi = np.array(clo), np.array(chi)
    for _ in range(200):
        need = (clo != js + 1) | (chi != js)
        if not need.any():
            return lo, hi
        idx = np.nonzero(need)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        cm = pr.count(mid)
        above = cm >= js[idx] + 1  # eigenvalue j still above mid
        lo[idx] = np.where(above, mid, lo[idx])
        clo[idx] = np.where(above, cm, clo[idx])
        hi[idx] = np.where(above, hi[idx], mid)
        chi[idx] = np.where(above, chi[idx], cm)
        if np.any(hi - lo <= 1e-14 * np.maximum(1.0, np.abs(lo))):
            raise NonConvergence("eigenvalues not separable by bisection")
    raise NonConvergence("bisection on the eigenvalue count did not converge")


def _refine(pr: _Pruefer, js, lo, hi):
    """Solve ``D(mu) = j pi`` inside each isolating bracket."""
    js = np.asarray(js, dtype=float)

    def f(mu, idx):
        return pr.mismatch(mu) - js[idx] * np.pi

    every = np.arange(len(js))
    flo, fhi = f(np.asarray(lo, dtype=float), every), f(np.asarray(hi, dtype=float), every)
    # a bisection point can land on an eigenvalue up to rounding; take it as is
    on_end = np.sign(flo) * np.sign(fhi) > 0
    x = np.where(np.abs(flo) < np.abs(fhi), lo, hi).astype(float)
    todo = np.nonzero(~on_end)[0]
    if todo.size:
        x[todo], _ = illinois(lambda mu, idx: f(mu, todo[idx]), np.asarray(lo)[todo],
                              np.asarray(hi)[todo], flo[todo], fhi[todo],
                              xtol=current().eig_xtol, indexed=True)
    return x


def eigenvalues(problem: EigenProblem, count: int) -> np.ndarray:
    """The ``count`` largest eigenvalues ``mu_0 > mu_1 > ...``."""
    if count < 1:
        raise ValueError("need at least one eigenvalue")
    pr = _Pruefer(problem)
    low = _bracket_low(pr, count)
    high = problem.q_range[1]
    js = np.arange(count)
    lo, hi = _isolate(pr, js, np.full(count, low), np.full(count, high),
                      np.full(count, pr.count([low])[0]), np.zeros(count, dtype=int))
    return _refine(pr, js, lo, hi)


def eigenfunction(problem: EigenProblem, mu: float, nodes: np.ndarray) -> np.ndarray:
    """Eigenfunction at ``mu`` sampled on ``nodes``, unit weighted-L2 norm.

    Integrates the regularized pair ``(Y, P)`` with ``y = Y E`` from the
    vortex (both vortices on a closed surface, matched at the midpoint).
    """
    cfg = current()
    surf, m = problem.surface, problem.m
    reg = Regularizer(surf, m)
    s0 = PRUEFER_CUTOFF * surf.s_star
    q = problem.potential
    end = surf.midpoint if surf.boundary_empty else surf.s_star
    nodes = np.asarray(nodes, dtype=float)

    def run(reflected):
        def f(s, y):
            a = float(surf.a(s))
            qs = q(surf.s_star - s) if reflected else q(s)
            return [y[1] / a, (-a * a * (qs - mu) * y[0] - 2.0 * m * y[1]) / a]
        sol = solve_ivp(f, (s0, end), [1.0, 0.0], method="DOP853", rtol=cfg.rtol,
                        atol=cfg.atol, dense_output=True)
        if sol.status != 0:
            raise StepFailure(sol.message)
        return sol

    def values(sol, s):
        Y, P = sol.sol(s)
        return Y * reg.E(s), (P + m * Y) * reg.E(s)  # y and its flux a y'

    y = np.empty_like(nodes)
    left_sol = run(False)
    if surf.boundary_empty:
        right_sol = run(True)
        yl, fl = values(left_sol, np.array([end]))
        yr, fr = values(right_sol, np.array([end]))
        # match y (or the flux when y vanishes at the midpoint)
        scale = yl[0] / yr[0] if abs(yl[0]) >= abs(fl[0]) else -fl[0] / fr[0]
        left = nodes <= end
        y[left] = values(left_sol, nodes[left])[0]
        y[~left] = scale * values(right_sol, surf.s_star - nodes[~left])[0]
    else:
        y = values(left_sol, nodes)[0]
    w = np.gradient(nodes) * surf.a(nodes)
    return y / np.sqrt(np.sum(w * y * y))


def spectrum(problem: EigenProblem, count: int, nodes: Optional[np.ndarray] = None) -> Spectrum:
    """Leading eigenvalues with eigenfunctions and their zero counts."""
    from .discretize import build_mesh

    mu = eigenvalues(problem, count)
    nodes = build_mesh(problem.surface) if nodes is None else nodes
    funcs = np.array([eigenfunction(problem, x, nodes) for x in mu])
    floor = current().noise_floor * np.max(np.abs(funcs), axis=1)
    osc = [sign_changes(f[1:-1], fl) for f, fl in zip(funcs, floor)]
    return Spectrum(mu, osc, funcs, nodes)


def bifurcation_points(surface: Surface, m: int, count: int, with_functions: bool = False) -> Spectrum:
    """``lambda_0 < ... < lambda_{count-1}``: eigenvalues of ``-Laplacian`` on the m-armed subspace."""
    problem = EigenProblem.constant(surface, m, 0.0)
    if with_functions:
        out = spectrum(problem, count)
    else:
        out = Spectrum(eigenvalues(problem, count), [])
    out.lambdas = -out.mu
    return out


def count_unstable(problem: EigenProblem) -> UnstableCount:
    """Number of positive eigenvalues, certified by a gap around zero.

    Raises :class:`ZeroEigenvalueSuspected` if an eigenvalue lies within
    the configured gap of zero.
    """
    gap = current().zero_gap
    pr = _Pruefer(problem)
    c_minus, c0, c_plus = pr.count([-gap, 0.0, gap])
    if c_minus != c_plus:
        nearest = _nearest_to_zero(pr, int(c_plus))
        raise ZeroEigenvalueSuspected(
            f"eigenvalue within {gap:g} of zero (nearest {nearest:.3g})", nearest)
    return UnstableCount(int(c0), gap, _nearest_to_zero(pr, int(c0)))


def _eigenvalue(pr: _Pruefer, j: int) -> float:
    low = _bracket_low(pr, j + 1)
    lo, hi = _isolate(pr, [j], [low], [pr.p.q_range[1]], [pr.count([low])[0]], [0])
    return float(_refine(pr, [j], lo, hi)[0])


def _nearest_to_zero(pr: _Pruefer, n_positive: int) -> float:
    """Distance from zero to the closest eigenvalue, given the count above zero."""
    js = [j for j in (n_positive - 1, n_positive) if j >= 0]
    return min(abs(_eigenvalue(pr, j)) for j in js)
