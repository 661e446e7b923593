"""Vortex equilibria: assembly, certification and continuation in lambda."""
from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._numerics import derivative
from .discretize import build_mesh
from .errors import (BranchDiscontinuity, CountMismatch, IndexMismatch, LambdaTooClose,
                     UnresolvedZero)
from .geometry import Surface
from .settings import current, use_settings
from .shooting import ScanConfig, Shooter, find_equilibrium_roots, transversality_margin
from .sturm import EigenProblem, bifurcation_points, count_unstable


@dataclass
class VortexEquilibrium:
    """One equilibrium profile with its certificates.

    ``label`` is ``"0"`` for the trivial equilibrium and ``"u{k}{sign}"``
    otherwise.  ``margin`` is the shooting transversality margin and
    ``eigen_gap`` the distance of the closest linearized eigenvalue to zero.
    """

    lam: float
    m: int
    d: float
    s: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    uprime: np.ndarray = field(repr=False)
    zero_number: int
    morse_index: int
    margin: Optional[float]
    eigen_gap: float
    branch: Optional[tuple]  # (k, +1/-1); None for the trivial equilibrium
    parity: Optional[str] = None
    sup_norm: float = 0.0
    ode_residual: float = 0.0
    pin_defect: float = 0.0

    @property
    def trivial(self) -> bool:
        return self.branch is None

    @property
    def label(self) -> str:
        if self.trivial:
            return "0"
        k, sign = self.branch
        return f"u{k}{'+' if sign > 0 else '-'}"

    def negated(self) -> "VortexEquilibrium":
        k, sign = self.branch
        return VortexEquilibrium(self.lam, self.m, -self.d, self.s, -self.u, -self.uprime,
                                 self.zero_number, self.morse_index, self.margin, self.eigen_gap,
                                 (k, -sign), self.parity, self.sup_norm, self.ode_residual,
                                 self.pin_defect)

    def summary(self) -> dict:
        return {"label": self.label, "lambda": self.lam, "d": self.d,
                "zero_number": self.zero_number, "morse_index": self.morse_index,
                "margin": self.margin, "eigen_gap": self.eigen_gap,
                "sup_norm": self.sup_norm, "parity": self.parity,
                "ode_residual": self.ode_residual}


def zero_number(profile, floor: Optional[float] = None) -> int:
    """Strict sign changes of interior samples, ignoring ``|u| <= floor``.

    Raises :class:`UnresolvedZero` if a run of sub-floor samples sits
    between samples of equal sign: the profile touches zero there and the
    count cannot be decided at this resolution.
    """
    floor = current().noise_floor if floor is None else floor
    v = np.asarray(profile, dtype=float)[1:-1]
    big = np.abs(v) > floor
    idx = np.nonzero(big)[0]
    if idx.size < 2:
        return 0
    sgn = np.sign(v[idx])
    gaps = np.diff(idx) > 1
    if np.any(gaps & (sgn[1:] == sgn[:-1])):
        i = int(idx[:-1][gaps & (sgn[1:] == sgn[:-1])][0])
        raise UnresolvedZero(f"profile touches zero near sample {i + 2} without changing sign")
    return int(np.count_nonzero(sgn[1:] != sgn[:-1]))


def bifurcation_values(surface: Surface, m: int, lam_max: float) -> np.ndarray:
    """All ``lambda_k`` up to and including the first one above ``lam_max``."""
    K = 4
    while True:
        lams = bifurcation_points(surface, m, K).lambdas
        if lams[-1] > lam_max:
            return lams
        K *= 2


def branch_index(lam: float, lambdas: np.ndarray) -> int:
    """``k`` with ``lambda_k < lam < lambda_{k+1}``; ``-1`` below ``lambda_0``.

    Raises :class:`LambdaTooClose` inside the hyperbolicity gap.
    """
    gap = current().zero_gap
    near = np.abs(lambdas - lam) <= gap
    if near.any():
        j = int(np.argmax(near))
        raise LambdaTooClose(f"lambda={lam!r} within {gap:g} of bifurcation point "
                             f"lambda_{j}={lambdas[j]!r}")
    return int(np.count_nonzero(lambdas < lam)) - 1


class _Linearization:
    """Potential ``lam (1 - 3 u(s)**2)`` from a dense shooting trajectory."""

    def __init__(self, surface: Surface, m: int, lam: float, d: float):
        self.sh = Shooter(surface, m, lam)
        self.sol = self.sh.integrate([d], dense=True)
        self.surface, self.lam, self.d = surface, lam, d
        self.end = self.sh.end

    def u(self, s: float) -> float:
        if self.surface.boundary_empty and s > self.end:
            s = self.surface.s_star - s  # u**2 is symmetric for both parities
        if s < self.sh.s0:
            return self.d * self.sh._E(s)
        return float(self.sol.sol(s)[0] * self.sh._E(s))

    def __call__(self, s: float) -> float:
        u = self.u(s)
        return self.lam * (1.0 - 3.0 * u * u)

    def sup(self) -> float:
        E = np.array([self.sh._E(t) for t in self.sol.t])
        return float(np.max(np.abs(self.sol.y[0] * E)))


def morse_index(surface: Surface, m: int, lam: float, d: float):
    """Morse index of the equilibrium launched with ``d`` (via the Pruefer count)."""
    q = _Linearization(surface, m, lam, d)
    return count_unstable(EigenProblem(surface, m, q, (-2.0 * lam, lam), True))


def _ode_residual(surface: Surface, m: int, lam: float, s, u, uprime) -> float:
    """Max pointwise residual of the radial equation from a 7-point flux derivative."""
    interior = slice(3, -3)
    a = surface.a(s)
    flux = a * uprime
    dflux = derivative(s, flux)
    r = dflux / a - m * m * u / (a * a) + lam * (1.0 - u * u) * u
    return float(np.max(np.abs(r[interior])))


def _build(surface, m, lam, root, k, nodes) -> VortexEquilibrium:
    lin = _Linearization(surface, m, lam, root.d)
    parity = root.kind if surface.boundary_empty else None
    sol, sh = lin.sol, lin.sh
    if surface.boundary_empty:
        left = nodes <= surface.midpoint
        src = np.where(left, nodes, surface.s_star - nodes)
    else:
        left = np.ones(len(nodes), dtype=bool)
        src = nodes
    w, p = sol.sol(src)
    u, up = sh.state_arrays(src, w, p)
    sgn = 1.0 if parity in (None, "even") else -1.0
    u = np.where(left, u, sgn * u)
    up = np.where(left, up, -sgn * up)
    z = zero_number(u)
    cnt = count_unstable(EigenProblem(surface, m, lin, (-2.0 * lam, lam), True))
    margin = transversality_margin(surface, m, lam, root.d, root.kind)
    pin = abs(u[0] - root.d * sh._E(nodes[0])) / abs(root.d * sh._E(nodes[0]))
    return VortexEquilibrium(lam, m, root.d, nodes, u, up, z, cnt.count, margin, cnt.nearest,
                             (k, 1), parity, max(lin.sup(), float(np.max(np.abs(u)))),
                             _ode_residual(surface, m, lam, nodes, u, up), pin)


def trivial_equilibrium(surface: Surface, m: int, lam: float, nodes=None) -> VortexEquilibrium:
    nodes = build_mesh(surface) if nodes is None else nodes
    cnt = count_unstable(EigenProblem.constant(surface, m, lam))
    zeros = np.zeros(len(nodes))
    return VortexEquilibrium(lam, m, 0.0, nodes, zeros, zeros.copy(), 0, cnt.count, None,
                             cnt.nearest, None)


def solve_all(surface: Surface, m: int, lam: float, lambdas: Optional[np.ndarray] = None,
              nodes: Optional[np.ndarray] = None, scan: ScanConfig = ScanConfig()) -> list:
    """All equilibria at ``lam``: the trivial one followed by ``u_k^+, u_k^-`` for each k.

    Raises :class:`CountMismatch` when the number of positive roots is not
    ``k + 1`` and :class:`IndexMismatch` when zero number, Morse index and
    branch label disagree.
    """
    lam = float(lam)
    lambdas = bifurcation_values(surface, m, lam) if lambdas is None else lambdas
    k = branch_index(lam, lambdas)
    nodes = build_mesh(surface) if nodes is None else nodes
    roots = find_equilibrium_roots(surface, m, lam, scan)
    if len(roots) != k + 1:
        raise CountMismatch(f"found {len(roots)} positive roots at lambda={lam}, expected {k + 1}")
    trivial = trivial_equilibrium(surface, m, lam, nodes)
    if trivial.morse_index != k + 1:
        raise IndexMismatch(f"trivial equilibrium has index {trivial.morse_index}, expected {k + 1}")
    out = [trivial]
    for j, root in enumerate(roots):  # decreasing d: branch j has j zeros
        eq = _build(surface, m, lam, root, j, nodes)
        if not eq.zero_number == eq.morse_index == j:
            raise IndexMismatch(f"branch {j} at lambda={lam}: zero number {eq.zero_number}, "
                                f"Morse index {eq.morse_index}")
        out += [eq, eq.negated()]
    return out


# -- continuation ------------------------------------------------------------

@dataclass
class BifurcationDiagram:
    lambda_grid: np.ndarray
    branches: dict  # "k+" -> list of summaries ordered by lambda
    bifurcation_points: np.ndarray
    refused: list = field(default_factory=list)
    onsets: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"lambda_grid": list(map(float, self.lambda_grid)),
                "bifurcation_points": list(map(float, self.bifurcation_points)),
                "refused": list(map(float, self.refused)),
                "onsets": self.onsets,
                "branches": self.branches}


def _solve_worker(args):
    surface, m, lam, lambdas, settings, n = args
    with use_settings(settings):
        nodes = build_mesh(surface, n)
        eqs = solve_all(surface, m, lam, lambdas, nodes)
    return [(e.branch, e.d, e.sup_norm, e.zero_number, e.morse_index, e.margin)
            for e in eqs if not e.trivial]


def diagram(surface: Surface, m: int, lam_range: tuple, steps: int, threads: int = 1,
            mesh: int = 512) -> BifurcationDiagram:
    """Solve on a lambda grid and join equilibria into branches.

    Branches are keyed by zero number and sign, which solve_all makes
    unique at each lambda, so the key alone joins points across the grid.
    A branch with a gap above its bifurcation point, or whose zero number
    or Morse index changes, raises :class:`BranchDiscontinuity`.
    """
    lo, hi = map(float, lam_range)
    if not 0 < lo < hi or steps < 2:
        raise ValueError("need 0 < lambda_lo < lambda_hi and at least two steps")
    grid = np.linspace(lo, hi, steps)
    lambdas = bifurcation_values(surface, m, hi)
    gap = current().zero_gap
    refused = [float(x) for x in grid if np.min(np.abs(lambdas - x)) <= gap]
    todo = [float(x) for x in grid if float(x) not in refused]
    args = [(surface, m, x, lambdas, current(), mesh) for x in todo]
    if threads > 1:
        with cf.ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_solve_worker, args))
    else:
        results = [_solve_worker(a) for a in args]
    branches: dict = {}
    for lam, res in zip(todo, results):
        for (k, sign), d, sup, z, i, margin in res:
            key = f"{k}{'+' if sign > 0 else '-'}"
            branches.setdefault(key, []).append(
                {"lambda": lam, "d": d, "sup_norm": sup, "zero_number": z,
                 "morse_index": i, "margin": margin})
    onsets = {}
    for key, pts in branches.items():
        k = int(key[:-1])
        lams = [p["lambda"] for p in pts]
        expected = [x for x in todo if x > lambdas[k]]
        if lams != expected:
            raise BranchDiscontinuity(f"branch {key} has gaps: present at {len(lams)} of "
                                      f"{len(expected)} grid values above lambda_{k}")
        changed = [p["lambda"] for p in pts if not p["zero_number"] == p["morse_index"] == k]
        if changed:
            raise BranchDiscontinuity(f"branch {key} changes zero number or index at lambda={changed[0]}")
        onsets[key] = {"first_lambda": lams[0], "bifurcation_point": float(lambdas[k])}
    return BifurcationDiagram(grid, branches, lambdas[lambdas <= hi], refused, onsets)

