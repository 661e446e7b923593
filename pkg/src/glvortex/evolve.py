"""Time evolution of the radial Ginzburg-Landau equation and heteroclinic harvesting.

The semi-discrete flow ``V u_t = F(u) = -K u + lam V (1 - u**2) u`` lives on
the finite-volume mesh of :mod:`glvortex.discretize`.  It is advanced with
the two-stage Rosenbrock method ROS2 (``gamma = 1 + 1/sqrt(2)``), whose
stage systems ``V - gamma h J`` are tridiagonal.  The method is L-stable in
the stiff linear part and keeps equilibria of the discrete flow fixed, so
omega-limits are discrete equilibria and ``|u_t|`` really drops to zero.

The flow is the gradient flow of the discrete energy
``u.K.u / 2 - lam sum V (u**2/2 - u**4/4)``, which is recorded after each
accepted step.
"""
from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .attractor import PERMITTED, connection_graph
from .discretize import FVOperator, build_mesh
from .equilibria import solve_all
from .errors import EdgeMismatch, IndexMismatch, NewtonDiverged, StepFailure, Unmatched
from .geometry import Regularizer, Surface
from .settings import current, use_settings

GAMMA = 1.0 + 1.0 / np.sqrt(2.0)
PIN_SLACK = 0.1


@dataclass
class Controls:
    """Integration controls; ``None`` fields take their value from the settings.

    ``parity`` is ``"even"``, ``"odd"``, ``None`` (no projection) or
    ``"auto"``: on closed surfaces an initial profile that is symmetric or
    antisymmetric about the midpoint is kept in that invariant subspace.
    """

    local_err: Optional[float] = None
    dt0: float = 1e-3
    dt_max: float = 50.0
    record_dt: float = 0.5
    stop_when_stationary: bool = True
    stationary_tol: Optional[float] = None
    parity: Optional[str] = "auto"
    max_steps: int = 200_000


@dataclass
class EvolutionTrace:
    times: np.ndarray  # recorded times
    profiles: np.ndarray = field(repr=False)  # recorded u on all nodes
    lyapunov: np.ndarray = field(repr=False)  # energy after every accepted step
    step_times: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    lam: float = 0.0
    stationary: bool = False
    rate: float = np.inf  # final |u_t|
    omega_limit: Optional[str] = None
    match_distance: Optional[float] = None

    @property
    def final(self) -> np.ndarray:
        return self.profiles[-1]

    @property
    def max_energy_increase(self) -> float:
        if len(self.lyapunov) < 2:
            return 0.0
        return float(max(0.0, np.max(np.diff(self.lyapunov))))

    def rows(self):
        """CSV rows ``t, u(s_0), ..., u(s_n), E``; energies at recorded times."""
        energy = np.interp(self.times, self.step_times, self.lyapunov)
        for t, u, e in zip(self.times, self.profiles, energy):
            yield [float(t), *map(float, u), float(e)]


@dataclass
class DiscreteEquilibrium:
    """An equilibrium of the discrete flow with its unstable eigenvectors.

    ``eigenvectors`` has unit weighted-L2 rows ordered by decreasing
    eigenvalue; ``defect`` is the weighted distance to the shooting profile.
    """

    label: str
    u: np.ndarray = field(repr=False)  # all nodes
    d: float
    morse_index: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    defect: float
    parity: Optional[str] = None


# -- energy and right-hand side ------------------------------------------------

def lyapunov(profile, lam: float, surface: Surface, m: int, op: Optional[FVOperator] = None) -> float:
    """Discrete energy of a profile given on the nodes of ``op``.

    Built on the evolve mesh when ``op`` is omitted, in which case
    ``profile`` must be sampled there.
    """
    op = evolve_operator(surface, m) if op is None else op
    return op.energy(op.restrict(profile), lam)


def evolve_operator(surface: Surface, m: int, n: Optional[int] = None) -> FVOperator:
    n = current().evolve_mesh if n is None else n
    return FVOperator.build(surface, m, build_mesh(surface, n))


def _jacobian_band(op: FVOperator, u, lam, h):
    """Banded ``V - gamma h J`` with ``J = -K + diag(lam V (1 - 3u**2))``."""
    gh = GAMMA * h
    ab = gh * op.banded(np.zeros(op.size))
    ab[1] += op.V - gh * op.reaction_jacobian(u, lam)
    return ab


def _ros2(op: FVOperator, u, lam, h):
    ab = _jacobian_band(op, u, lam, h)
    k1 = solve_banded((1, 1), ab, op.residual(u, lam))
    k2 = solve_banded((1, 1), ab, op.residual(u + h * k1, lam) - 2.0 * op.V * k1)
    return u + h * (1.5 * k1 + 0.5 * k2)


def _parity_of(u, tol=1e-10) -> Optional[str]:
    scale = np.max(np.abs(u))
    if scale == 0:
        return "even"
    if np.max(np.abs(u - u[::-1])) <= tol * scale:
        return "even"
    if np.max(np.abs(u + u[::-1])) <= tol * scale:
        return "odd"
    return None


def _project(u, parity):
    return 0.5 * (u + u[::-1]) if parity == "even" else 0.5 * (u - u[::-1])


# -- integration ---------------------------------------------------------------

def integrate(initial, lam: float, T: float, op: FVOperator,
              controls: Optional[Controls] = None) -> EvolutionTrace:
    """Integrate from ``initial`` (all nodes of ``op``) up to time ``T``.

    Steps are chosen by step doubling so that the weighted local error
    stays below ``controls.local_err``.  With ``stop_when_stationary`` the
    run ends once ``|u_t| < stationary_tol``.
    """
    cfg = current()
    ctl = controls or Controls()
    tol = ctl.local_err if ctl.local_err is not None else cfg.evolve_local_err
    still = ctl.stationary_tol if ctl.stationary_tol is not None else cfg.stationary_tol
    lam = float(lam)
    u = op.restrict(initial).copy()
    if not np.all(np.isfinite(u)):
        raise ValueError("initial profile is not finite")
    parity = ctl.parity
    if parity == "auto":
        parity = _parity_of(u) if op.surface.boundary_empty else None
    if parity is not None:
        if not op.surface.boundary_empty:
            raise ValueError("parity projection needs a closed surface")
        u = _project(u, parity)

    t, h = 0.0, min(ctl.dt0, T) if T > 0 else 0.0
    times, profiles = [0.0], [op.extend(u)]
    energies, step_times = [op.energy(u, lam)], [0.0]
    next_record = ctl.record_dt
    rate = op.residual_norm(op.residual(u, lam))
    stationary = rate < still
    steps = 0
    while t < T and not (ctl.stop_when_stationary and stationary):
        if steps >= ctl.max_steps:
            raise StepFailure(f"step limit {ctl.max_steps} reached at t={t:.6g}")
        h = min(h, T - t, ctl.dt_max)
        full = _ros2(op, u, lam, h)
        half = _ros2(op, _ros2(op, u, lam, 0.5 * h), lam, 0.5 * h)
        if parity is not None:
            full, half = _project(full, parity), _project(half, parity)
        err = op.weighted_norm(half - full) / 3.0
        if not np.isfinite(err):
            h *= 0.25
            if h < 1e-14 * max(1.0, t):
                raise StepFailure(f"step size underflow at t={t:.6g}")
            continue
        factor = 0.9 * (tol / err) ** (1.0 / 3.0) if err > 0 else 4.0
        if err > tol:
            h *= max(0.2, factor)
            if h < 1e-14 * max(1.0, t):
                raise StepFailure(f"step size underflow at t={t:.6g}")
            continue
        u, t = half, t + h
        steps += 1
        energies.append(op.energy(u, lam))
        step_times.append(t)
        rate = op.residual_norm(op.residual(u, lam))
        stationary = rate < still
        if t >= next_record or t >= T or (ctl.stop_when_stationary and stationary):
            times.append(t)
            profiles.append(op.extend(u))
            next_record = t + ctl.record_dt
        h *= min(4.0, factor)
    return EvolutionTrace(np.array(times), np.array(profiles), np.array(energies),
                          np.array(step_times), op.nodes, lam, bool(stationary), rate)


# -- discrete equilibria ---------------------------------------------------------

def discrete_equilibrium(op: FVOperator, lam: float, guess) -> np.ndarray:
    """Newton's method for ``F(u) = 0`` on the mesh of ``op``, from ``guess`` (all nodes)."""
    cfg = current()
    u = op.restrict(guess).astype(float)
    for _ in range(cfg.newton_maxiter):
        r = op.residual(u, lam)
        if op.residual_norm(r) < 1e-2 * cfg.newton_tol:
            return op.extend(u)
        u = u + op.solve(-op.reaction_jacobian(u, lam), r)
    if op.residual_norm(op.residual(u, lam)) < cfg.newton_tol:
        return op.extend(u)
    raise NewtonDiverged(f"discrete equilibrium did not converge at lambda={lam}")


def linearized_spectrum(op: FVOperator, u, lam: float, count: Optional[int] = None):
    """Largest eigenpairs of ``V^-1 (-K + diag(lam V (1 - 3u**2)))``.

    Eigenvectors are returned on all nodes with unit weighted-L2 norm.
    """
    u = op.restrict(u)
    w = 1.0 / np.sqrt(op.V)
    diag = (-op.diag + op.reaction_jacobian(u, lam)) * w * w
    off = -op.off * w[:-1] * w[1:]
    n = op.size
    count = n if count is None else min(count, n)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(n - count, n - 1),
                                  lapack_driver="stemr")
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    phis = (vecs * w[:, None]).T
    out = np.array([op.extend(p / op.weighted_norm(p)) for p in phis])
    return vals, out


def discrete_library(equilibria: list, op: FVOperator) -> list:
    """Polish shooting equilibria into equilibria of the discrete flow.

    The discrete Morse index is compared with the certified one and an
    :class:`IndexMismatch` raised if they differ.
    """
    lib = []
    for e in equilibria:
        if not np.array_equal(e.s, op.nodes):
            raise ValueError("equilibria must be sampled on the evolve mesh")
        u = discrete_equilibrium(op, e.lam, e.u)
        vals, vecs = linearized_spectrum(op, u, e.lam, e.morse_index + 2)
        index = int(np.count_nonzero(vals > 0))
        if index != e.morse_index:
            raise IndexMismatch(f"{e.label}: discrete index {index}, certified {e.morse_index}")
        defect = op.weighted_norm(op.restrict(u - e.u))
        lib.append(DiscreteEquilibrium(e.label, u, e.d, index, vals[:index], vecs[:index], defect,
                                       e.parity))
    return lib


def omega_limit(trace: EvolutionTrace, library: list, op: FVOperator) -> tuple:
    """Nearest library equilibrium to the final state: ``(label, distance)``.

    Raises :class:`Unmatched` if the trace did not become stationary or the
    weighted-L2 distance exceeds the match tolerance.
    """
    tol = current().match_tol
    if not trace.stationary:
        raise Unmatched(f"trace not stationary (|u_t| = {trace.rate:.3g} at t = {trace.times[-1]:.6g})")
    end = op.restrict(trace.final)
    dist = [op.weighted_norm(end - op.restrict(e.u)) for e in library]
    i = int(np.argmin(dist))
    if dist[i] >= tol:
        raise Unmatched(f"closest equilibrium {library[i].label} at distance {dist[i]:.3g}", dist[i])
    trace.omega_limit, trace.match_distance = library[i].label, float(dist[i])
    return library[i].label, float(dist[i])


def pin_ratio(trace: EvolutionTrace, surface: Surface, m: int, d_max: float) -> float:
    """``max_t |u(t, s_0)| / (d_max E(s_0))``; pinned means at most ``1 + PIN_SLACK``."""
    E0 = float(Regularizer(surface, m).E(trace.s[0]))
    return float(np.max(np.abs(trace.profiles[:, 0])) / (d_max * E0))


# -- harvesting ------------------------------------------------------------------

@dataclass
class Departure:
    src: str
    mode: int
    sign: int
    dst: Optional[str]
    distance: Optional[float]
    t_end: float
    steps: int
    max_energy_increase: float
    pin_ratio: float
    final_sup: float
    parity: Optional[str]

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class HarvestReport:
    lam: float
    m: int
    surface_id: str
    graph: object  # ConnectionGraph
    departures: list
    realized: set
    library: list = field(repr=False, default_factory=list)

    @property
    def predicted_drop_one(self) -> set:
        return {e for e, j in self.graph.edges.items() if j == PERMITTED}

    def to_json(self) -> dict:
        g = self.graph.to_json()
        for e in g["edges"]:
            e["realized"] = (e["src"], e["dst"]) in self.realized
        g["departures"] = [d.to_json() for d in self.departures]
        g["discrete_defects"] = {e.label: e.defect for e in self.library}
        return g


def _run_departure(args):
    op, lam, src, mode, sign, u0, settings, ctl, library, d_max = args
    with use_settings(settings):
        trace = integrate(u0, lam, settings.t_max, op, ctl)
        try:
            dst, dist = omega_limit(trace, library, op)
        except Unmatched as exc:
            raise Unmatched(f"departure {src} mode {mode} sign {sign:+d}: {exc}", exc.distance) from exc
        parity = _parity_of(op.restrict(u0)) if op.surface.boundary_empty else None
        return Departure(src, mode, sign, dst, dist, float(trace.times[-1]), len(trace.lyapunov) - 1,
                         trace.max_energy_increase, pin_ratio(trace, op.surface, op.m, d_max),
                         float(np.max(np.abs(trace.final))), parity), trace


def harvest(equilibria: list, lam: float, surface: Surface, controls: Optional[Controls] = None,
            threads: int = 1, keep_traces: bool = False):
    """Leave every saddle along each unstable eigenvector and record where the flow lands.

    ``equilibria`` must be sampled on the evolve mesh (see
    :func:`evolve_equilibria`).  Every realized edge must be in the
    predicted connection graph and every predicted index-drop-one edge
    must be realized; otherwise :class:`EdgeMismatch` is raised.  With
    ``keep_traces`` the traces are returned alongside the report.
    """
    cfg = current()
    m = equilibria[0].m
    op = FVOperator.build(surface, m, equilibria[0].s)
    graph = connection_graph(equilibria, surface.ident)
    library = discrete_library(equilibria, op)
    d_max = max(abs(e.d) for e in equilibria)
    ctl = controls or Controls()
    tasks = []
    for e in library:
        for mode in range(e.morse_index):
            for sign in (1, -1):
                u0 = e.u + sign * cfg.perturbation * e.eigenvectors[mode]
                tasks.append((op, lam, e.label, mode, sign, u0, cfg, ctl, library, d_max))
    if threads > 1:
        with cf.ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_departure, tasks))
    else:
        results = [_run_departure(t) for t in tasks]
    departures = [r[0] for r in results]
    realized = {(d.src, d.dst) for d in departures}
    report = HarvestReport(float(lam), m, surface.ident, graph, departures, realized, library)
    unexpected = realized - set(graph.edges)
    missing = report.predicted_drop_one - realized
    if unexpected or missing:
        raise EdgeMismatch(f"harvest disagrees with the connection graph: unpredicted "
                           f"{sorted(unexpected)}, unrealized {sorted(missing)}")
    if keep_traces:
        return report, [r[1] for r in results]
    return report


def evolve_equilibria(surface: Surface, m: int, lam: float, n: Optional[int] = None) -> list:
    """All certified equilibria sampled on the evolve mesh."""
    n = current().evolve_mesh if n is None else n
    return solve_all(surface, m, lam, nodes=build_mesh(surface, n))

