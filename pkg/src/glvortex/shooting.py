"""Regularized shooting for m-armed vortex profiles.

With ``u = w E(s)`` and ``p = a dw/ds`` the radial equation becomes the
nonsingular system

    dw/ds = p / a
    dp/ds = (-lam a**2 (1 - u**2) w - 2 m p) / a

launched from ``(w, p) = (d, 0)`` at a small cutoff ``s0``.  Many values of
``d`` are integrated at once as one vector ODE.  A smooth cutoff freezes
components once ``|u|`` passes the escape bound so escaping trajectories do
not force tiny steps on the rest of the batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import illinois
from .errors import (Escape, MonotonicityViolation, ScanInconclusive, StepFailure,
                     TangencySuspected)
from .geometry import Regularizer, Surface
from .settings import current

SCAN_RTOL = 1e-8


@dataclass(frozen=True)
class ShootState:
    s: float
    w: float
    p: float
    u: float
    uprime: float


@dataclass
class Trajectory:
    """Samples of one shooting trajectory."""

    d: float
    s: np.ndarray
    w: np.ndarray
    p: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    s0: float
    truncation_bound: float
    escaped: bool = False
    s_escape: Optional[float] = None

    def state(self, i: int = -1) -> ShootState:
        return ShootState(float(self.s[i]), float(self.w[i]), float(self.p[i]),
                          float(self.u[i]), float(self.uprime[i]))


@dataclass
class CurvePoint:
    d: float
    state: ShootState
    rho: float
    mu: float


@dataclass
class ShootingCurve:
    section_s: float
    points: list = field(default_factory=list)
    escaped: list = field(default_factory=list)  # (d, s_escape)

    @property
    def d(self) -> np.ndarray:
        return np.array([pt.d for pt in self.points])

    @property
    def rho(self) -> np.ndarray:
        return np.array([pt.rho for pt in self.points])

    @property
    def mu(self) -> np.ndarray:
        return np.array([pt.mu for pt in self.points])

    def rows(self):
        for pt in self.points:
            st = pt.state
            yield (pt.d, st.s, st.w, st.p, st.u, st.uprime, pt.rho, pt.mu)


@dataclass(frozen=True)
class ScanConfig:
    d_max_start: float = 2.0
    d_max_cap: float = 64.0
    n_log: int = 30
    n_lin: int = 200
    refine: int = 4


@dataclass
class Root:
    d: float
    kind: str  # "robin", "even" or "odd"
    residual: float
    bracket: tuple


@dataclass
class MonotonicityReport:
    n_checked: int
    min_mu_drop: float
    min_rho_gain: float
    excluded: list
    note: str = ""


def launch_cutoff(surface: Surface, lam: float) -> float:
    return min(1e-4 * surface.s_star, float(np.sqrt(current().launch_tol / lam)))


def _smoothstep_cut(u, bound):
    x = (np.abs(u) - bound) * 2.0
    if x.max() <= 0.0:
        return 1.0
    x = np.clip(x, 0.0, 1.0)
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


class Shooter:
    """Batched integrator of the regularized system for one ``(surface, m, lam)``."""

    def __init__(self, surface: Surface, m: int, lam: float, reg: Optional[Regularizer] = None):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        self.surface = surface
        self.m = int(m)
        self.lam = float(lam)
        self.reg = reg if reg is not None else Regularizer(surface, m)
        self.s0 = launch_cutoff(surface, lam)
        self.end = surface.midpoint if surface.boundary_empty else surface.s_star
        self.bound = current().escape_bound
        if surface.kind == "disk":
            self._E = lambda s: s ** self.m
        elif surface.kind == "sphere":
            self._E = lambda s: (2.0 * np.tan(0.5 * s)) ** self.m
        else:
            self._E = lambda s: float(self.reg.E(s))
        self._a = (lambda s: s) if surface.kind == "disk" else \
            (np.sin if surface.kind == "sphere" else (lambda s: float(surface.a(s))))

    # -- right-hand sides --------------------------------------------------
    def _rhs(self, variational: bool):
        lam, m, bound = self.lam, self.m, self.bound
        a_of, E_of = self._a, self._E

        def f(s, y):
            a = a_of(s)
            E = E_of(s)
            if variational:
                n = y.size // 4
                w, p, wd, pd = y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:]
            else:
                n = y.size // 2
                w, p = y[:n], y[n:]
            u = w * E
            chi = _smoothstep_cut(u, bound)
            dw = chi * p / a
            dp = chi * (-lam * a * a * (1.0 - u * u) * w - 2.0 * m * p) / a
            if not variational:
                return np.concatenate([dw, dp])
            dwd = pd / a
            dpd = (-lam * a * a * (1.0 - 3.0 * u * u) * wd - 2.0 * m * pd) / a
            return np.concatenate([dw, dp, dwd, dpd])

        return f

    def integrate(self, d, s_end=None, rtol=None, atol=None, variational=False, dense=False):
        """Integrate a batch; returns the raw ``solve_ivp`` result."""
        cfg = current()
        d = np.atleast_1d(np.asarray(d, dtype=float))
        s_end = self.end if s_end is None else float(s_end)
        if not self.s0 < s_end <= self.surface.s_star:
            raise ValueError("target must lie in (s0, s_star]")
        if self.surface.boundary_empty and s_end >= self.surface.s_star:
            raise ValueError("closed surfaces need target < s_star")
        y0 = [d, np.zeros_like(d)]
        if variational:
            y0 += [np.ones_like(d), np.zeros_like(d)]
        sol = solve_ivp(self._rhs(variational), (self.s0, s_end), np.concatenate(y0),
                        method="DOP853", rtol=rtol or cfg.rtol, atol=atol or cfg.atol,
                        dense_output=dense)
        if sol.status != 0:
            raise StepFailure(f"integrator failed: {sol.message}")
        return sol

    def escape_info(self, sol, n):
        """Per-trajectory escape flag and first escape position."""
        E = np.array([self._E(s) for s in sol.t])
        u = sol.y[:n] * E[None, :]
        over = np.abs(u) > self.bound
        esc = over.any(axis=1)
        first = np.where(esc, sol.t[np.argmax(over, axis=1)], np.nan)
        return esc, first

    def truncation_bound(self, d):
        """Size of the neglected launch terms, ``|d| lam a(s0)**2`` plus integrator slack."""
        a0 = float(self.surface.a(self.s0))
        return np.abs(d) * (self.lam * a0 * a0 + 10.0 * current().rtol) + 10.0 * current().atol

    def state_arrays(self, s, w, p):
        E = self._E(s) if np.ndim(s) == 0 else np.array([self._E(x) for x in np.atleast_1d(s)])
        a = self._a(s) if np.ndim(s) == 0 else self.surface.a(s)
        return w * E, (p + self.m * w) * E / a

    # -- functionals -------------------------------------------------------
    def functionals(self, w, p):
        """Boundary functional(s) at the end point.

        Returns ``{"robin": G}`` for a boundary, ``{"even": u', "odd": u}`` at
        the midpoint of a closed surface.
        """
        if self.surface.boundary_empty:
            s = self.end
            E, a = self._E(s), self._a(s)
            return {"even": (p + self.m * w) * E / a, "odd": w * E}
        return {"robin": _robin(self.surface, self.m, w, p)}

    def evaluate(self, d, rtol=None, atol=None):
        """Functionals for each ``d`` plus escape flags."""
        d = np.atleast_1d(np.asarray(d, dtype=float))
        sol = self.integrate(d, rtol=rtol, atol=atol)
        n = d.size
        esc, _ = self.escape_info(sol, n)
        vals = self.functionals(sol.y[:n, -1], sol.y[n:, -1])
        return vals, esc


def _robin(surface: Surface, m: int, w, p):
    a1, a2 = surface.robin
    return (a1 * float(surface.a(surface.s_star)) + a2 * m) * w + a2 * p


def _normal(surface: Surface, m: int, kind: str):
    if kind == "robin":
        a1, a2 = surface.robin
        return np.array([a1 * float(surface.a(surface.s_star)) + a2 * m, a2])
    if kind == "even":
        return np.array([float(m), 1.0])
    return np.array([1.0, 0.0])


# -- public operations ------------------------------------------------------

def launch(surface: Surface, m: int, lam: float, d: float, s0: Optional[float] = None,
           target_s: Optional[float] = None, s_eval: Optional[Sequence[float]] = None,
           strict: bool = True) -> Trajectory:
    """Integrate one trajectory from ``(w, p) = (d, 0)`` at the cutoff.

    Samples at the integrator steps unless ``s_eval`` is given.  Raises
    :class:`Escape` when ``|u|`` passes the escape bound and ``strict``.
    """
    sh = Shooter(surface, m, lam)
    if s0 is not None:
        sh.s0 = float(s0)
    sol = sh.integrate([d], s_end=target_s, dense=s_eval is not None)
    esc, first = sh.escape_info(sol, 1)
    if esc[0] and strict:
        raise Escape(float(d), float(first[0]), sh.bound)
    if s_eval is None:
        s, w, p = sol.t, sol.y[0], sol.y[1]
    else:
        s = np.asarray(s_eval, dtype=float)
        w, p = sol.sol(s)
    u, up = sh.state_arrays(s, w, p)
    return Trajectory(float(d), s, w, p, u, up, sh.s0, float(sh.truncation_bound(d)),
                      bool(esc[0]), None if not esc[0] else float(first[0]))


def launch_backward(surface: Surface, m: int, lam: float, d: float,
                    target_s: Optional[float] = None) -> Trajectory:
    """Integrate from the far vortex of a closed surface toward smaller ``s``.

    Uses ``z = u / E(s_star - s)`` launched from ``(d, 0)`` at
    ``s_star - s0``.  Returns samples in decreasing ``s``.
    """
    if not surface.boundary_empty:
        raise ValueError("backward launch needs a closed surface")
    cfg = current()
    reg = Regularizer(surface, m)
    s0 = launch_cutoff(surface, lam)
    start = surface.s_star - s0
    target = surface.midpoint if target_s is None else float(target_s)
    lam, m = float(lam), int(m)
    bound = cfg.escape_bound

    def ER(s):
        return float(reg.E(surface.s_star - s))

    def f(s, y):
        a = float(surface.a(s))
        z, P = y
        u = z * ER(s)
        chi = float(_smoothstep_cut(u, bound))
        dz = -chi * P / a
        dP = -chi * (-lam * a * a * (1.0 - u * u) * z - 2.0 * m * P) / a
        return [dz, dP]

    sol = solve_ivp(f, (start, target), [float(d), 0.0], method="DOP853",
                    rtol=cfg.rtol, atol=cfg.atol)
    if sol.status != 0:
        raise StepFailure(f"integrator failed: {sol.message}")
    s, z, P = sol.t, sol.y[0], sol.y[1]
    E = np.array([ER(x) for x in s])
    a = surface.a(s)
    u = z * E
    up = -(P + m * z) * E / a
    esc = bool(np.any(np.abs(u) > bound))
    if esc:
        raise Escape(float(d), float(s[np.argmax(np.abs(u) > bound)]), bound)
    a0 = float(surface.a(start))
    tb = abs(d) * (lam * a0 * a0 + 10.0 * cfg.rtol)
    return Trajectory(float(d), s, z, P, u, up, s0, tb)


def section(surface: Surface, m: int, lam: float, d_grid, s_hat: float) -> ShootingCurve:
    """Shooting curve at ``s_hat``: one point per non-escaping ``d``."""
    d_grid = np.asarray(d_grid, dtype=float)
    if d_grid.size and (np.any(d_grid <= 0) or np.any(np.diff(d_grid) <= 0)):
        raise ValueError("d_grid must be positive and strictly increasing")
    curve = ShootingCurve(float(s_hat))
    if d_grid.size == 0:
        return curve
    sh = Shooter(surface, m, lam)
    sol = sh.integrate(d_grid, s_end=s_hat)
    n = d_grid.size
    esc, first = sh.escape_info(sol, n)
    w, p = sol.y[:n], sol.y[n:]
    # angle unwrapped along each trajectory, starting from 0 at launch
    mu = np.unwrap(np.arctan2(-p, w), axis=1)[:, -1]
    wl, pl = w[:, -1], p[:, -1]
    u, up = sh.state_arrays(float(s_hat), wl, pl)
    for i in range(n):
        if esc[i]:
            curve.escaped.append((float(d_grid[i]), float(first[i])))
            continue
        st = ShootState(float(s_hat), float(wl[i]), float(pl[i]), float(u[i]), float(up[i]))
        curve.points.append(CurvePoint(float(d_grid[i]), st, float(np.hypot(wl[i], pl[i])),
                                       float(mu[i])))
    return curve


def boundary_functional(surface: Surface, state: ShootState, m: int) -> float:
    """Robin functional ``G = (a1 a(s_star) + a2 m) w + a2 p``; zero iff the condition holds."""
    if surface.boundary_empty:
        raise ValueError("boundary functional needs a surface with boundary")
    return float(_robin(surface, m, state.w, state.p))


def midpoint_functionals(surface: Surface, state: ShootState) -> tuple:
    """``(u'(s_star/2), u(s_star/2))``: even and odd matching residuals."""
    if not surface.boundary_empty:
        raise ValueError("midpoint functionals need a closed surface")
    return float(state.uprime), float(state.u)


def scan_grid(d_max: float, cfg: ScanConfig, factor: int = 1) -> np.ndarray:
    split = 0.02 * d_max
    left = np.geomspace(1e-6 * d_max, split, cfg.n_log * factor, endpoint=False)
    right = np.linspace(split, d_max, cfg.n_lin * factor + 1)
    return np.concatenate([left, right])


def _brackets(d, vals, esc):
    out = []
    for i in range(len(d) - 1):
        if esc[i] or esc[i + 1]:
            continue
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0:
            out.append((d[i], d[i], f0, f0))
        elif f0 * f1 < 0:
            out.append((d[i], d[i + 1], f0, f1))
    return out


def find_d_max(sh: Shooter, cfg: ScanConfig) -> float:
    D = cfg.d_max_start
    while True:
        probe = np.linspace(0.9 * D, D, 8)
        _, esc = sh.evaluate(probe, rtol=SCAN_RTOL)
        if esc.all() or D >= cfg.d_max_cap:
            return D
        D *= 2.0


def find_equilibrium_roots(surface: Surface, m: int, lam: float,
                           scan: ScanConfig = ScanConfig()) -> list:
    """Positive ``d`` roots of the boundary (or midpoint) functionals.

    Negative roots are the negatives of these by odd symmetry.  Roots are
    sorted by decreasing ``d``.
    """
    cfg = current()
    sh = Shooter(surface, m, lam)
    D = find_d_max(sh, scan)
    coarse = scan_grid(D, scan)
    fine = scan_grid(D, scan, scan.refine)
    vc, ec = sh.evaluate(coarse, rtol=SCAN_RTOL)
    vf, ef = sh.evaluate(fine, rtol=SCAN_RTOL)
    roots = []
    for kind in vf:
        nc = len(_brackets(coarse, vc[kind], ec))
        br = _brackets(fine, vf[kind], ef)
        if nc != len(br):
            raise ScanInconclusive(
                f"{kind} functional: {nc} sign changes on the coarse grid, "
                f"{len(br)} after {scan.refine}x refinement (lam={lam})")
        if not br:
            continue
        lo = np.array([b[0] for b in br])
        hi = np.array([b[1] for b in br])

        def f(x, kind=kind):
            # refinement runs two digits tighter than the default so the
            # functional noise stays below root_ftol even for steep slopes
            return sh.evaluate(x, rtol=1e-2 * cfg.rtol, atol=1e-2 * cfg.atol)[0][kind]

        flo, fhi = f(lo), f(hi)
        # the scan ran at a looser tolerance; widen brackets that lost their sign change
        for i in np.nonzero(np.sign(flo) * np.sign(fhi) > 0)[0]:
            j = int(np.searchsorted(fine, lo[i]))
            lo[i] = fine[max(j - 1, 0)]
            hi[i] = fine[min(j + 2, len(fine) - 1)]
            flo[i], fhi[i] = f(lo[i:i + 1])[0], f(hi[i:i + 1])[0]
            if np.sign(flo[i]) * np.sign(fhi[i]) > 0:
                raise ScanInconclusive(f"lost bracket near d={lo[i]:.6g}")
        x, fx = illinois(f, lo, hi, flo, fhi, xtol=cfg.root_xtol, ftol=cfg.root_ftol)
        for xi, fi, l0, h0 in zip(x, fx, lo, hi):
            roots.append(Root(float(xi), kind, float(fi), (float(l0), float(h0))))
    roots.sort(key=lambda r: -r.d)
    return roots


def _kind_for(surface: Surface, m: int, lam: float, d: float) -> str:
    if not surface.boundary_empty:
        return "robin"
    vals, _ = Shooter(surface, m, lam).evaluate([d])
    return "even" if abs(vals["even"][0]) <= abs(vals["odd"][0]) else "odd"


def transversality_margin(surface: Surface, m: int, lam: float, d_root: float,
                          kind: Optional[str] = None) -> float:
    """Sine of the angle between the shooting curve and the target line.

    The tangent ``(w_d, p_d)`` comes from the variational system launched
    from ``(1, 0)``.  Raises :class:`TangencySuspected` below the tolerance.
    """
    kind = kind or _kind_for(surface, m, lam, d_root)
    sh = Shooter(surface, m, lam)
    sol = sh.integrate([d_root], variational=True)
    wd, pd = sol.y[2, -1], sol.y[3, -1]
    n = _normal(surface, m, kind)
    tangent = np.hypot(wd, pd)
    margin = abs(n[0] * wd + n[1] * pd) / (np.hypot(*n) * tangent)
    if margin < current().tangency_tol:
        raise TangencySuspected(f"shooting curve nearly tangent at d={d_root:.6g} "
                                f"(margin {margin:.3g})", margin)
    return float(margin)


def functional_slope(surface: Surface, m: int, lam: float, d: float, kind: str) -> float:
    """``d(functional)/dd`` from the variational system."""
    sh = Shooter(surface, m, lam)
    sol = sh.integrate([d], variational=True)
    w, p, wd, pd = sol.y[:, -1]
    if kind == "robin":
        return float(_robin(surface, m, wd, pd))
    s = sh.end
    E, a = sh._E(s), sh._a(s)
    if kind == "even":
        return float((pd + m * wd) * E / a)
    return float(wd * E)


def monotonicity_report(curve: ShootingCurve, d_upper: float) -> MonotonicityReport:
    """Check ``mu`` decreasing and ``rho`` increasing in ``d`` below ``d_upper``."""
    inside = [pt for pt in curve.points if 0 < pt.d < d_upper]
    excluded = [pt.d for pt in curve.points if not 0 < pt.d < d_upper]
    note = f"{len(excluded)} samples outside (0, d_upper) not checked" if excluded else ""
    if len(inside) < 2:
        return MonotonicityReport(len(inside), np.inf, np.inf, excluded, note)
    mu = np.array([pt.mu for pt in inside])
    rho = np.array([pt.rho for pt in inside])
    dmu = mu[:-1] - mu[1:]
    drho = rho[1:] - rho[:-1]
    for i in range(len(inside) - 1):
        if not (dmu[i] > 0 and drho[i] > 0):
            which = "mu" if not dmu[i] > 0 else "rho"
            raise MonotonicityViolation(
                f"{which} not monotone between d={inside[i].d:.6g} and d={inside[i + 1].d:.6g} "
                f"(mu drop {dmu[i]:.3g}, rho gain {drho[i]:.3g})",
                (inside[i].d, inside[i + 1].d))
    return MonotonicityReport(len(inside), float(dmu.min()), float(drho.min()), excluded, note)


def profile_on_nodes(surface: Surface, m: int, lam: float, d: float, nodes: np.ndarray,
                     parity: Optional[str] = None):
    """``(u, u')`` of the trajectory launched with ``d`` at the given nodes.

    On a closed surface the right half is filled by reflection with the
    given parity (``"even"`` or ``"odd"``).
    """
    sh = Shooter(surface, m, lam)
    sol = sh.integrate([d], dense=True)
    nodes = np.asarray(nodes, dtype=float)
    u = np.empty_like(nodes)
    up = np.empty_like(nodes)
    if surface.boundary_empty:
        left = nodes <= surface.midpoint
        w, p = sol.sol(nodes[left])
        u[left], up[left] = sh.state_arrays(nodes[left], w, p)
        right = ~left
        mirror = surface.s_star - nodes[right]
        w, p = sol.sol(mirror)
        ur, upr = sh.state_arrays(mirror, w, p)
        sgn = 1.0 if parity == "even" else -1.0
        u[right], up[right] = sgn * ur, -sgn * upr
    else:
        w, p = sol.sol(nodes)
        u, up = sh.state_arrays(nodes, w, p)
    return u, up
