"""Surfaces of revolution and the vortex regularizer.

A surface is described by its radius profile ``a(s)`` over arc length
``s in [0, s_star]``.  The vortex regularizer ``E(s)`` realizes
``exp(m * tau(s))`` for the Euler time ``dtau/ds = 1/a(s)``, normalized so
that ``E(s) / s**m -> 1`` at the pole.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .errors import (DerivativeViolated, GeometryError, PositivityViolated,
                     QuadratureFailure, RobinDegenerate, SymmetryViolated)
from .settings import current

_GL_X, _GL_W = leggauss(12)
SAMPLE_SLOPE_TOL = 1e-3  # end slopes estimated from tabulated samples


@dataclass(frozen=True, eq=False)
class Surface:
    """Radius profile of a compact surface of revolution.

    ``kind`` is one of ``"disk"``, ``"sphere"`` or ``"custom"``.  Custom
    profiles carry a clamped cubic spline through the user samples.
    """

    kind: str
    s_star: float
    boundary_empty: bool
    robin: Optional[tuple] = None
    samples: Optional[np.ndarray] = field(default=None, repr=False)
    _spline: Optional[CubicSpline] = field(default=None, repr=False)

    def a(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "disk":
            return s.copy() if s.ndim else float(s)
        if self.kind == "sphere":
            return np.sin(s)
        return self._spline(s)

    def a_prime(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "disk":
            return np.ones_like(s) if s.ndim else 1.0
        if self.kind == "sphere":
            return np.cos(s)
        return self._spline(s, 1)

    @property
    def midpoint(self) -> float:
        return 0.5 * self.s_star

    @property
    def ident(self) -> str:
        if self.kind == "custom":
            digest = hashlib.sha1(np.ascontiguousarray(self.samples).tobytes()).hexdigest()[:10]
            tag = f"custom-{digest}"
        else:
            tag = self.kind
        if self.robin is not None:
            tag += "[robin={:g},{:g}]".format(*self.robin)
        return tag

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "s_star": self.s_star, "boundary_empty": self.boundary_empty}
        if self.robin is not None:
            cfg["robin"] = [float(self.robin[0]), float(self.robin[1])]
        if self.kind == "custom":
            cfg["samples"] = self.samples.tolist()
        return cfg


def _check_robin(robin):
    if robin is None:
        raise RobinDegenerate("a surface with boundary needs Robin coefficients")
    a1, a2 = (float(robin[0]), float(robin[1]))
    if a1 == 0.0 and a2 == 0.0:
        raise RobinDegenerate("Robin coefficients must not both vanish")
    if a1 * a2 < 0.0:
        raise RobinDegenerate(f"Robin coefficients need alpha1*alpha2 >= 0, got {a1}, {a2}")
    return (a1, a2)


def validate(surface: Surface) -> Surface:
    """Check the geometric hypotheses on a dense grid; return the surface.

    Raises a :class:`GeometryError` subclass naming the violated condition.
    """
    cfg = current()
    s_star = surface.s_star
    if not s_star > 0:
        raise GeometryError("s_star must be positive")
    grid = np.linspace(0.0, s_star, cfg.validation_points)
    a = surface.a(grid)
    if abs(a[0]) > cfg.positivity_floor:
        raise PositivityViolated(f"a(0) = {a[0]:.3g}, expected 0")
    interior = a[1:-1]
    if np.any(interior <= cfg.positivity_floor):
        bad = grid[1:-1][np.argmin(interior)]
        raise PositivityViolated(f"a(s) not positive at s = {bad:.6g} (min {interior.min():.3g})")
    if abs(surface.a_prime(0.0) - 1.0) > cfg.deriv_tol:
        raise DerivativeViolated(f"a'(0) = {surface.a_prime(0.0)!r}, expected 1")
    if surface.boundary_empty:
        if abs(a[-1]) > cfg.positivity_floor:
            raise PositivityViolated(f"closed surface needs a(s_star) = 0, got {a[-1]:.3g}")
        if abs(surface.a_prime(s_star) + 1.0) > cfg.deriv_tol:
            raise DerivativeViolated(f"a'(s_star) = {surface.a_prime(s_star)!r}, expected -1")
        asym = np.max(np.abs(a - surface.a(s_star - grid)))
        if asym > cfg.symmetry_tol * max(1.0, np.max(a)):
            raise SymmetryViolated(f"profile not reflection symmetric (max defect {asym:.3g})")
        if surface.robin is not None:
            raise GeometryError("closed surfaces take no Robin coefficients")
    else:
        if a[-1] <= cfg.positivity_floor:
            raise PositivityViolated("a(s_star) must be positive when the boundary is nonempty")
        _check_robin(surface.robin)
    return surface


def make_disk(robin: Sequence[float] = (1.0, 0.0)) -> Surface:
    """Unit disk, ``a(s) = s`` on ``[0, 1]``; Dirichlet by default."""
    return validate(Surface("disk", 1.0, False, _check_robin(robin)))


def make_sphere() -> Surface:
    """Unit sphere, ``a(s) = sin(s)`` on ``[0, pi]``."""
    return validate(Surface("sphere", float(np.pi), True, None))


def make_custom(samples, boundary_empty: bool, robin: Optional[Sequence[float]] = None) -> Surface:
    """Tabulated profile through ``(s, a)`` samples.

    The interpolant is a cubic spline clamped to ``a'(0) = 1`` and, for a
    closed surface, ``a'(s_star) = -1``.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise GeometryError("samples must be a list of at least four (s, a) pairs")
    s, a = pts[:, 0], pts[:, 1]
    if np.any(np.diff(s) <= 0):
        raise GeometryError("sample abscissae must be strictly increasing")
    if abs(s[0]) > 0 or abs(a[0]) > current().positivity_floor:
        raise PositivityViolated("samples must start at (0, 0)")
    if np.any(a[1:-1] <= 0):
        i = 1 + int(np.argmin(a[1:-1]))
        raise PositivityViolated(f"a(s) not positive at sample s = {s[i]:.6g}")
    # the clamped spline forces the end slopes, so check them on a free fit
    free = CubicSpline(s, a)
    if abs(free(s[0], 1) - 1.0) > SAMPLE_SLOPE_TOL:
        raise DerivativeViolated(f"samples give a'(0) = {float(free(s[0], 1)):.6g}, expected 1")
    if boundary_empty and abs(free(s[-1], 1) + 1.0) > SAMPLE_SLOPE_TOL:
        raise DerivativeViolated(f"samples give a'(s_star) = {float(free(s[-1], 1)):.6g}, expected -1")
    right = (1, -1.0) if boundary_empty else "not-a-knot"
    spline = CubicSpline(s, a, bc_type=((1, 1.0), right))
    rb = None if boundary_empty else _check_robin(robin)
    surface = Surface("custom", float(s[-1]), bool(boundary_empty), rb, pts, spline)
    return validate(surface)


def surface_from_config(cfg: dict) -> Surface:
    kind = cfg.get("kind")
    if kind == "disk":
        return make_disk(tuple(cfg.get("robin", (1.0, 0.0))))
    if kind == "sphere":
        return make_sphere()
    if kind == "custom":
        if "samples" not in cfg:
            raise GeometryError("custom surface needs 'samples'")
        return make_custom(cfg["samples"], bool(cfg.get("boundary_empty", False)), cfg.get("robin"))
    raise GeometryError(f"unknown surface kind {kind!r}")


class Regularizer:
    """``E(s) = s**m * exp(m * int_0^s (1/a - 1/t) dt)`` and its logarithm.

    Disk and sphere use closed forms (``s**m`` and ``(2 tan(s/2))**m``);
    everything else integrates the bounded integrand by Gauss-Legendre
    panels aligned with the spline knots.  On closed surfaces the right
    half is obtained from the reflection identity
    ``E(s) E(s_star - s) = E(s_star/2)**2``.
    """

    def __init__(self, surface: Surface, m: int, closed_form: bool = True):
        if int(m) != m or m < 1:
            raise ValueError("winding number m must be a positive integer")
        self.surface = surface
        self.m = int(m)
        self.closed_form = closed_form and surface.kind in ("disk", "sphere")
        self._end = surface.midpoint if surface.boundary_empty else surface.s_star
        if not self.closed_form:
            self._build_panels()
        self._log_mid = float(self._log_left(np.array([surface.midpoint]))[0]) \
            if surface.boundary_empty else None

    # -- quadrature --------------------------------------------------------
    def _integrand(self, t):
        a = self.surface.a(t)
        return (t - a) / (a * t)

    def _build_panels(self):
        if self.surface.kind == "custom":
            knots = self.surface.samples[:, 0]
            knots = knots[knots < self._end]
            knots = np.append(knots, self._end)
        else:
            knots = np.linspace(0.0, self._end, 129)
        lo, hi = knots[:-1], knots[1:]
        half = 0.5 * (hi - lo)
        nodes = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
        vals = self._integrand(nodes)
        if not np.all(np.isfinite(vals)):
            raise QuadratureFailure("non-finite integrand in regularizer quadrature")
        pieces = (vals * _GL_W[None, :]).sum(axis=1) * half
        self._knots = knots
        self._cum = np.concatenate([[0.0], np.cumsum(pieces)])

    def _smooth_part(self, s):
        """``int_0^s (1/a - 1/t) dt`` for ``0 <= s <= end``."""
        k = np.clip(np.searchsorted(self._knots, s, side="right") - 1, 0, len(self._knots) - 2)
        lo = self._knots[k]
        half = 0.5 * (s - lo)
        nodes = (0.5 * (s + lo))[:, None] + half[:, None] * _GL_X[None, :]
        safe = np.where(nodes > 0, nodes, 1.0)
        vals = np.where(nodes > 0, self._integrand(safe), 0.0)
        return self._cum[k] + (vals * _GL_W[None, :]).sum(axis=1) * half

    def _log_left(self, s):
        m = self.m
        if self.closed_form:
            if self.surface.kind == "disk":
                return m * np.log(s)
            return m * np.log(2.0 * np.tan(0.5 * s))
        return m * (np.log(s) + self._smooth_part(s))

    # -- public ------------------------------------------------------------
    def log_E(self, s):
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s <= 0) or np.any(s > self.surface.s_star) or \
                (self.surface.boundary_empty and np.any(s >= self.surface.s_star)):
            raise ValueError("regularizer evaluated outside the open domain")
        out = np.empty_like(s)
        if self.surface.boundary_empty and not self.closed_form:
            left = s <= self._end
            out[left] = self._log_left(s[left])
            out[~left] = 2.0 * self._log_mid - self._log_left(self.surface.s_star - s[~left])
        else:
            out = self._log_left(s)
        return float(out[0]) if scalar else out

    def E(self, s):
        return np.exp(self.log_E(s))

    def dlog_E(self, s):
        return self.m / self.surface.a(s)

    def E_reflected(self, s):
        """``E(s_star - s)``; the regularizer centred at the far vortex."""
        return self.E(self.surface.s_star - np.asarray(s, dtype=float))


def regularizer(surface: Surface, m: int) -> Regularizer:
    return Regularizer(surface, m)
