"""Graded radial mesh and the finite-volume form of the radial operator.

The operator ``u -> (a u')' - m**2 u / a`` is discretized on cells around
the nodes, giving a symmetric tridiagonal stiffness matrix ``K`` and a
diagonal mass ``V`` (cell integrals of ``a``), so that the semi-discrete
equation reads ``V u_t = -K u + lam V (1 - u**2) u``.

The vortex core below the first node is modeled by ``u ~ c E(s)``, whose
flux there is ``a u' = m u``; it enters ``K`` as the diagonal term ``m`` and
accounts exactly for the core's share of the energy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded
from scipy.sparse import diags

from .geometry import Surface
from .settings import current


def build_mesh(surface: Surface, n: Optional[int] = None, cutoff: Optional[float] = None) -> np.ndarray:
    """Nodes graded by equal arc length of the curve ``(s, log a(s))``.

    The first node sits at ``cutoff * s_star``.  Closed surfaces get a mesh
    symmetric about the midpoint with ``n`` even.
    """
    cfg = current()
    n = cfg.mesh_size if n is None else int(n)
    cutoff = cfg.mesh_cutoff if cutoff is None else float(cutoff)
    s0 = cutoff * surface.s_star
    end = surface.midpoint if surface.boundary_empty else surface.s_star
    fine = np.union1d(np.geomspace(s0, end, 20001), np.linspace(s0, end, 20001))
    a = surface.a(fine)
    ap = surface.a_prime(fine)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(a > 0, ap / a, 0.0)
    arc = cumulative_trapezoid(np.sqrt(1.0 + slope ** 2), fine, initial=0.0)
    if surface.boundary_empty:
        if n % 2:
            raise ValueError("closed surfaces need an even node count")
        half = n // 2
        xi = np.arange(half) / (half - 0.5)
        left = np.interp(xi * arc[-1], arc, fine)
        left[0] = s0
        return np.concatenate([left, surface.s_star - left[::-1]])
    xi = np.linspace(0.0, 1.0, n)
    nodes = np.interp(xi * arc[-1], arc, fine)
    nodes[0], nodes[-1] = s0, surface.s_star
    return nodes


def _simpson(f, lo, hi):
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi))


@dataclass
class FVOperator:
    """Finite-volume radial operator on a mesh.

    Attributes refer to the *free* nodes: all nodes except a Dirichlet end.
    """

    surface: Surface
    m: int
    nodes: np.ndarray
    free: np.ndarray  # boolean mask over nodes
    V: np.ndarray
    diag: np.ndarray
    off: np.ndarray

    @classmethod
    def build(cls, surface: Surface, m: int, nodes: np.ndarray) -> "FVOperator":
        s = np.asarray(nodes, dtype=float)
        h = np.diff(s)
        mid = 0.5 * (s[:-1] + s[1:])
        flux = surface.a(mid) / h
        lo = np.concatenate([[s[0]], mid])
        hi = np.concatenate([mid, [s[-1]]])
        a_fun = surface.a

        def inv_a(x):
            return m * m / surface.a(x)

        V = _simpson(a_fun, lo, s) + _simpson(a_fun, s, hi)
        M = _simpson(inv_a, lo, s) + _simpson(inv_a, s, hi)
        diag = M.copy()
        diag[:-1] += flux
        diag[1:] += flux
        off = -flux.copy()
        diag[0] += m  # vortex core flux a u' = m u
        free = np.ones(len(s), dtype=bool)
        if surface.boundary_empty:
            diag[-1] += m
        else:
            a1, a2 = surface.robin
            if a2 == 0.0:
                free[-1] = False
                diag, off, V = diag[:-1], off[:-1], V[:-1]
            else:
                diag[-1] += a1 / a2 * float(surface.a(surface.s_star))
        return cls(surface, int(m), s, free, V, diag, off)

    # -- basic algebra -------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.diag)

    def K_apply(self, u):
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        return out

    def K_sparse(self):
        return diags([self.off, self.diag, self.off], [-1, 0, 1], format="csc")

    def banded(self, shift_diag):
        """Banded form of ``K + diag(shift_diag)`` for ``solve_banded``."""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.off
        ab[1] = self.diag + shift_diag
        ab[2, :-1] = self.off
        return ab

    def solve(self, shift_diag, rhs):
        return solve_banded((1, 1), self.banded(shift_diag), rhs)

    def restrict(self, u_full):
        return np.asarray(u_full, dtype=float)[self.free]

    def extend(self, u_free):
        out = np.zeros(len(self.nodes), dtype=np.result_type(u_free, float))
        out[self.free] = u_free
        return out

    @property
    def s(self):
        return self.nodes[self.free]

    # -- Ginzburg-Landau pieces ------------------------------------------------
    def residual(self, u, lam):
        """``-K u + lam V (1 - u**2) u``; zero at discrete equilibria."""
        return -self.K_apply(u) + lam * self.V * (1.0 - u * u) * u

    def residual_norm(self, r):
        """Weighted norm ``sqrt(sum r_i**2 / V_i)`` of a residual vector."""
        return float(np.sqrt(np.sum(np.abs(r) ** 2 / self.V)))

    def weighted_norm(self, u):
        return float(np.sqrt(np.sum(self.V * np.abs(u) ** 2)))

    def energy(self, u, lam):
        """Discrete energy ``u.K.u / 2 - lam sum V (u**2/2 - u**4/4)``."""
        u2 = u * u
        return float(0.5 * u @ self.K_apply(u) - lam * np.sum(self.V * (0.5 * u2 - 0.25 * u2 * u2)))

    def reaction_jacobian(self, u, lam):
        """Diagonal ``lam V (1 - 3 u**2)`` of the reaction term's Jacobian."""
        return lam * self.V * (1.0 - 3.0 * u * u)


def operator(surface: Surface, m: int, n: Optional[int] = None) -> FVOperator:
    return FVOperator.build(surface, m, build_mesh(surface, n))
