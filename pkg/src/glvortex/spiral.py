"""Rotating spiral waves continued from real vortex equilibria.

A rotating wave ``exp(-i Omega t) u(s) exp(i m phi)`` of the complex
Ginzburg-Landau equation solves

    0 = (1 + i eta) Lap u + i lam Omega u + lam (1 - |u|**2 - i beta |u|**2) u

which, on the finite-volume mesh, splits into real and imaginary parts

    R_R = -K uR + eta K uI + lam V (-Omega uI + (1 - r) uR + beta r uI)
    R_I = -K uI - eta K uR + lam V ( Omega uR + (1 - r) uI - beta r uR)

with ``r = uR**2 + uI**2``.  The gauge freedom ``u -> exp(i c) u`` is removed
by the phase condition ``sum V u_ref uI = 0``; ``Omega`` is the extra unknown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cholesky, eigvalsh, solve_triangular, svd
from scipy.sparse.linalg import splu

from .discretize import FVOperator
from .equilibria import VortexEquilibrium
from .errors import ContinuationStalled, DimensionMismatch, NewtonDiverged, SingularJacobian
from .settings import current


@dataclass
class SpiralWave:
    eta: float
    beta: float
    omega: float
    s: np.ndarray = field(repr=False)
    uR: np.ndarray = field(repr=False)
    uI: np.ndarray = field(repr=False)
    residual_norm: float
    phase: float
    source: str
    lam: float
    iterations: int = 0

    @property
    def kind(self) -> str:
        return "vortex" if self.eta == self.beta else "spiral"

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.hypot(self.uR, self.uI)))

    def summary(self) -> dict:
        return {"eta": self.eta, "beta": self.beta, "omega": self.omega,
                "residual": self.residual_norm, "sup_norm": self.sup_norm, "kind": self.kind}


class SpiralProblem:
    """Discrete rotating-wave equations around one source equilibrium."""

    def __init__(self, source: VortexEquilibrium, surface, op: Optional[FVOperator] = None):
        if source.trivial:
            raise ValueError("the trivial equilibrium has a degenerate gauge orbit")
        self.source = source
        self.lam = source.lam
        self.op = op if op is not None else FVOperator.build(surface, source.m, source.s)
        if not np.array_equal(self.op.nodes, source.s):
            raise ValueError("operator mesh differs from the source profile mesh")
        self.u_ref = self.op.restrict(source.u)
        self.K = self.op.K_sparse()

    @property
    def n(self) -> int:
        return self.op.size

    def residual(self, uR, uI, omega, eta, beta):
        op, lam = self.op, self.lam
        KR, KI = op.K_apply(uR), op.K_apply(uI)
        r = uR * uR + uI * uI
        RR = -KR + eta * KI + lam * op.V * (-omega * uI + (1.0 - r) * uR + beta * r * uI)
        RI = -KI - eta * KR + lam * op.V * (omega * uR + (1.0 - r) * uI - beta * r * uR)
        phase = float(np.sum(op.V * self.u_ref * uI))
        return RR, RI, phase

    def norm(self, RR, RI):
        """``sqrt(sum (R_R**2 + R_I**2) / V)``: the residual as a density."""
        return float(np.sqrt(np.sum((RR * RR + RI * RI) / self.op.V)))

    def roundoff_floor(self, uR, uI, eta) -> float:
        """Rounding-error level of the residual (first order, RMS), measured like :meth:`norm`.

        The density norm divides by the small cell volumes near the
        vortices, so on fine meshes this bound can exceed the Newton
        tolerance.
        """
        op = self.op
        absK = lambda u: np.abs(op.diag) * np.abs(u) + np.concatenate(
            [np.abs(op.off) * np.abs(u[1:]), [0.0]]) + np.concatenate([[0.0], np.abs(op.off) * np.abs(u[:-1])])
        scale = (1.0 + abs(eta)) * (absK(uR) + absK(uI)) + self.lam * op.V * (np.abs(uR) + np.abs(uI))
        return float(np.finfo(float).eps * np.sqrt(np.sum(scale * scale / op.V)))

    def jacobian(self, uR, uI, omega, eta, beta, bordered=True):
        op, lam, K = self.op, self.lam, self.K
        V = op.V
        r = uR * uR + uI * uI
        d_rr = lam * V * ((1.0 - r) - 2.0 * uR * uR + 2.0 * beta * uR * uI)
        d_ri = lam * V * (-omega - 2.0 * uR * uI + beta * (r + 2.0 * uI * uI))
        d_ir = lam * V * (omega - 2.0 * uI * uR - beta * (r + 2.0 * uR * uR))
        d_ii = lam * V * ((1.0 - r) - 2.0 * uI * uI - 2.0 * beta * uR * uI)
        J = sp.bmat([[-K + sp.diags(d_rr), eta * K + sp.diags(d_ri)],
                     [-eta * K + sp.diags(d_ir), -K + sp.diags(d_ii)]], format="csc")
        if not bordered:
            return J
        col = np.concatenate([-lam * V * uI, lam * V * uR])[:, None]
        row = np.concatenate([np.zeros(self.n), V * self.u_ref])[None, :]
        return sp.bmat([[J, sp.csc_matrix(col)], [sp.csc_matrix(row), None]], format="csc")


def residual(profile, omega, eta, beta, lam, surface, m, template=None, op=None):
    """Discrete residual ``(R_R, R_I)`` and phase scalar for a complex profile.

    ``profile`` is a pair ``(uR, uI)`` on the free nodes of ``op`` (built on
    the default mesh when omitted).
    """
    from .discretize import operator
    op = operator(surface, m) if op is None else op
    uR, uI = (np.asarray(x, dtype=float) for x in profile)
    template = uR if template is None else np.asarray(template, dtype=float)
    KR, KI = op.K_apply(uR), op.K_apply(uI)
    r = uR * uR + uI * uI
    RR = -KR + eta * KI + lam * op.V * (-omega * uI + (1.0 - r) * uR + beta * r * uI)
    RI = -KI - eta * KR + lam * op.V * (omega * uR + (1.0 - r) * uI - beta * r * uR)
    return np.concatenate([RR, RI]), float(np.sum(op.V * template * uI))


def newton_solve(problem: SpiralProblem, guess: SpiralWave, eta: float, beta: float) -> SpiralWave:
    """Solve the bordered rotating-wave system at fixed ``(eta, beta)``."""
    cfg = current()
    n = problem.n
    uR = problem.op.restrict(guess.uR)
    uI = problem.op.restrict(guess.uI)
    omega = float(guess.omega)
    best = np.inf
    for it in range(cfg.newton_maxiter + 1):
        RR, RI, ph = problem.residual(uR, uI, omega, eta, beta)
        res = problem.norm(RR, RI)
        if not np.isfinite(res):
            raise NewtonDiverged(f"non-finite residual at eta={eta}, beta={beta}")
        if res < max(cfg.newton_tol, problem.roundoff_floor(uR, uI, eta)) and abs(ph) < 1e-12:
            return _wave(problem, uR, uI, omega, eta, beta, res, ph, it)
        if it == cfg.newton_maxiter or (it > 3 and res > 1e3 * best):
            break
        best = min(best, res)
        J = problem.jacobian(uR, uI, omega, eta, beta)
        try:
            lu = splu(J)
        except RuntimeError as exc:
            raise SingularJacobian(f"bordered Jacobian singular at eta={eta}, beta={beta}") from exc
        step = lu.solve(-np.concatenate([RR, RI, [ph]]))
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(f"bordered Jacobian singular at eta={eta}, beta={beta}")
        uR, uI, omega = uR + step[:n], uI + step[n:2 * n], omega + step[-1]
    raise NewtonDiverged(f"Newton did not converge at eta={eta}, beta={beta} "
                         f"(residual {res:.3g} after {it} iterations)")


def _wave(problem, uR, uI, omega, eta, beta, res, ph, it) -> SpiralWave:
    op = problem.op
    return SpiralWave(float(eta), float(beta), float(omega), op.nodes, op.extend(uR), op.extend(uI),
                      res, ph, problem.source.label, problem.lam, it)


def from_equilibrium(source: VortexEquilibrium) -> SpiralWave:
    """The source cast to a (non-rotating) wave at ``eta = beta = 0``."""
    return SpiralWave(0.0, 0.0, 0.0, source.s, source.u.copy(), np.zeros_like(source.u),
                      np.nan, 0.0, source.label, source.lam)


def _energy_scaled(problem: SpiralProblem):
    """Jacobian blocks at ``(0, 0, 0)`` as maps from ``H1`` to its dual.

    With a real profile and ``eta = beta = Omega = 0`` the unbordered
    Jacobian splits into the symmetric blocks ``A_R = -K + lam V (1 - 3u**2)``
    and ``A_I = -K + lam V (1 - u**2)``.  Scaling by the Cholesky factor of
    the energy matrix ``K + V`` bounds their spectra, so that a relative
    singular-value threshold separates true kernels from the stiff tail.
    """
    op, lam = problem.op, problem.lam
    u = problem.u_ref
    K = problem.K.toarray()
    L = cholesky(K + np.diag(op.V), lower=True)

    def scaled(A):
        X = solve_triangular(L, A, lower=True)
        return solve_triangular(L, X.T, lower=True)

    A_R = scaled(-K + np.diag(lam * op.V * (1.0 - 3.0 * u * u)))
    A_I = scaled(-K + np.diag(lam * op.V * (1.0 - u * u)))
    col = solve_triangular(L, lam * op.V * u, lower=True)
    row = solve_triangular(L, op.V * problem.u_ref, lower=True)
    return A_R, A_I, col, row


def kernel_dimension_check(problem: SpiralProblem, polish: bool = True) -> dict:
    """Numerical kernel dimensions of the Jacobian at ``(Omega, eta, beta) = 0``.

    Returns ``{"unbordered": dim, "bordered": dim, ...}``; the expected
    values are one (the gauge direction ``i u``) and zero.  Raises
    :class:`DimensionMismatch` otherwise.
    """
    cfg = current()
    if polish:
        base = newton_solve(problem, from_equilibrium(problem.source), 0.0, 0.0)
        problem.u_ref = problem.op.restrict(base.uR)
    A_R, A_I, col, row = _energy_scaled(problem)
    sv_R = np.abs(eigvalsh(A_R))
    sv_I = np.abs(eigvalsh(A_I))
    sv = np.concatenate([sv_R, sv_I])
    thresh = cfg.kernel_rtol * sv.max()
    unbordered = int(np.count_nonzero(sv < thresh))
    n = problem.n
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = A_I
    B[:n, n] = col
    B[n, :n] = row
    sb = np.concatenate([sv_R, svd(B, compute_uv=False)])
    bordered = int(np.count_nonzero(sb < cfg.kernel_rtol * sb.max()))
    ordered = np.sort(sv)
    out = {"unbordered": unbordered, "bordered": bordered,
           "smallest_unbordered": float(ordered[0]),
           "second_unbordered": float(ordered[1]),
           "smallest_bordered": float(sb.min()),
           "threshold": float(thresh)}
    if unbordered != 1 or bordered != 0:
        raise DimensionMismatch(f"kernel dimensions {unbordered} (unbordered) and {bordered} "
                                f"(bordered); expected 1 and 0")
    return out


@dataclass
class SweepResult:
    waves: list
    omega_jump_constant: float


def sweep(source: VortexEquilibrium, surface, path, op: Optional[FVOperator] = None,
          min_step: float = 1e-4) -> SweepResult:
    """Natural-parameter continuation along ``path`` (a list of ``(eta, beta)``).

    The path must start at ``(0, 0)``.  Failed steps are halved down to
    ``min_step``; then :class:`ContinuationStalled` reports the last
    converged parameters and the waves computed so far.
    """
    path = [tuple(map(float, p)) for p in path]
    if not path or path[0] != (0.0, 0.0):
        raise ValueError("a sweep starts at (eta, beta) = (0, 0)")
    problem = SpiralProblem(source, surface, op)
    wave = newton_solve(problem, from_equilibrium(source), 0.0, 0.0)
    waves = [wave]
    jump = 0.0
    for target in path[1:]:
        here = np.array([wave.eta, wave.beta])
        goal = np.array(target)
        h = 1.0  # fraction of the remaining segment to attempt
        while np.any(here != goal):
            trial = goal if h >= 1.0 else here + h * (goal - here)
            try:
                nxt = newton_solve(problem, wave, *trial)
            except (NewtonDiverged, SingularJacobian):
                h *= 0.5
                if h * np.linalg.norm(goal - here) < min_step:
                    raise ContinuationStalled(
                        f"continuation stalled at (eta, beta) = ({here[0]:.6g}, {here[1]:.6g})",
                        tuple(map(float, here)), waves)
                continue
            dist = float(np.linalg.norm(trial - here))
            if dist > 0:
                jump = max(jump, abs(nxt.omega - wave.omega) / dist)
            wave, here = nxt, np.array([nxt.eta, nxt.beta])
            waves.append(wave)
            h = min(1.0, 2.0 * h)
    return SweepResult(waves, jump)
