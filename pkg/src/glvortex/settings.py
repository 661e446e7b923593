"""Numerical tolerances shared across modules.

A single :class:`Settings` instance is active at any time; the CLI swaps it
(``--tol-scale``) through :func:`use_settings`.
"""
from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    # geometry validation
    deriv_tol: float = 1e-10
    positivity_floor: float = 1e-12
    symmetry_tol: float = 1e-8
    validation_points: int = 10_000
    # ODE integration (shooting and Pruefer solves)
    rtol: float = 1e-11
    atol: float = 1e-14
    launch_tol: float = 1e-10
    escape_bound: float = 1.5
    # root finding
    root_ftol: float = 1e-11
    root_xtol: float = 1e-12
    eig_xtol: float = 1e-11
    # certification
    zero_gap: float = 1e-6
    tangency_tol: float = 1e-8
    noise_floor: float = 1e-9
    # discretisation
    mesh_size: int = 2048
    mesh_cutoff: float = 1e-3  # fraction of s_star
    # spiral Newton
    newton_tol: float = 1e-10
    newton_maxiter: int = 25
    kernel_rtol: float = 1e-8
    # evolution
    evolve_mesh: int = 1024
    evolve_local_err: float = 1e-8
    stationary_tol: float = 1e-8
    match_tol: float = 1e-4
    perturbation: float = 1e-4
    t_max: float = 1e4

    def scaled(self, factor: float) -> "Settings":
        """Return a copy with every error tolerance multiplied by ``factor``."""
        names = ("rtol", "atol", "launch_tol", "root_ftol", "root_xtol", "eig_xtol",
                 "newton_tol", "evolve_local_err", "stationary_tol")
        return dataclasses.replace(self, **{n: getattr(self, n) * factor for n in names})


_current: contextvars.ContextVar[Settings] = contextvars.ContextVar("glvortex_settings",
                                                                   default=Settings())


def current() -> Settings:
    return _current.get()


@contextlib.contextmanager
def use_settings(settings: Settings):
    token = _current.set(settings)
    try:
        yield settings
    finally:
        _current.reset(token)
