"""Independent oracle for equilibrium shooting roots.

Integrates the second-order radial equation

    u'' + (a'/a) u' - m**2 u / a**2 + lam (1 - u**2) u = 0

directly (no regularizing factor) from a Frobenius start
``u = d s**m (1 + c s**2)`` with the implicit Radau method, stopping once
``|u| > 3``.  Shooting parameters come from a sign scan plus ``brentq``.
Run it to regenerate the constants frozen in ``test_shooting.py``.
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

S0 = 1e-3


def frobenius(kind, m, lam):
    if kind == "sphere":
        return (m * (m + 1) / 3.0 - lam) / (4.0 * (m + 1))
    return -lam / (4.0 * (m + 1))


def end_state(kind, m, lam, d, rtol=1e-13):
    a, da = ((np.sin, np.cos) if kind == "sphere" else (lambda s: s, lambda s: 1.0))
    end = np.pi / 2 if kind == "sphere" else 1.0
    c = frobenius(kind, m, lam)
    u0 = d * S0 ** m * (1 + c * S0 ** 2)
    v0 = d * (m * S0 ** (m - 1) + (m + 2) * c * S0 ** (m + 1))

    def f(s, y):
        u, v = y
        return [v, -da(s) / a(s) * v + m * m * u / a(s) ** 2 - lam * (1 - u * u) * u]

    def escape(s, y):
        return abs(y[0]) - 3.0
    escape.terminal = True

    sol = solve_ivp(f, (S0, end), [u0, v0], method="Radau", rtol=rtol, atol=1e-2 * rtol,
                    events=escape)
    if sol.status == 1:
        # escaped: keep the sign, so a root next to the escape region stays bracketed
        return np.full(2, 3.0 * np.sign(sol.y_events[0][0][0]))
    return sol.y[:, -1]


def roots(kind, m, lam, d_max):
    out = []
    # sphere: odd (u = 0) and even (u' = 0) at the equator; disk: u = 0 at the rim
    funcs = [0, 1] if kind == "sphere" else [0]
    # sign scan at a loose tolerance; brentq refines at rtol 1e-13
    grid = np.linspace(1e-3, d_max, 120)
    scan = np.array([end_state(kind, m, lam, d, rtol=1e-8) for d in grid])
    for j in funcs:
        g = lambda d: end_state(kind, m, lam, d)[j]
        vals = scan[:, j]
        for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if np.isfinite(flo) and np.isfinite(fhi) and flo * fhi < 0:
                out.append(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))
    return sorted(out, reverse=True)


if __name__ == "__main__":
    for kind, lam, dm in [("sphere", 4.0, 3), ("sphere", 8.0, 3), ("sphere", 13.0, 3),
                          ("disk", 30.0, 6), ("disk", 60.0, 7)]:
        print(kind, lam, [f"{r:.17g}" for r in roots(kind, 1, lam, dm)], flush=True)
