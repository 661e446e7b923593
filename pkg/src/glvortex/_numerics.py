"""Small numerical helpers: batched bracketing root finder, FD weights."""
from __future__ import annotations

import numpy as np


def illinois(f, lo, hi, flo=None, fhi=None, xtol=1e-12, ftol=0.0, maxiter=100, indexed=False):
    """Refine many sign-change brackets at once.

    ``f`` maps an array of abscissae to an array of values; every entry of
    ``lo``/``hi`` must bracket a sign change.  A bracket is finished once
    ``|f| <= ftol`` and its width is ``<= xtol``, or it has shrunk to a few
    ulps.  Uses regula falsi with the
    Illinois modification and falls back to bisection when the secant
    point leaves the interior of the bracket.  With ``indexed=True`` the
    callback is ``f(x, idx)`` where ``idx`` selects the active brackets.

    Returns ``(x, fx)``.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if not indexed:
        plain = f

        def f(x, idx):
            return plain(x)
    every = np.arange(lo.size)
    flo = f(lo, every) if flo is None else np.array(flo, dtype=float)
    fhi = f(hi, every) if fhi is None else np.array(fhi, dtype=float)
    if np.any(np.sign(flo) * np.sign(fhi) > 0):
        raise ValueError("illinois: every bracket needs a sign change")
    x = np.where(np.abs(flo) < np.abs(fhi), lo, hi)
    fx = np.where(np.abs(flo) < np.abs(fhi), flo, fhi)
    side = np.zeros(lo.shape, dtype=int)
    def finished(fval, width, xval):
        tiny = 8 * np.finfo(float).eps * np.maximum(np.abs(xval), 1e-300)
        return ((np.abs(fval) <= ftol) & (width <= xtol)) | (width <= tiny) | (fval == 0)

    done = finished(fx, hi - lo, x)
    for _ in range(maxiter):
        if np.all(done):
            break
        act = ~done
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = (lo * fhi - hi * flo) / (fhi - flo)
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        idx = np.nonzero(act)[0]
        fc = np.asarray(f(cand[idx], idx), dtype=float)
        c = cand[idx]
        same_lo = np.sign(fc) == np.sign(flo[idx])
        # move the endpoint with the same sign; halve the stale one (Illinois)
        lo_i, hi_i, flo_i, fhi_i, side_i = lo[idx], hi[idx], flo[idx], fhi[idx], side[idx]
        new_lo = np.where(same_lo, c, lo_i)
        new_hi = np.where(same_lo, hi_i, c)
        new_flo = np.where(same_lo, fc, np.where(side_i == -1, 0.5 * flo_i, flo_i))
        new_fhi = np.where(same_lo, np.where(side_i == 1, 0.5 * fhi_i, fhi_i), fc)
        side[idx] = np.where(same_lo, 1, -1)
        lo[idx], hi[idx], flo[idx], fhi[idx] = new_lo, new_hi, new_flo, new_fhi
        x[idx], fx[idx] = c, fc
        done[idx] = finished(fc, new_hi - new_lo, c)
    return x, fx


def fornberg_weights(x0: float, x: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``."""
    n = len(x)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative(x: np.ndarray, y: np.ndarray, width: int = 7) -> np.ndarray:
    """High-order first derivative of samples on a nonuniform grid."""
    n = len(x)
    half = width // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(0, i - half), n - width)
        sl = slice(lo, lo + width)
        out[i] = fornberg_weights(x[i], x[sl], 1) @ y[sl]
    return out


def sign_changes(values: np.ndarray, floor: float) -> int:
    v = values[np.abs(values) > floor]
    if v.size < 2:
        return 0
    s = np.sign(v)
    return int(np.count_nonzero(s[1:] != s[:-1]))
