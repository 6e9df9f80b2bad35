"""Vectorised adaptive Simpson quadrature.

Many integrals are evaluated at once (one per threshold in a grid), so
intervals from every owner are refined together and the integrand is
called on whole arrays.
"""

from __future__ import annotations

import numpy as np

RTOL = 1e-8
ATOL = 1e-12
MAX_DEPTH = 48
_INITIAL_PANELS = 8


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


def adaptive_simpson(func, lo, hi, rtol=RTOL, atol=ATOL, max_depth=MAX_DEPTH):
    """Integrate ``func`` over every ``[lo[i], hi[i]]``.

    ``func`` must accept and return 1-d float arrays. Returns
    ``(values, error_estimates)`` with the broadcast shape of ``lo``/``hi``.
    Raises :class:`QuadratureError` if some integral hits ``max_depth``
    without meeting ``max(atol, rtol * |value|)``.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    shape = lo.shape
    lo = lo.ravel()
    hi = hi.ravel()
    n = lo.size
    values = np.zeros(n)
    errors = np.zeros(n)
    if n == 0:
        return values.reshape(shape), errors.reshape(shape)

    live = hi > lo
    owners = np.repeat(np.flatnonzero(live), _INITIAL_PANELS)
    if owners.size == 0:
        return values.reshape(shape), errors.reshape(shape)
    k = np.tile(np.arange(_INITIAL_PANELS), int(live.sum()))
    width = (hi[owners] - lo[owners]) / _INITIAL_PANELS
    a = lo[owners] + k * width
    b = a + width
    m = 0.5 * (a + b)
    fa, fm, fb = np.split(func(np.concatenate([a, m, b])), 3)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    # Per-owner tolerance from a coarse composite estimate.
    coarse = np.zeros(n)
    np.add.at(coarse, owners, whole)
    tol = np.maximum(atol, rtol * np.abs(coarse[owners])) / _INITIAL_PANELS
    depth = np.zeros(owners.size, dtype=int)
    failed = np.zeros(n, dtype=bool)

    while owners.size:
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = np.split(func(np.concatenate([lm, rm])), 2)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        ok = np.abs(delta) <= 15.0 * tol
        stuck = ~ok & (depth >= max_depth)
        done = ok | stuck
        if done.any():
            np.add.at(values, owners[done], left[done] + right[done] + delta[done] / 15.0)
            np.add.at(errors, owners[done], np.abs(delta[done]) / 15.0)
            failed[owners[stuck]] = True
        keep = ~done
        if not keep.any():
            break
        # Children: [a, m] and [m, b].
        owners = np.concatenate([owners[keep], owners[keep]])
        a, m_new, b = (
            np.concatenate([a[keep], m[keep]]),
            np.concatenate([lm[keep], rm[keep]]),
            np.concatenate([m[keep], b[keep]]),
        )
        fa, fm, fb = (
            np.concatenate([fa[keep], fm[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
            np.concatenate([fm[keep], fb[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
        tol = np.concatenate([tol[keep], tol[keep]]) * 0.5
        depth = np.concatenate([depth[keep], depth[keep]]) + 1
        m = m_new

    if failed.any():
        bad = np.flatnonzero(failed)
        limit = np.maximum(atol, rtol * np.abs(values[bad]))
        worst = bad[np.argmax(errors[bad] / limit)]
        if errors[worst] > 100.0 * max(atol, rtol * abs(values[worst])):
            raise QuadratureError(
                f"quadrature did not converge on [{lo[worst]:g}, {hi[worst]:g}]: "
                f"estimate {values[worst]:.6g}, error {errors[worst]:.3g}",
                value=values[worst],
                error=errors[worst],
            )
    return values.reshape(shape), errors.reshape(shape)


def bisect(func, lo, hi, tol=1e-12, max_iter=200):
    """Root of a scalar function with a sign change on ``[lo, hi]``."""
    flo = func(lo)
    fhi = func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"root not bracketed on [{lo:g}, {hi:g}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0 or hi - lo <= tol:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)
