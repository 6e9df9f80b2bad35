"""Seeded M/M/1 simulation by the Lindley recursion, with empirical tails."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WARMUP = 0.01
Z95 = 1.959963984540054


@dataclass(frozen=True)
class Trace:
    arrivals: np.ndarray
    departures: np.ndarray
    services: np.ndarray
    seed: int
    n: int

    @property
    def sojourn(self):
        return self.departures - self.arrivals


def _generator(seed):
    # Philox is counter based, so the seed alone fixes the stream
    return np.random.Generator(np.random.Philox(seed))


def lindley_departures(arrivals, services):
    """FIFO departures via ``W_{i+1} = [W_i + S_i - (a_{i+1} - a_i)]^+``."""
    n = len(arrivals)
    dep = np.empty(n)
    a = arrivals.tolist()
    s = services.tolist()
    w = 0.0
    for i in range(n):
        if i:
            w = w + s[i - 1] - (a[i] - a[i - 1])
            if w < 0.0:
                w = 0.0
        dep[i] = a[i] + w + s[i]
    return dep


def simulate_mm1(lam, mu, n, seed) -> Trace:
    if not (mu > lam > 0):
        raise ValueError("need mu > lambda > 0")
    if n < 1:
        raise ValueError("need at least one packet")
    rng = _generator(seed)
    gaps = rng.exponential(1.0 / lam, n)
    services = rng.exponential(1.0 / mu, n)
    arrivals = np.cumsum(gaps)
    return Trace(arrivals, lindley_departures(arrivals, services), services, int(seed), int(n))


def _exceedance(values, grid):
    v = np.sort(values)
    grid = np.asarray(grid, dtype=float)
    frac = (v.size - np.searchsorted(v, grid, side="right")) / v.size
    ci = Z95 * np.sqrt(frac * (1.0 - frac) / v.size)
    return frac, ci


def empirical_delay_tail(tr: Trace, d_grid, warmup=WARMUP):
    """``(d, P{D > d}, 95% half-width)`` rows from per-packet sojourn times.

    Consecutive sojourns are correlated, so the i.i.d. half-width is optimistic.
    """
    skip = int(warmup * tr.n)
    frac, ci = _exceedance(tr.sojourn[skip:], d_grid)
    return np.column_stack([np.asarray(d_grid, dtype=float), frac, ci])


def backlog_samples(tr: Trace, sample_interval, warmup=WARMUP):
    """Number in system sampled every ``sample_interval`` seconds."""
    if sample_interval <= 0:
        raise ValueError("sample_interval must be positive")
    skip = int(warmup * tr.n)
    start = tr.arrivals[skip] if skip < tr.n else tr.arrivals[0]
    t = np.arange(start, tr.arrivals[-1], sample_interval)
    if t.size == 0:
        t = np.array([start])
    arrived = np.searchsorted(tr.arrivals, t, side="right")
    # FIFO: departures are sorted
    left = np.searchsorted(tr.departures, t, side="right")
    return arrived - left


def empirical_backlog_tail(tr: Trace, x_grid, sample_interval, warmup=WARMUP):
    """``(x, P{B > x}, 95% half-width)`` from time-sampled backlog.

    The half-width treats samples as independent, which understates it for
    sampling intervals short against the busy-period length.
    """
    frac, ci = _exceedance(backlog_samples(tr, sample_interval, warmup), x_grid)
    return np.column_stack([np.asarray(x_grid, dtype=float), frac, ci])
