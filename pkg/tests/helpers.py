"""Random curves and bounding functions shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from sncalc.bounding import Constant, Exponential, PoissonChernoff, Scale, Sum, ZeroBeyond
from sncalc.curve import Curve

LATTICE = 1.0 / 8.0


def lattice_convex(rng, max_segments=4, max_time=4.0, max_start=4.0):
    """Convex curve with integer slopes >= 1 and breakpoints and start value on a 1/8 lattice."""
    n = int(rng.integers(1, max_segments + 1))
    cuts = rng.choice(np.arange(1, int(max_time / LATTICE) + 1), size=n - 1, replace=False)
    times = np.concatenate([[0.0], np.sort(cuts) * LATTICE])
    slopes = np.sort(rng.integers(1, 11, size=n)).astype(float)
    v0 = float(rng.integers(0, int(max_start / LATTICE) + 1)) * LATTICE
    values = v0 + np.concatenate([[0.0], np.cumsum(slopes[:-1] * np.diff(times))])
    return Curve(tuple(times), tuple(values), tuple(slopes))


def random_curve(rng, max_segments=5, continuous=True):
    """Arbitrary non-decreasing piecewise-linear curve (convex or not)."""
    n = int(rng.integers(1, max_segments + 1))
    times = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 5.0, size=n - 1))])
    times = np.unique(times)
    n = times.size
    slopes = rng.uniform(0.0, 6.0, size=n)
    values = [float(rng.uniform(0.0, 3.0))]
    for i in range(1, n):
        jump = 0.0 if continuous else float(rng.uniform(0.0, 1.0)) * (rng.random() < 0.5)
        values.append(values[-1] + slopes[i - 1] * (times[i] - times[i - 1]) + jump)
    return Curve(tuple(times), tuple(values), tuple(slopes))


def random_bf(rng):
    """A non-increasing bounding function of class G drawn from a few families."""
    kind = rng.integers(0, 4)
    if kind == 0:
        return Exponential(float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.2, 3.0)))
    if kind == 1:
        return PoissonChernoff(float(rng.uniform(1.0, 30.0)), float(rng.uniform(0.5, 3.0)))
    if kind == 2:
        return Sum(
            (
                Exponential(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.2, 3.0))),
                Scale(float(rng.uniform(0.1, 1.0)), Exponential(1.0, float(rng.uniform(0.2, 3.0)))),
            )
        )
    return Sum(
        (
            Exponential(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.5, 2.0))),
            ZeroBeyond(Constant(float(rng.uniform(0.0, 0.5))), float(rng.uniform(0.5, 4.0))),
        )
    )


seeds = st.integers(min_value=0, max_value=2**32 - 1)
