"""Shared generators for the test-suite."""
import numpy as np

from fronttrack.functionals import SnapFront, Snapshot
from fronttrack.riemann import fan_fronts


def random_snapshot(rng, m, n_jumps=6, eps=0.2, bound=1.5):
    """Admissible fronts from consecutive Riemann fans of random states."""
    values = rng.uniform(-bound, bound, n_jumps + 1)
    xs = np.sort(rng.uniform(-5, 5, n_jumps))
    fronts = []
    fid = 0
    for x, a, b in zip(xs, values[:-1], values[1:]):
        for k, w in enumerate(fan_fronts(m, a, b, eps)):
            fronts.append(SnapFront(x + 1e-3 * k, w.u_left, w.u_right, w.kind, w.speed, fid))
            fid += 1
    return Snapshot(0.0, tuple(fronts))


def naive_pairs(sig, weight):
    n = len(sig)
    return sum(weight(i, j) * sig[i] * sig[j] for i in range(n) for j in range(i + 1, n))
