import numpy as np
import pytest

from leaderlab.core import RngSpec
from leaderlab.wavelet import CoefficientPyramid


@pytest.fixture
def rng():
    return RngSpec(123456789)


def build_pyramid(arrays):
    """Pyramid from a list of arrays ordered finest (level 1) to coarsest."""
    coeffs = {j + 1: np.asarray(a, dtype=float) for j, a in enumerate(arrays)}
    return CoefficientPyramid(coeffs=coeffs)


def brute_force_leaders(pyramid, variant):
    """Enumerate every dyadic inclusion: the level-j cube at position k
    covers fine-level cells [k 2^(j-1), (k+1) 2^(j-1)) in level-1 units."""
    levels = pyramid.levels
    out = {}
    for j in levels:
        n_j = pyramid.n_at(j)
        one = np.zeros(n_j)
        for k in range(n_j):
            best = 0.0
            lo_fine = k * 2 ** (j - 1)
            hi_fine = (k + 1) * 2 ** (j - 1)
            for jp in levels:
                if jp > j:
                    continue
                scale = 2 ** (jp - 1)
                for kp in range(pyramid.n_at(jp)):
                    if kp * scale >= lo_fine and (kp + 1) * scale <= hi_fine:
                        best = max(best, abs(pyramid.coeffs[jp][kp]))
            one[k] = best
        out[j] = one
    if variant == "one_leader":
        return out
    three = {}
    for j in levels:
        arr = out[j]
        three[j] = np.maximum(np.maximum(np.roll(arr, 1), arr),
                              np.roll(arr, -1))
    return three


def naive_periodic_dwt(samples, lo, hi, j_max):
    """Scalar-level periodic filter bank, L1-normalized, for oracle use."""
    approx = np.asarray(samples, dtype=float).copy()
    out = {}
    for j in range(1, j_max + 1):
        m = approx.size
        half = m // 2
        det = np.zeros(half)
        app = np.zeros(half)
        for k in range(half):
            acc_d = 0.0
            acc_a = 0.0
            for t in range(len(lo)):
                acc_d += hi[t] * approx[(2 * k + t) % m]
                acc_a += lo[t] * approx[(2 * k + t) % m]
            det[k] = acc_d
            app[k] = acc_a
        out[j] = det * 2.0 ** (-j / 2.0)
        approx = app
    return out
