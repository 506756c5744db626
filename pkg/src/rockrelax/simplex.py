"""Geometry of the probability simplex: projection, normal cones, sampling."""
from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .extreal import check_simplex


def project_to_simplex(z) -> np.ndarray:
    """Euclidean projection onto {q >= 0, sum q = 1} by sort-and-threshold.

    O(s log s), exact up to floating error: q_i = max(0, z_i - tau) with the
    threshold tau chosen so the result sums to one.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == 0:
        raise ValueError("cannot project an empty vector")
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, z.size + 1)
    cond = u - css / ks > 0
    k = int(np.nonzero(cond)[0][-1]) + 1
    tau = css[k - 1] / k
    return np.maximum(z - tau, 0.0)


def projection_threshold(z, q) -> float:
    """The KKT threshold tau with q_i = max(0, z_i - tau)."""
    z = np.asarray(z, dtype=float)
    q = np.asarray(q, dtype=float)
    pos = q > 0
    return float(np.mean(z[pos] - q[pos]))


def clamp_to_simplex(q, atol: float = 1e-12) -> np.ndarray:
    """Zero out components within -atol of 0 and renormalize.

    Downstream divergence conventions need exact zeros to trigger the
    0*Phi(0/0) = 0 branch, so tiny negatives are not left in place.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float)).copy()
    if np.any(q < -atol):
        raise ValueError("component below simplex tolerance")
    q[q < 0] = 0.0
    total = q.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"vector sums to {total}, not renormalizable")
    return q / total


def normal_cone_distance(q, w, tol: float = 1e-10) -> float:
    """Distance from w to the normal cone of the simplex at q.

    N(q) = {v : v_i = mu on the support of q, v_i <= mu off it}; the squared
    distance is a smooth convex function of the single scalar mu.
    """
    q = check_simplex(q)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != q.size:
        raise ValueError("dimension mismatch")
    pos = q > 0

    def sq_dist(mu: float) -> float:
        d = np.sum((w[pos] - mu) ** 2)
        d += np.sum(np.maximum(w[~pos] - mu, 0.0) ** 2)
        return d

    lo = float(w.min()) - 1.0
    hi = float(w.max()) + 1.0
    res = minimize_scalar(sq_dist, bounds=(lo, hi), method="bounded",
                          options={"xatol": tol * 1e-2})
    return float(np.sqrt(max(res.fun, 0.0)))


def in_normal_cone(q, w, tol: float = 1e-8) -> bool:
    return normal_cone_distance(q, w) <= tol


def sample_empirical(p, count: int, seed: int) -> np.ndarray:
    """Relative frequencies of `count` i.i.d. category draws from p.

    Uses numpy's PCG64 generator (counter-based, 64-bit) keyed by the seed;
    runs with the same seed are bit-reproducible.
    """
    p = check_simplex(p)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(count, p / p.sum())
    return counts / float(count)


GENERATOR_ID = "numpy-PCG64"


def simplex_vertices(s: int) -> np.ndarray:
    return np.eye(s)
