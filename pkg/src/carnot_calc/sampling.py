"""Seeded quasi-random samplers and a small order-preserving parallel map."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import qmc

JOBS_ENV = "CARNOT_CALC_JOBS"


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sobol(n: int, d: int, seed: int) -> np.ndarray:
    """At least n scrambled Sobol points in [0,1)^d (rounded up to a power of two)."""
    if n <= 0:
        return np.zeros((0, d))
    m = max(0, math.ceil(math.log2(n)))
    return qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)[:n]


def box_points(box, n: int, seed: int, include_center: bool = True) -> np.ndarray:
    u = sobol(n, box.dim, seed)
    pts = box.lo + u * (box.hi - box.lo)
    if include_center:
        pts = np.vstack([box.center[None, :], pts])
    return pts


def unit_directions(n: int, d: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def anisotropic_unit_ball(n: int, degrees, seed: int) -> np.ndarray:
    """Points u with Σ|u_l|^{1/deg l} < 1, spread over all degrees."""
    degrees = np.asarray(degrees)
    d = degrees.size
    v = 2.0 * sobol(n, d, seed) - 1.0
    return np.sign(v) * (np.abs(v) / d) ** degrees


def dyadic_radii(top: float, count: int) -> np.ndarray:
    return top * 2.0 ** (-np.arange(count, dtype=float))


def parallel_map(fn, items, jobs: int = 1) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def chunks(n: int, jobs: int) -> list:
    """Split range(n) into at most ``jobs`` contiguous slices."""
    jobs = max(1, min(jobs, n)) if n else 1
    edges = np.linspace(0, n, jobs + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
