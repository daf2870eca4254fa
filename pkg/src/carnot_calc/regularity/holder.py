"""Little Hölder moduli of functions on Euclidean boxes."""

from __future__ import annotations

import numpy as np

from ..sampling import box_points, dyadic_radii, unit_directions
from .reports import DEFAULT_THRESHOLDS, HolderReport, Thresholds


def _value_norm(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.abs(x) if x.ndim == 1 else np.sum(np.abs(x), axis=-1)


def little_holder_modulus(
    phi,
    alpha: float,
    region,
    radii=None,
    n_base: int = 1024,
    n_offsets: int = 6,
    probe_points=None,
    seed: int = 0,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> HolderReport:
    """Scale table of sup |φ(b') − φ(b)| / |b' − b|^α over sampled pairs in ``region``.

    ``phi`` maps (N, d) arrays to (N,) or (N, k) arrays.  For every dyadic
    radius ρ_i the band modulus is the sup over pairs with ρ_i/2 < |b'−b| ≤ ρ_i
    and the reported modulus f(ρ_i) is the sup over all bands at or below ρ_i.
    ``probe_points`` are added to the quasi-random base points; use them for
    known kinks that uniform sampling would miss.
    """
    if not 0 < alpha <= 1:
        raise ValueError("exponent must lie in (0, 1]")
    d = region.dim
    if radii is None:
        radii = dyadic_radii(region.diameter / 4.0, 24)
    radii = np.asarray(radii, dtype=float)
    base = box_points(region, n_base, seed)
    if probe_points is not None:
        probes = np.asarray(probe_points, dtype=float).reshape(-1, d)
        base = np.vstack([base, probes[region.contains(probes)]])
    if len(base) == 0:
        raise ValueError("empty sampling grid")
    f_base = np.asarray(phi(base), dtype=float)

    fracs = 2.0 ** (-(np.arange(n_offsets) + 0.5) / n_offsets)
    band = np.zeros(len(radii))
    total = 0
    for i, rho in enumerate(radii):
        best = 0.0
        for a, frac in enumerate(fracs):
            dist = rho * frac
            if d == 1:
                u = np.ones((1, 1))
            else:
                u = unit_directions(len(base), d, seed + 7919 * (i + 1) + a)
            for u in (u, -u):
                other = base + dist * u
                ok = region.contains(other)
                if not ok.any():
                    continue
                diff = _value_norm(np.asarray(phi(other[ok]), dtype=float) - f_base[ok])
                total += int(ok.sum())
                best = max(best, float(diff.max()) / dist ** alpha)
        band[i] = best
    moduli = np.maximum.accumulate(band[::-1])[::-1]
    return HolderReport.build(alpha, radii, moduli, band, label="little_holder", samples=total, th=thresholds)


def pointwise_quotient(phi, x0, xs, alpha: float) -> np.ndarray:
    """|φ(x) − φ(x0)| / |x − x0|^α at the given points."""
    xs = np.asarray(xs, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    diff = _value_norm(np.asarray(phi(xs), dtype=float) - np.asarray(phi(x0[None, ...]), dtype=float))
    dist = np.linalg.norm((xs - x0).reshape(len(xs), -1), axis=-1)
    return diff / dist ** alpha
