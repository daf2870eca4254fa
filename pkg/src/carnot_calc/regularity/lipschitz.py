"""Intrinsic Lipschitz estimates and Hölder constants along integral curves."""

from __future__ import annotations

import math

import numpy as np

from ..sampling import anisotropic_unit_ball, box_points, dyadic_radii
from ..splitting import GraphFunction, graph_map
from .reports import DEFAULT_THRESHOLDS, Thresholds, VerificationReport, log_slope


def cone_ratio(phi: GraphFunction, a, b) -> tuple:
    """‖π_L(Φ(a)^{-1}Φ(b))‖ and ‖π_W(Φ(a)^{-1}Φ(b))‖ for paired W-points.

    The ratio of the two is ‖φ_q(b')‖/‖b'‖ with q = Φ(a)^{-1} and
    b' = π_W(q·Φ(b)), i.e. the translated-function quotient at a.
    """
    sp = phi.splitting
    G = sp.group
    g = G.multiply(G.inverse(graph_map(phi, a)), graph_map(phi, b))
    num = np.sum(np.abs(sp.l_coords(g)), axis=-1)
    den = G.hom_norm(sp.project_W(g))
    return num, den


def intrinsic_lipschitz_check(
    phi: GraphFunction,
    region,
    L_guess=None,
    n_base: int = 256,
    n_offsets: int = 8,
    radii=None,
    seed: int = 0,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> VerificationReport:
    """Empirical intrinsic Lipschitz constant over pairs a, b = a·δ_r(u) in ``region``.

    The constant is tracked per scale r.  If the per-scale constants grow as
    r shrinks (log-log slope at most ``thresholds.unbounded_slope``) the
    constant is declared divergent and the report fails.
    """
    sp = phi.splitting
    G = sp.group
    if radii is None:
        radii = dyadic_radii(1.0, 12)
    radii = np.asarray(radii, dtype=float)
    base = box_points(region, n_base, seed)
    base = base[phi.in_domain(base)]
    units = anisotropic_unit_ball(n_offsets, sp.w_degrees(), seed + 1)
    per_scale = np.zeros(len(radii))
    for i, r in enumerate(radii):
        off = sp.w_coords(G.dilate(r, sp.embed_w(units)))
        a = np.repeat(base, len(off), axis=0)
        b = sp.w_coords(G.multiply(sp.embed_w(a), sp.embed_w(np.tile(off, (len(base), 1)))))
        ok = region.contains(b) & phi.in_domain(b)
        if not ok.any():
            continue
        num, den = cone_ratio(phi, a[ok], b[ok])
        keep = den > 0
        if keep.any():
            per_scale[i] = float(np.max(num[keep] / den[keep]))
    L = float(per_scale.max())
    slope = log_slope(radii, per_scale) if L > 0 else 0.0
    divergent = not math.isnan(slope) and slope <= thresholds.unbounded_slope
    tol = math.inf if L_guess is None else float(L_guess)
    return VerificationReport(
        check="lipschitz",
        grid={"region": region.to_dict(), "n_base": int(len(base)), "n_offsets": n_offsets, "radii": radii.tolist()},
        max_residual=math.inf if divergent else L,
        tolerance=tol,
        residuals=[[float(r), float(v)] for r, v in zip(radii, per_scale)],
        details={"estimate": L, "scale_slope": slope, "divergent": divergent},
    )


def curve_holder_bounds(phi: GraphFunction, curves: dict, max_samples: int = 200) -> dict:
    """{direction label: sup ‖φ(γ(s))^{-1}φ(γ(t))‖ / |t − s|^{1/deg}} over the given curves."""
    sp = phi.splitting
    out = {}
    for j, family in curves.items():
        deg = int(sp.group.degrees[int(j) - 1])
        best = 0.0
        for gamma in family:
            idx = np.unique(np.linspace(0, len(gamma.times) - 1, min(max_samples, len(gamma.times))).astype(int))
            t = gamma.times[idx]
            v = phi(gamma.states[idx], check=False)
            if len(t) < 2:
                raise ValueError("degenerate curve: fewer than two samples")
            dt = np.abs(t[:, None] - t[None, :])
            dv = np.sum(np.abs(v[:, None, :] - v[None, :, :]), axis=-1)
            mask = dt > 0
            best = max(best, float(np.max(dv[mask] / dt[mask] ** (1.0 / deg))))
        out[int(j)] = best
    return out


def lipschitz_curve_factor(L_estimate: float, curve_constants: dict) -> float:
    """max(C_curve/L, L/C_curve) with C_curve the largest curve constant; 1 if both vanish."""
    c = max(curve_constants.values()) if curve_constants else 0.0
    if c == 0 and L_estimate == 0:
        return 1.0
    if c == 0 or L_estimate == 0:
        return math.inf
    return max(c / L_estimate, L_estimate / c)
