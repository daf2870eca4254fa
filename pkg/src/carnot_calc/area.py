"""Perimeter of intrinsic subgraphs (k = 1) and the horizontal unit normal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regularity.broad import omega_matrix
from .regularity.differentiability import GradientError, horizontal_derivatives
from .regularity.reports import VerificationReport, _clean
from .sampling import box_points
from .splitting import Box, GraphFunction, graph_map


@dataclass
class PerimeterResult:
    value: float
    quadrature: dict
    density_samples: np.ndarray
    error_estimate: float
    extrapolated: float

    def to_dict(self) -> dict:
        return _clean(
            {
                "value": self.value,
                "extrapolated": self.extrapolated,
                "error_estimate": self.error_estimate,
                "quadrature": self.quadrature,
                "density_min": float(self.density_samples.min()),
                "density_max": float(self.density_samples.max()),
            }
        )


def _require_k1(phi: GraphFunction) -> None:
    if phi.splitting.k != 1:
        raise ValueError("perimeter and unit normal need a one-dimensional L (k = 1)")


def gradient_field(phi: GraphFunction, w, omega=None, f=None, t: float = 1e-4, s: float = 1e-5) -> np.ndarray:
    """∇^φφ at many W-points, shape (N, k, m − k).

    Priority: analytic ω, then the level-set formula with f, then central
    intrinsic difference quotients [φ(π_W(Φ(w)·tX_j)) − φ(π_W(Φ(w)·(−tX_j)))]/(2t).
    """
    sp = phi.splitting
    G = sp.group
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if omega is not None:
        return omega_matrix(omega, w, sp)
    P = graph_map(phi, w)
    if f is not None:
        Xf = horizontal_derivatives(G, f, P, s)  # (N, k, m)
        A, B = Xf[..., :sp.k], Xf[..., sp.k:]
        if np.any(np.abs(np.linalg.det(A)) < 1e-12):
            raise GradientError("X_1 f vanishes on the graph")
        return -np.linalg.solve(A, B)
    cols = []
    for j in sp.horizontal_w:
        e = np.zeros(G.n)
        e[j - 1] = t
        plus = phi(sp.w_coords(sp.project_W(G.multiply(P, e))), check=False)
        minus = phi(sp.w_coords(sp.project_W(G.multiply(P, -e))), check=False)
        cols.append((plus - minus) / (2 * t))
    return np.stack(cols, axis=-1)


def _midpoints(box: Box, n: int) -> np.ndarray:
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in zip(box.lo, box.hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)


def _integrate(density, box: Box, n: int):
    pts = _midpoints(box, n)
    vals = density(pts)
    vol = float(np.prod(box.hi - box.lo))
    return vol * float(np.sum(vals)) / len(vals), vals


def _perimeter(density, box: Box, n: int, name: str) -> PerimeterResult:
    coarse, _ = _integrate(density, box, n)
    fine, vals = _integrate(density, box, 2 * n)
    return PerimeterResult(
        value=fine,
        quadrature={"rule": "tensor_midpoint", "cells_per_axis": [n, 2 * n], "box": box.to_dict(), "density": name},
        density_samples=vals,
        error_estimate=abs(fine - coarse) / 3.0,
        extrapolated=fine + (fine - coarse) / 3.0,
    )


def perimeter(phi: GraphFunction, box: Box, omega=None, f=None, n: int = 16) -> PerimeterResult:
    """∫_box sqrt(1 + |∇^φφ|²) over a W-box, midpoint rule on n and 2n cells per axis.

    ``value`` is the finer sum; ``error_estimate`` is the Richardson
    estimate |fine − coarse|/3 for a second-order rule.
    """
    _require_k1(phi)
    if box.dim != phi.splitting.dim_w:
        raise ValueError("box dimension must equal dim W")

    def density(w):
        g = gradient_field(phi, w, omega=omega, f=f)
        return np.sqrt(1.0 + np.sum(g ** 2, axis=(-2, -1)))

    src = "omega" if omega is not None else ("level_set" if f is not None else "difference_quotient")
    return _perimeter(density, box, n, src)


def perimeter_level_set(phi: GraphFunction, box: Box, f, n: int = 16, s: float = 1e-5) -> PerimeterResult:
    """Same integral with density |∇_H f| / |X_1 f| evaluated on the graph."""
    _require_k1(phi)
    G = phi.splitting.group

    def density(w):
        Xf = horizontal_derivatives(G, f, graph_map(phi, w), s)[..., 0, :]
        return np.linalg.norm(Xf, axis=-1) / np.abs(Xf[..., 0])

    return _perimeter(density, box, n, "horizontal_gradient_ratio")


def unit_normal(phi: GraphFunction, a, grad=None, omega=None, f=None) -> np.ndarray:
    """ν = (−1, ∇_2, ..., ∇_m) / sqrt(1 + |∇|²) at a."""
    _require_k1(phi)
    a = np.asarray(a, dtype=float)
    if grad is None:
        grad = gradient_field(phi, a, omega=omega, f=f)[0]
    g = np.asarray(grad, dtype=float).reshape(-1)
    if not np.all(np.isfinite(g)):
        raise GradientError("non-finite intrinsic gradient")
    v = np.concatenate([[-1.0], g])
    return v / np.sqrt(1.0 + g @ g)


def smooth_approximation_check(
    phi: GraphFunction,
    family,
    ball: Box,
    omega,
    eps_grid=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    n_points: int = 512,
    tol: float = 1e-1,
    seed: int = 0,
) -> VerificationReport:
    """Uniform convergence of φ_ε → φ and D^{φ_ε}φ_ε → ω on sampled points of ``ball``.

    Each row of the table is (ε, sup|φ_ε − φ|, sup|D^{φ_ε}φ_ε − ω|).  The
    residual is the larger of the two at the smallest ε.
    """
    from .catalog import intrinsic_gradient_c1

    pts = box_points(ball, n_points, seed)
    pts = pts[phi.in_domain(pts)]
    target_phi = phi(pts, check=False)
    target_om = omega_matrix(omega, pts, phi.splitting)
    rows = []
    for eps in sorted(eps_grid, reverse=True):
        fe = family(eps)
        if not np.all(fe.in_domain(pts)):
            raise ValueError(f"family member at eps={eps} is not defined on the ball")
        r1 = float(np.max(np.abs(fe(pts, check=False) - target_phi)))
        r2 = float(np.max(np.abs(intrinsic_gradient_c1(fe)(pts) - target_om)))
        rows.append([float(eps), r1, r2])
    return VerificationReport(
        check="smooth_approximation",
        grid={"ball": ball.to_dict(), "points": int(len(pts)), "eps": [r[0] for r in rows]},
        max_residual=max(rows[-1][1], rows[-1][2]),
        tolerance=tol,
        residuals=rows,
    )
