"""Worked examples as named graph functions with their analytic companions.

Conventions at discontinuities: χ(0) = 1 and sgn(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import group_core as gc
from .fields import ProjectedField, eval_field
from .splitting import Box, GraphFunction, Splitting, constant_function, graph_map


def chi(x) -> np.ndarray:
    """Indicator of x >= 0 (so χ(0) = 1)."""
    return (np.asarray(x) >= 0).astype(float)


def sgn(x) -> np.ndarray:
    return np.sign(x)


@dataclass
class CatalogEntry:
    name: str
    group: Optional[gc.GroupSpec]
    splitting: Optional[Splitting]
    phi: object
    omega: Optional[Callable] = None
    curves: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    region: Optional[Box] = None
    a0: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    family: Optional[Callable] = None
    level_set: Optional[Callable] = None
    extra: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "group": None if self.group is None else self.group.name,
            "k": None if self.splitting is None else self.splitting.k,
            "params": self.params,
            "expected": self.expected,
        }


# generic helpers ----------------------------------------------------------


def intrinsic_gradient_c1(phi: GraphFunction) -> Callable:
    """ω = D^φφ for C^1 φ: column j is the Euclidean Jacobian applied to D^φ_{X_j}."""
    sp = phi.splitting

    def omega(w):
        w = np.asarray(w, dtype=float)
        J = phi.jacobian(w)
        cols = [J @ eval_field(ProjectedField(phi, j), w, check=False)[..., None] for j in sp.horizontal_w]
        return np.concatenate(cols, axis=-1)

    return omega


def level_set_function(phi: GraphFunction) -> Callable:
    """f(p) = π_L(p) − φ(π_W(p)); the graph of φ is {f = 0}."""
    sp = phi.splitting

    def f(p):
        p = np.asarray(p, dtype=float)
        return sp.l_coords(p) - phi(sp.w_coords(sp.project_W(p)), check=False)

    return f


def _poly_entry(sp: Splitting, name: str, func, grad, region, expected=None) -> CatalogEntry:
    phi = GraphFunction(sp, func, domain=None, smoothness="C1", gradient=grad, name=name)
    return CatalogEntry(
        name=name,
        group=sp.group,
        splitting=sp,
        phi=phi,
        omega=intrinsic_gradient_c1(phi),
        expected=expected or {"broadstar": "pass", "broad": "pass", "vholder": "vanishing", "uid": "pass"},
        region=region,
        a0=region.center,
        level_set=level_set_function(phi),
    )


def smooth_catalog(sp: Splitting, region: Optional[Box] = None) -> list:
    """Five C^1 test functions defined on any splitting with k = 1.

    They only use the first horizontal W coordinate ``u`` and the first and
    last vertical coordinates ``v``, ``z``, so the same formulas make sense
    in every group.
    """
    if sp.k != 1:
        raise ValueError("the smooth catalog is written for k = 1")
    d = sp.dim_w
    iu = 0
    iv = sp.group.m - sp.k  # first vertical coordinate in W-coordinates
    iz = d - 1
    if region is None:
        region = Box.cube(d, 0.5)

    def zeros_grad(w):
        return np.zeros(np.shape(w)[:-1] + (1, d))

    def unit(i, val):
        out = np.zeros(np.shape(val) + (1, d))
        out[..., 0, i] = val
        return out

    entries = []
    zero = constant_function(sp, 0.0, name="zero")
    entries.append(
        CatalogEntry("zero", sp.group, sp, zero, omega=intrinsic_gradient_c1(zero),
                     expected={"broadstar": "pass", "broad": "pass", "vholder": "vanishing", "uid": "pass"},
                     region=region, a0=region.center, level_set=level_set_function(zero))
    )
    entries.append(
        _poly_entry(sp, "linear", lambda w: 0.7 * w[..., iu], lambda w: unit(iu, 0.7 * np.ones(np.shape(w)[:-1])), region)
    )

    def quad(w):
        return 0.3 * w[..., iu] ** 2 - 0.2 * w[..., iu] * w[..., iv] + 0.25 * w[..., iv]

    def quad_grad(w):
        g = zeros_grad(w)
        g[..., 0, iu] = 0.6 * w[..., iu] - 0.2 * w[..., iv]
        g[..., 0, iv] += -0.2 * w[..., iu] + 0.25
        return g

    entries.append(_poly_entry(sp, "quadratic", quad, quad_grad, region))

    def trig(w):
        return 0.2 * np.sin(w[..., iu] + 2.0 * w[..., iz]) + 0.1 * np.cos(w[..., iv])

    def trig_grad(w):
        g = zeros_grad(w)
        c = 0.2 * np.cos(w[..., iu] + 2.0 * w[..., iz])
        g[..., 0, iu] += c
        g[..., 0, iz] += 2.0 * c
        g[..., 0, iv] += -0.1 * np.sin(w[..., iv])
        return g

    entries.append(_poly_entry(sp, "trig", trig, trig_grad, region))

    def expo(w):
        return 0.1 * np.exp(0.5 * np.sum(w, axis=-1))

    def expo_grad(w):
        v = 0.05 * np.exp(0.5 * np.sum(w, axis=-1))
        return np.broadcast_to(v[..., None, None], np.shape(w)[:-1] + (1, d)).copy()

    entries.append(_poly_entry(sp, "exp", expo, expo_grad, region))
    return entries


def heisenberg_linear(c: float = 1.0, n: int = 1) -> CatalogEntry:
    """φ(x_2, ..., x_{2n+1}) = c·x_2 on H^n with k = 1; ∇^φφ = (c, 0, ..., 0)."""
    G = gc.heisenberg(n)
    sp = Splitting(G, 1)
    d = sp.dim_w

    def grad(w):
        g = np.zeros(np.shape(w)[:-1] + (1, d))
        g[..., 0, 0] = c
        return g

    region = Box.unit(d)
    phi = GraphFunction(sp, lambda w: c * w[..., 0], smoothness="C1", gradient=grad, name="heisenberg_linear")

    def omega(w):
        out = np.zeros(np.shape(w)[:-1] + (1, G.m - 1))
        out[..., 0, 0] = c
        return out

    return CatalogEntry(
        "heisenberg_linear", G, sp, phi, omega=omega, region=region, a0=region.center,
        params={"c": c, "n": n},
        expected={"lipschitz": "pass", "uid": "pass", "broadstar": "pass", "broad": "pass", "vholder": "vanishing"},
        level_set=level_set_function(phi),
    )


# Engel φ_α -----------------------------------------------------------------


def engel_phi_alpha(alpha: float) -> CatalogEntry:
    """φ_α(x_2, x_3, x_4) = x_4^α χ_{x_4 ≥ 0} on the Engel group with L = exp(ℝX_1)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    a = float(alpha)
    G = gc.engel()
    sp = Splitting(G, 1)

    def phi_f(w):
        x4 = w[..., 2]
        return np.where(x4 >= 0, np.abs(x4) ** a, 0.0)

    def phi_grad(w):
        x4 = w[..., 2]
        g = np.zeros(np.shape(w)[:-1] + (1, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            g[..., 0, 2] = np.where(x4 > 0, a * np.abs(x4) ** (a - 1), 0.0)
        return g

    def omega(w):
        x4 = np.asarray(w)[..., 2]
        with np.errstate(divide="ignore"):
            val = np.where(x4 >= 0, 0.5 * a * np.abs(x4) ** (3 * a - 1), 0.0)
        return val[..., None, None]

    def curve_x3(A, t):
        """Closed-form D_{X_3} curves for 0 < α < 1: A is (N, 3) starts, t is (T,); returns (N, T, 3).

        From x_4 < 0 the curve is a straight line; from x_4 >= 0 it is the
        branch x_4(t) = ((1 − α)(t + x_4^{1−α}/(1 − α)))^{1/(1−α)}, clamped to 0
        once the bracket turns negative.
        """
        A = np.asarray(A, dtype=float)
        tt = np.asarray(t, dtype=float)[None, :]
        x2, x3, x4 = A[:, 0:1], A[:, 1:2], A[:, 2:3]
        p = 1.0 / (1.0 - a)
        c = np.where(x4 > 0, np.abs(x4) ** (1.0 - a) / (1.0 - a), 0.0)
        grow = ((1.0 - a) * np.maximum(tt + c, 0.0)) ** p
        z = np.where(x4 >= 0, grow, x4 + 0.0 * tt)
        return np.stack([x2 + 0.0 * tt, x3 + tt, z], axis=-1)

    def curve_x3_paired(A, t):
        """Endpoints E_3(A[r], t[r]) for row-paired starts and times."""
        A = np.asarray(A, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.empty_like(A)
        for s in np.unique(t):
            rows = t == s
            out[rows] = curve_x3(A[rows], np.array([s]))[:, 0]
        return out

    def curve_x4_paired(A, t):
        out = np.array(A, dtype=float, copy=True)
        out[:, 2] += t
        return out

    def family(eps):
        e3 = eps ** (1.0 / 3.0)

        def f(w):
            x4 = w[..., 2]
            return np.where(x4 >= 0, (np.abs(x4) ** (3 * a) + eps) ** (1.0 / 3.0), e3)

        def g(w):
            x4 = w[..., 2]
            out = np.zeros(np.shape(w)[:-1] + (1, 3))
            ax = np.abs(x4)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(x4 > 0, (ax ** (3 * a) + eps) ** (-2.0 / 3.0) * a * ax ** (3 * a - 1), 0.0)
            out[..., 0, 2] = d
            return out

        return GraphFunction(sp, f, domain=Box.cube(3), smoothness="C1", gradient=g, name=f"engel_phi_alpha_eps{eps:g}")

    curves = {"vertical": {4: curve_x4_paired}}
    if a < 1.0:
        curves["vertical"][3] = curve_x3_paired
        curves["x3"] = curve_x3

    uid_ok = a > 1.0 / 3.0
    expected = {
        "uid": "pass" if uid_ok else "fail",
        "vholder": "vanishing" if uid_ok else "nonvanishing",
    }
    if uid_ok:
        expected.update({"broadstar": "pass", "broad": "pass"})
    return CatalogEntry(
        name="engel_phi_alpha",
        group=G,
        splitting=sp,
        phi=GraphFunction(sp, phi_f, domain=Box.cube(3), smoothness="continuous", gradient=phi_grad, name=f"engel_phi_alpha_{a:g}"),
        omega=omega,
        curves=curves,
        expected=expected,
        region=Box.cube(3, 0.5),
        a0=np.zeros(3),
        params={"alpha": a},
        family=family,
    )


# Notched absolute value on ℝ ------------------------------------------------


def notched_abs_phi(x) -> np.ndarray:
    """|x|·Π_n φ_n(x), φ_n(x) = n³|x − 1/n| on I_n = [1/n − 1/n³, 1/n + 1/n³], else 1.

    The I_n are disjoint, so at most one factor differs from 1 and the
    product is evaluated exactly.
    """
    x = np.asarray(x, dtype=float)
    out = np.abs(x)
    pos = x > 0
    xp = np.where(pos, x, 1.0)
    n0 = np.rint(1.0 / xp)
    for shift in (-1.0, 0.0, 1.0):
        n = n0 + shift
        valid = pos & (n >= 2)
        nn = np.where(valid, n, 2.0)
        dist = np.abs(x - 1.0 / nn)
        inside = valid & (dist <= 1.0 / nn ** 3)
        out = np.where(inside, out * nn ** 3 * dist, out)
    return out


def notch_knots(n_max: int = 2000) -> np.ndarray:
    n = np.arange(2, n_max + 1, dtype=float)
    return np.concatenate([1.0 / n, 1.0 / n + 1.0 / n ** 3, 1.0 / n - 1.0 / n ** 3])


def notched_abs() -> CatalogEntry:
    return CatalogEntry(
        name="notched_abs",
        group=None,
        splitting=None,
        phi=lambda x: notched_abs_phi(np.asarray(x)[..., 0]),
        expected={"holder_near_zero": "fail", "holder_away_from_zero": "pass", "pointwise_at_zero": "pass"},
        region=Box([-0.1], [0.1]),
        a0=np.zeros(1),
        params={"alpha": 0.5},
        extra={"probe_points": notch_knots()[:, None], "away_region": Box([0.05], [1.0])},
    )


def notch_quotient(n: int) -> float:
    """(φ(1/n + 1/n³) − φ(1/n)) / (1/n³)^{1/2} evaluated numerically."""
    x = 1.0 / n
    y = 1.0 / n + 1.0 / n ** 3
    return float((notched_abs_phi(y) - notched_abs_phi(x)) / (y - x) ** 0.5)


# Heisenberg characteristic point -------------------------------------------------


def heisenberg_characteristic() -> CatalogEntry:
    """φ(0, x_2, x_3) = sgn(x_3)|x_3|^{2/3} in H^1; the origin is a characteristic point."""
    G = gc.heisenberg(1)
    sp = Splitting(G, 1)

    def f(w):
        x3 = w[..., 1]
        return np.sign(x3) * np.abs(x3) ** (2.0 / 3.0)

    def grad(w):
        x3 = w[..., 1]
        g = np.zeros(np.shape(w)[:-1] + (1, 2))
        with np.errstate(divide="ignore"):
            g[..., 0, 1] = np.where(x3 != 0, (2.0 / 3.0) * np.abs(x3) ** (-1.0 / 3.0), np.inf)
        return g

    def omega(w):
        x3 = np.asarray(w)[..., 1]
        return ((2.0 / 3.0) * np.sign(x3) * np.abs(x3) ** (1.0 / 3.0))[..., None, None]

    return CatalogEntry(
        name="heisenberg_characteristic",
        group=G,
        splitting=sp,
        phi=GraphFunction(sp, f, domain=Box.cube(2), smoothness="continuous", gradient=grad, name="heisenberg_characteristic"),
        omega=omega,
        expected={"uid": "pass", "broadstar": "pass", "phi_squared_c1": "pass", "tangent_at_origin": "x3=0"},
        region=Box.cube(2, 0.5),
        a0=np.zeros(2),
    )


def characteristic_parametrization(x2, x3) -> np.ndarray:
    """Closed form of the graph point over (0, x_2, x_3)."""
    x2 = np.asarray(x2, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    s = np.sign(x3) * np.abs(x3) ** (2.0 / 3.0)
    return np.stack([s, x2, x3 - 0.5 * x2 * s], axis=-1)


def sigma1_normal(x1, x2) -> np.ndarray:
    """Euclidean normal (½x_2 − (3/2)x_1^{1/2}, ½x_1, 1) of the sheet x_1 > 0."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.stack([0.5 * x2 - 1.5 * np.sqrt(x1), 0.5 * x1, np.ones_like(x1)], axis=-1)


def fitted_tangent_normal(entry: CatalogEntry, scale: float = 1e-8, n: int = 400, seed: int = 0) -> np.ndarray:
    """Unit normal of the least-squares plane through graph points with |x_1|, |x_2| ≤ scale."""
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(-scale, scale, n)
    x2 = rng.uniform(-scale, scale, n)
    x3 = np.sign(x1) * np.abs(x1) ** 1.5  # w-coordinate with φ = x1
    pts = graph_map(entry.phi, np.stack([x2, x3], axis=-1))
    pts = np.vstack([np.zeros(3), pts])
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred / scale, full_matrices=False)
    nrm = vt[-1]
    return nrm * np.sign(nrm[2]) if nrm[2] != 0 else nrm


def squared_derivative_table(entry: CatalogEntry, radii=None) -> tuple:
    """sup |∂_{x_3}(φ²)| on |x_3| ≤ r; φ² is C^1 with zero derivative at 0 iff this decays."""
    if radii is None:
        radii = 10.0 ** -np.arange(1, 9, dtype=float)
    sups = []
    for r in radii:
        x3 = np.linspace(-r, r, 2001)
        val = (4.0 / 3.0) * np.sign(x3) * np.abs(x3) ** (1.0 / 3.0)  # analytic
        sups.append(float(np.abs(val).max()))
    return np.asarray(radii), np.asarray(sups)


# registry ------------------------------------------------------------------------


def _smooth_named(name):
    def build(group="h2", **_):
        G = gc.builtin(group) if isinstance(group, str) else group
        entries = {e.name: e for e in smooth_catalog(Splitting(G, 1))}
        e = entries[name]
        e.name = f"smooth_{name}"
        return e

    return build


REGISTRY = {
    "engel_phi_alpha": lambda alpha=0.5, **_: engel_phi_alpha(alpha),
    "notched_abs": lambda **_: notched_abs(),
    "heisenberg_characteristic": lambda **_: heisenberg_characteristic(),
    "heisenberg_linear": lambda c=1.0, n=1, **_: heisenberg_linear(c, int(n)),
    "smooth_zero": _smooth_named("zero"),
    "smooth_linear": _smooth_named("linear"),
    "smooth_quadratic": _smooth_named("quadratic"),
    "smooth_trig": _smooth_named("trig"),
    "smooth_exp": _smooth_named("exp"),
}


def get(name: str, **params) -> CatalogEntry:
    if name not in REGISTRY:
        raise KeyError(f"unknown catalog entry '{name}'; known: {sorted(REGISTRY)}")
    return REGISTRY[name](**params)
