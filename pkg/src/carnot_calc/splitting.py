"""Splittings G = W·L with L = exp span{X_1..X_k} horizontal, and intrinsic graphs.

W-points are handled in W-coordinates (the last n-k exponential
coordinates); ``Splitting.embed_w`` pads them back to full points.
Values of graph functions are L-coordinates (length k).  Since L is an
abelian horizontal subgroup, multiplication inside L is coordinate addition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .group_core import GroupSpec


class DomainError(ValueError):
    """A point fell outside a graph function's domain."""


class SplittingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Splitting:
    group: GroupSpec
    k: int

    def __post_init__(self):
        G = self.group
        if not 1 <= self.k < G.m:
            raise SplittingError(f"need 1 <= k < m = {G.m}, got k = {self.k}")
        C = G.structure_constants
        k = self.k
        if np.any(C[:k, :k, :] != 0):
            raise SplittingError("span{X_1..X_k} is not a subgroup (brackets inside L are nonzero)")
        # W is an ideal: no bracket with a W element may have an L component
        if np.any(C[:, k:, :k] != 0) or np.any(C[k:, :, :k] != 0):
            raise SplittingError("span{X_k+1..X_n} is not an ideal")

    @property
    def n(self) -> int:
        return self.group.n

    @property
    def dim_w(self) -> int:
        return self.group.n - self.k

    @property
    def horizontal_w(self) -> range:
        """1-based labels of the horizontal directions of W: k+1..m."""
        return range(self.k + 1, self.group.m + 1)

    @property
    def vertical_w(self) -> range:
        return range(self.group.m + 1, self.group.n + 1)

    def w_degrees(self) -> np.ndarray:
        return self.group.degrees[self.k:]

    def w_names(self) -> tuple:
        return self.group.coord_names[self.k:]

    # coordinate plumbing ------------------------------------------------
    def embed_w(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1:] != (self.dim_w,):
            raise DomainError(f"W-points have {self.dim_w} coordinates, got shape {w.shape}")
        pad = np.zeros(w.shape[:-1] + (self.k,))
        return np.concatenate([pad, w], axis=-1)

    def embed_l(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.k,):
            raise DomainError(f"L-points have {self.k} coordinates, got shape {v.shape}")
        pad = np.zeros(v.shape[:-1] + (self.dim_w,))
        return np.concatenate([v, pad], axis=-1)

    def w_coords(self, g) -> np.ndarray:
        return np.asarray(g)[..., self.k:]

    def l_coords(self, g) -> np.ndarray:
        return np.asarray(g)[..., :self.k]

    # projections --------------------------------------------------------
    def project_L(self, g) -> np.ndarray:
        g = self.group.check_point(g)
        return self.embed_l(g[..., :self.k])

    def project_W(self, g) -> np.ndarray:
        g = self.group.check_point(g)
        out = self.group.multiply(g, -self.project_L(g))
        out[..., :self.k] = 0.0  # exact: the first layer of g·g_L^{-1} is g_1 - g_L = 0
        return out


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError(f"invalid box bounds {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, dim: int, half: float = 1.0, center=None) -> "Box":
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return cls(c - half, c + half)

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class PredicateDomain:
    """Membership test plus an approximate bounding box for samplers."""

    test: Callable
    bbox: Optional[Box] = None

    def contains(self, x) -> np.ndarray:
        return np.asarray(self.test(np.asarray(x, dtype=float)), dtype=bool)


SMOOTHNESS = ("continuous", "lipschitz", "C1")


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """φ: U ⊂ W → L in coordinates.

    ``func`` maps (..., n-k) arrays to (..., k) arrays (a (...,) result is
    accepted when k = 1).  ``gradient``, if given, is the Euclidean Jacobian
    with shape (..., k, n-k).  Evaluators must be re-entrant.
    """

    splitting: Splitting
    func: Callable
    domain: object = None
    smoothness: str = "continuous"
    gradient: Optional[Callable] = None
    name: str = "phi"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.smoothness not in SMOOTHNESS:
            raise ValueError(f"smoothness must be one of {SMOOTHNESS}")

    @property
    def k(self) -> int:
        return self.splitting.k

    def in_domain(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.domain is None:
            return np.ones(w.shape[:-1], dtype=bool)
        return self.domain.contains(w)

    def __call__(self, w, check: bool = True) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1:] != (self.splitting.dim_w,):
            raise DomainError(f"{self.name}: W-points have {self.splitting.dim_w} coordinates, got {w.shape}")
        if check and not np.all(self.in_domain(w)):
            raise DomainError(f"{self.name}: point outside domain")
        val = np.asarray(self.func(w), dtype=float)
        if self.k == 1 and val.shape == w.shape[:-1]:
            val = val[..., None]
        if val.shape != w.shape[:-1] + (self.k,):
            raise ValueError(f"{self.name}: expected output shape {w.shape[:-1] + (self.k,)}, got {val.shape}")
        return val

    def jacobian(self, w, h: float = 1e-6) -> np.ndarray:
        """Euclidean Jacobian (..., k, n-k); analytic if available, else central differences."""
        w = np.asarray(w, dtype=float)
        if self.gradient is not None:
            J = np.asarray(self.gradient(w), dtype=float)
            return J.reshape(w.shape[:-1] + (self.k, self.splitting.dim_w))
        cols = []
        for i in range(self.splitting.dim_w):
            e = np.zeros(self.splitting.dim_w)
            e[i] = h
            cols.append((self(w + e, check=False) - self(w - e, check=False)) / (2 * h))
        return np.stack(cols, axis=-1)

    def with_name(self, name: str) -> "GraphFunction":
        return replace(self, name=name)


def graph_map(phi: GraphFunction, w) -> np.ndarray:
    """Φ(w) = w·φ(w)."""
    sp = phi.splitting
    return sp.group.multiply(sp.embed_w(w), sp.embed_l(phi(w)))


def graph_inverse(sp: Splitting, g) -> tuple:
    """(W-coordinates of π_W g, L-coordinates of π_L g)."""
    return sp.w_coords(sp.project_W(g)), sp.l_coords(g)


def _translate_arg(sp: Splitting, q, a) -> np.ndarray:
    """W-coordinates of q_L^{-1}·q_W^{-1}·a·q_L = π_W(q^{-1}·a)."""
    G = sp.group
    qL = sp.project_L(q)
    qW = sp.project_W(q)
    inner = G.multiply(G.inverse(qW), sp.embed_w(a))
    return sp.w_coords(G.conjugate(qL, inner))


def translate_domain(phi: GraphFunction, q) -> PredicateDomain:
    """U_q = {a : π_W(q^{-1} a) ∈ U} as a predicate with a sampled bounding box."""
    sp = phi.splitting
    q = sp.group.check_point(q)
    base = phi.domain

    def test(a):
        return phi.in_domain(_translate_arg(sp, q, a))

    bbox = None
    src = base if isinstance(base, Box) else getattr(base, "bbox", None)
    if src is not None:
        # image of a lattice in the source box under the forward map b ↦ σ_q(b)
        axes = [np.linspace(lo, hi, 5) for lo, hi in zip(src.lo, src.hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, src.dim)
        img = translate_points(sp, q, grid)
        span = img.max(axis=0) - img.min(axis=0)
        bbox = Box(img.min(axis=0) - 0.1 * span, img.max(axis=0) + 0.1 * span)
    return PredicateDomain(test, bbox)


def translate_points(sp: Splitting, q, w) -> np.ndarray:
    """σ_q(w) = q_W·q_L·w·q_L^{-1}, the W-coordinates of π_W(q·Φ) for graph points over w."""
    G = sp.group
    qL = sp.project_L(q)
    qW = sp.project_W(q)
    inner = G.conjugate(-qL, sp.embed_w(w))
    return sp.w_coords(G.multiply(qW, inner))


def translate_function(phi: GraphFunction, q) -> GraphFunction:
    """φ_q, whose graph is q·graph(φ): φ_q(a) = q_L·φ(q_L^{-1}q_W^{-1} a q_L)."""
    sp = phi.splitting
    q = sp.group.check_point(np.array(q, dtype=float))
    qL = sp.l_coords(q).copy()

    def func(a):
        return qL + phi(_translate_arg(sp, q, a), check=False)

    return GraphFunction(
        sp,
        func,
        domain=None if phi.domain is None else translate_domain(phi, q),
        smoothness=phi.smoothness,
        name=f"{phi.name}_q",
        meta={"translated_by": q.tolist(), "base": phi},
    )


def constant_function(sp: Splitting, value=0.0, name: str = "const") -> GraphFunction:
    c = np.broadcast_to(np.asarray(value, dtype=float), (sp.k,)).copy()

    def func(w):
        return np.broadcast_to(c, np.shape(w)[:-1] + (sp.k,)).copy()

    def grad(w):
        return np.zeros(np.shape(w)[:-1] + (sp.k, sp.dim_w))

    return GraphFunction(sp, func, smoothness="C1", gradient=grad, name=name)
