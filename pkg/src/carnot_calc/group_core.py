"""Carnot group arithmetic in exponential coordinates of the first kind.

Points and tangent vectors are plain float arrays whose last axis has length
``n``; every operation broadcasts over leading axes.  Basis labels passed to
the public API (``left_invariant_field(j, ...)``) are 1-based, matching the
usual X_1..X_n notation.  Array axes are 0-based as usual.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GroupSpecError(ValueError):
    """Invalid structure constants.  ``axiom`` names the first violated rule."""

    def __init__(self, axiom: str, detail: str):
        super().__init__(f"{axiom}: {detail}")
        self.axiom = axiom
        self.detail = detail


class GroupMismatchError(ValueError):
    pass


MAX_STEP = 4
AXIOM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """Graded nilpotent Lie algebra data.

    ``structure_constants[i, j, k]`` is the coefficient of X_k in [X_i, X_j]
    (0-based array indices).  ``kind`` and ``params`` tag the built-in
    families so closed-form backends can recognise them.
    """

    layer_dims: tuple
    structure_constants: np.ndarray
    name: str = "custom"
    kind: str = "generic"
    params: dict = field(default_factory=dict)
    coord_names: tuple = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if not dims or any(d <= 0 for d in dims):
            raise GroupSpecError("layer_dims", f"layer dimensions must be positive, got {dims}")
        object.__setattr__(self, "layer_dims", dims)
        n = sum(dims)
        C = np.array(self.structure_constants, dtype=float)
        if C.shape != (n, n, n):
            raise GroupSpecError("shape", f"structure constants must be {n}x{n}x{n}, got {C.shape}")
        C.setflags(write=False)
        object.__setattr__(self, "structure_constants", C)
        deg = np.repeat(np.arange(1, len(dims) + 1), dims)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)
        if not self.coord_names:
            object.__setattr__(self, "coord_names", tuple(f"x{i + 1}" for i in range(n)))
        elif len(self.coord_names) != n:
            raise GroupSpecError("shape", "coord_names length must equal the dimension")
        if self.step > MAX_STEP:
            raise GroupSpecError("step", f"step {self.step} > {MAX_STEP} is not supported")
        _validate(self)

    # basic data ---------------------------------------------------------
    @property
    def n(self) -> int:
        return int(sum(self.layer_dims))

    @property
    def m(self) -> int:
        return self.layer_dims[0]

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    def layer_slices(self) -> list:
        edges = np.concatenate([[0], np.cumsum(self.layer_dims)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def identity(self) -> np.ndarray:
        return np.zeros(self.n)

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1:] != (self.n,):
            raise GroupMismatchError(f"{self.name}: expected points of length {self.n}, got shape {p.shape}")
        return p

    def same_as(self, other: "GroupSpec") -> bool:
        return other is self or (
            self.layer_dims == other.layer_dims
            and np.array_equal(self.structure_constants, other.structure_constants)
        )

    # Lie algebra ---------------------------------------------------------
    def bracket(self, X, Y) -> np.ndarray:
        return np.einsum("...i,...j,ijk->...k", X, Y, self.structure_constants)

    def ad_matrix(self, X) -> np.ndarray:
        """Matrix of ad_X acting on column vectors: (ad_X)[k, j] = [X, e_j]_k."""
        return np.einsum("...i,ijk->...kj", X, self.structure_constants)

    def Ad(self, X, Y) -> np.ndarray:
        """exp(ad_X) Y, exact because ad_X is nilpotent."""
        out = np.array(Y, dtype=float, copy=True)
        term = out
        for r in range(1, self.step):
            term = self.bracket(X, term) / r
            out = out + term
        return out

    # group law -----------------------------------------------------------
    def multiply(self, p, q) -> np.ndarray:
        """BCH product, exact up to step 4."""
        X = self.check_point(p)
        Y = self.check_point(q)
        Z = X + Y
        if self.step >= 2:
            XY = self.bracket(X, Y)
            Z = Z + 0.5 * XY
            if self.step >= 3:
                XXY = self.bracket(X, XY)
                YYX = -self.bracket(Y, XY)
                Z = Z + (XXY + YYX) / 12.0
                if self.step >= 4:
                    Z = Z - self.bracket(Y, XXY) / 24.0
        return Z

    def inverse(self, p) -> np.ndarray:
        return -self.check_point(p)

    def dilate(self, lam: float, p) -> np.ndarray:
        if not lam > 0:
            raise ValueError(f"dilation factor must be positive, got {lam}")
        return self.check_point(p) * float(lam) ** self.degrees

    def dilate_signed(self, t: float, p) -> np.ndarray:
        """δ_|t| applied to p, or to p^{-1} when t < 0 (so δ_t exp Y is defined for all t)."""
        p = self.check_point(p)
        if t == 0:
            return np.zeros_like(p)
        return self.dilate(abs(t), p if t > 0 else -p)

    def hom_norm(self, p) -> np.ndarray:
        p = self.check_point(p)
        return np.sum(np.abs(p) ** (1.0 / self.degrees), axis=-1)

    def conjugate(self, p, q) -> np.ndarray:
        """p^{-1} q p, computed as exp(-ad_p) q so the first layer is copied exactly."""
        return self.Ad(-self.check_point(p), self.check_point(q))

    def conjugation_residual(self, p, q) -> list:
        """Per-layer components of p^{-1} q p - q.  The first layer is asserted to vanish."""
        diff = self.conjugate(p, q) - self.check_point(q)
        layers = [diff[..., s] for s in self.layer_slices()]
        if np.any(layers[0] != 0.0):
            raise AssertionError("first-layer conjugation residual is not zero")
        return layers

    # left-invariant frame --------------------------------------------------
    def left_invariant_frame(self, p) -> np.ndarray:
        """Matrix whose column j is X_{j+1} at p: d/dt p·exp(t e_j) at t=0.

        In exponential coordinates this is the series e_j + ½ad_p e_j +
        (1/12) ad_p² e_j, the odd Bernoulli terms beyond that vanish and
        the next even term sits at ad_p⁴ which is zero for step ≤ 4.
        """
        p = self.check_point(p)
        A = self.ad_matrix(p)
        eye = np.broadcast_to(np.eye(self.n), A.shape)
        return eye + 0.5 * A + (A @ A) / 12.0

    def left_invariant_field(self, j: int, p) -> np.ndarray:
        if not 1 <= j <= self.n:
            raise IndexError(f"basis index {j} outside 1..{self.n}")
        return self.left_invariant_frame(p)[..., :, j - 1]

    def push_left(self, p, v) -> np.ndarray:
        """d(L_p)_e applied to a Lie algebra vector v: Σ v_j X_j(p)."""
        p = self.check_point(p)
        v = np.asarray(v, dtype=float)
        adv = self.bracket(p, v)
        return v + 0.5 * adv + self.bracket(p, adv) / 12.0

    # serialisation ---------------------------------------------------------
    def sparse_constants(self) -> list:
        C = self.structure_constants
        out = []
        for i, j, k in zip(*np.nonzero(C)):
            if i < j:
                out.append([int(i) + 1, int(j) + 1, int(k) + 1, float(C[i, j, k])])
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "step": self.step,
            "layer_dims": list(self.layer_dims),
            "structure_constants": self.sparse_constants(),
        }

    def bracket_table(self) -> list:
        """Human-readable nonzero brackets, e.g. '[X1,X2] = 1*X3'."""
        rows = []
        names = [f"X{i + 1}" for i in range(self.n)]
        C = self.structure_constants
        for i, j in itertools.combinations(range(self.n), 2):
            terms = [f"{C[i, j, k]:g}*{names[k]}" for k in range(self.n) if C[i, j, k] != 0]
            if terms:
                rows.append(f"[{names[i]},{names[j]}] = " + " + ".join(terms))
        return rows


def _validate(G: GroupSpec) -> None:
    C = G.structure_constants
    n = G.n
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    tol = AXIOM_TOL * scale

    asym = np.abs(C + C.transpose(1, 0, 2))
    if asym.max(initial=0.0) > tol:
        i, j, k = np.unravel_index(np.argmax(asym), asym.shape)
        raise GroupSpecError("antisymmetry", f"c[{i + 1},{j + 1}] + c[{j + 1},{i + 1}] != 0 in component {k + 1}")

    deg = G.degrees
    allowed = deg[None, None, :] == deg[:, None, None] + deg[None, :, None]
    bad = (np.abs(C) > tol) & ~allowed
    if bad.any():
        i, j, k = np.argwhere(bad)[0]
        raise GroupSpecError(
            "grading",
            f"[X{i + 1},X{j + 1}] has a component along X{k + 1} of degree {deg[k]} != {deg[i]} + {deg[j]}",
        )

    # [e_i,[e_j,e_l]] + [e_j,[e_l,e_i]] + [e_l,[e_i,e_j]]
    inner = np.einsum("jlk,ikr->ijlr", C, C)
    jac = inner + inner.transpose(1, 2, 0, 3) + inner.transpose(2, 0, 1, 3)
    if np.abs(jac).max(initial=0.0) > tol * scale:
        i, j, l, _ = np.unravel_index(np.argmax(np.abs(jac)), jac.shape)
        raise GroupSpecError("jacobi", f"Jacobi identity fails on (X{i + 1}, X{j + 1}, X{l + 1})")

    sl = G.layer_slices()
    for s in range(1, G.step):
        # span of [V_1, V_s] must be all of V_{s+1}
        B = C[sl[0], sl[s - 1], :][:, :, sl[s]].reshape(-1, G.layer_dims[s])
        rank = np.linalg.matrix_rank(B, tol=1e-10) if B.size else 0
        if rank < G.layer_dims[s]:
            raise GroupSpecError(
                "generation",
                f"[V1, V{s}] spans a {rank}-dimensional subspace of V{s + 1} (dimension {G.layer_dims[s]})",
            )
    if n == 0:
        raise GroupSpecError("layer_dims", "empty group")


def from_sparse(layer_dims, entries, name: str = "custom", **kw) -> GroupSpec:
    """Build a spec from 1-based entries (i, j, k, c) meaning [X_i, X_j] has c on X_k.

    Only the listed entries are set; antisymmetry is *not* filled in, so a
    spec must list both (i, j) and (j, i) or rely on ``symmetrize=True``.
    """
    symmetrize = kw.pop("symmetrize", False)
    n = int(sum(layer_dims))
    C = np.zeros((n, n, n))
    for entry in entries:
        if len(entry) != 4:
            raise GroupSpecError("shape", f"structure constant entries are [i, j, k, c], got {entry}")
        i, j, k, c = entry
        i, j, k = int(i) - 1, int(j) - 1, int(k) - 1
        if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
            raise GroupSpecError("shape", f"index out of range in entry {entry}")
        C[i, j, k] += float(c)
        if symmetrize:
            C[j, i, k] -= float(c)
    return GroupSpec(tuple(layer_dims), C, name=name, **kw)


def load_group_json(source) -> GroupSpec:
    """Load a spec from a JSON file path or an already-parsed dict.

    Pairs listed once are completed antisymmetrically; pairs listed in
    both orders are taken as given and must then be antisymmetric.
    """
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text())
    else:
        data = dict(source)
    for key in ("layer_dims", "structure_constants"):
        if key not in data:
            raise GroupSpecError("shape", f"missing field '{key}'")
    dims = data["layer_dims"]
    if "step" in data and int(data["step"]) != len(dims):
        raise GroupSpecError("step", f"step {data['step']} does not match {len(dims)} layers")
    entries = data["structure_constants"]
    seen = {(int(e[0]), int(e[1])) for e in entries}
    filled = []
    for e in entries:
        filled.append(e)
        if (int(e[1]), int(e[0])) not in seen and int(e[0]) != int(e[1]):
            filled.append([e[1], e[0], e[2], -float(e[3])])
    return from_sparse(dims, filled, name=data.get("name", "custom"))


# built-in families -------------------------------------------------------


def heisenberg(n: int = 1) -> GroupSpec:
    """H^n with [X_i, X_{n+i}] = X_{2n+1}."""
    if n < 1:
        raise ValueError("Heisenberg rank must be >= 1")
    entries = [(i, n + i, 2 * n + 1, 1.0) for i in range(1, n + 1)]
    return from_sparse((2 * n, 1), entries, name=f"H{n}", kind="heisenberg", params={"n": n}, symmetrize=True)


def step2_from_skew(B, name: str = "step2") -> GroupSpec:
    """Step-2 group with [X_j, X_l] = Σ_i B[i][j, l] Y_i for skew m x m matrices B[i]."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 2:
        B = B[None]
    h, m, m2 = B.shape
    if m != m2:
        raise GroupSpecError("shape", "skew matrices must be square")
    if np.abs(B + B.transpose(0, 2, 1)).max() > AXIOM_TOL:
        raise GroupSpecError("antisymmetry", "matrices B^(i) must be skew-symmetric")
    n = m + h
    C = np.zeros((n, n, n))
    C[:m, :m, m:] = B.transpose(1, 2, 0)
    return GroupSpec((m, h), C, name=name, kind="step2", params={"B": B})


def random_step2(m: int, h: int, rng: np.random.Generator, name: str = "step2_random") -> GroupSpec:
    """Random skew matrices; redrawn until they are linearly independent."""
    for _ in range(100):
        A = rng.normal(size=(h, m, m))
        B = A - A.transpose(0, 2, 1)
        if np.linalg.matrix_rank(B.reshape(h, -1)) == h:
            return step2_from_skew(B, name=name)
    raise RuntimeError("could not draw independent skew matrices")


def heisenberg_skew(n: int) -> np.ndarray:
    B = np.zeros((1, 2 * n, 2 * n))
    for i in range(n):
        B[0, i, n + i] = 1.0
        B[0, n + i, i] = -1.0
    return B


def free_pairs(m: int) -> list:
    """Ordered index pairs (l, s), s < l, 1-based: (2,1), (3,1), (3,2), (4,1), ..."""
    return [(l, s) for l in range(2, m + 1) for s in range(1, l)]


def free_group(m: int) -> GroupSpec:
    """Free step-2 group F_{m,2} with [X_l, X_s] = Y_{ls} for s < l."""
    if m < 2:
        raise ValueError("free group rank must be >= 2")
    pairs = free_pairs(m)
    entries = [(l, s, m + idx + 1, 1.0) for idx, (l, s) in enumerate(pairs)]
    names = tuple(f"x{i}" for i in range(1, m + 1)) + tuple(f"y{l}{s}" for l, s in pairs)
    return from_sparse(
        (m, len(pairs)), entries, name=f"F{m}", kind="free2", params={"m": m}, coord_names=names, symmetrize=True
    )


def engel() -> GroupSpec:
    """[X1, X2] = X3, [X1, X3] = X4; degrees (1, 1, 2, 3)."""
    return from_sparse((2, 1, 1), [(1, 2, 3, 1.0), (1, 3, 4, 1.0)], name="engel", kind="engel", symmetrize=True)


def builtin(name: str) -> GroupSpec:
    """Resolve names such as 'h1', 'H2', 'engel', 'free3', 'F4'."""
    key = name.strip().lower()
    if key == "engel":
        return engel()
    for prefix, ctor in (("heisenberg", heisenberg), ("free", free_group), ("h", heisenberg), ("f", free_group)):
        if key.startswith(prefix) and key[len(prefix):].isdigit():
            return ctor(int(key[len(prefix):]))
    raise KeyError(f"unknown built-in group '{name}'")


# closed-form laws ---------------------------------------------------------


def step2_multiply(B, p, q) -> np.ndarray:
    """(x, y)·(x', y') = (x + x', y + y' + ½ xᵀB x')."""
    B = np.asarray(B, dtype=float)
    m = B.shape[1]
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x, xp = p[..., :m], q[..., :m]
    y = p[..., m:] + q[..., m:] + 0.5 * np.einsum("...j,ijl,...l->...i", x, B, xp)
    return np.concatenate([x + xp, y], axis=-1)


def free_multiply(m: int, p, q) -> np.ndarray:
    """(p·q)_{ls} = p_{ls} + q_{ls} + ½(p_l q_s − q_l p_s)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    l_idx = np.array([l for l, _ in free_pairs(m)]) - 1
    s_idx = np.array([s for _, s in free_pairs(m)]) - 1
    y = p[..., m:] + q[..., m:] + 0.5 * (p[..., l_idx] * q[..., s_idx] - q[..., l_idx] * p[..., s_idx])
    return np.concatenate([p[..., :m] + q[..., :m], y], axis=-1)


def heisenberg_multiply(n: int, p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    t = p[..., 2 * n] + q[..., 2 * n] + 0.5 * np.sum(p[..., :n] * q[..., n:2 * n] - p[..., n:2 * n] * q[..., :n], axis=-1)
    return np.concatenate([p[..., :2 * n] + q[..., :2 * n], t[..., None]], axis=-1)


def engel_multiply(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p1, p2, p3, p4 = np.moveaxis(p, -1, 0)
    q1, q2, q3, q4 = np.moveaxis(q, -1, 0)
    w = p1 * q2 - p2 * q1
    z3 = p3 + q3 + 0.5 * w
    z4 = p4 + q4 + 0.5 * (p1 * q3 - p3 * q1) + (p1 - q1) * w / 12.0
    return np.stack([p1 + q1, p2 + q2, z3, z4], axis=-1)


def closed_form_multiply(G: GroupSpec, p, q) -> np.ndarray:
    """Family-specific product formula; raises for groups without one."""
    if G.kind == "heisenberg":
        return heisenberg_multiply(G.params["n"], p, q)
    if G.kind == "step2":
        return step2_multiply(G.params["B"], p, q)
    if G.kind == "free2":
        return free_multiply(G.params["m"], p, q)
    if G.kind == "engel":
        return engel_multiply(p, q)
    raise GroupMismatchError(f"no closed-form law for group kind '{G.kind}'")
