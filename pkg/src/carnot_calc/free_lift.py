"""Free step-2 groups, the projection onto a step-2 group of the same rank, and lifts.

Free coordinates are (x_1..x_m, y_{ls}) with pairs ordered (2,1), (3,1),
(3,2), (4,1), ...  Both groups are split with L = exp(ℝX_1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import group_core as gc
from .fields import IntegralCurve, ProjectedField
from .splitting import Box, GraphFunction, PredicateDomain, Splitting


class FiberMismatch(ValueError):
    pass


def free_group(m: int) -> gc.GroupSpec:
    return gc.free_group(m)


@dataclass(frozen=True, eq=False)
class ProjectionPi:
    """π(x, y) = (x, P y) with P[i, (l, s)] = b^{(i)}_{ls}."""

    source: gc.GroupSpec
    target: gc.GroupSpec

    def __post_init__(self):
        T = self.target
        if T.step != 2:
            raise ValueError("target must be a step-2 group")
        if self.source.kind != "free2" or self.source.m != T.m:
            raise ValueError(f"rank mismatch: free rank {self.source.m} vs target rank {T.m}")
        m = T.m
        B = T.structure_constants[:m, :m, m:]  # B[l, s, i]
        pairs = gc.free_pairs(m)
        P = np.array([[B[l - 1, s - 1, i] for (l, s) in pairs] for i in range(T.layer_dims[1])])
        P.setflags(write=False)
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "section_matrix", np.linalg.pinv(P))

    @classmethod
    def onto(cls, target: gc.GroupSpec) -> "ProjectionPi":
        return cls(gc.free_group(target.m), target)

    @property
    def m(self) -> int:
        return self.target.m

    def __call__(self, p) -> np.ndarray:
        return project_pi(self, p)

    def section(self, q) -> np.ndarray:
        """A fiber point over q: horizontal part copied, y = P⁺ y*."""
        q = self.target.check_point(q)
        y = q[..., self.m:] @ self.section_matrix.T
        return np.concatenate([q[..., :self.m], y], axis=-1)

    def w_matrix(self) -> np.ndarray:
        """Linear map of W-coordinates induced by π (both splittings with k = 1)."""
        m = self.m
        nF = self.source.n - 1
        nG = self.target.n - 1
        M = np.zeros((nG, nF))
        M[: m - 1, : m - 1] = np.eye(m - 1)
        M[m - 1:, m - 1:] = self.matrix
        return M


def project_pi(P: ProjectionPi, p) -> np.ndarray:
    p = P.source.check_point(p)
    return np.concatenate([p[..., :P.m], p[..., P.m:] @ P.matrix.T], axis=-1)


def lift_function(P: ProjectionPi, phi: GraphFunction) -> GraphFunction:
    """ψ = φ∘π on W_F, constant on the fibers of π."""
    spG = phi.splitting
    if spG.k != 1 or not spG.group.same_as(P.target):
        raise ValueError("lifting needs φ on the target group with L = exp(ℝX_1)")
    spF = Splitting(P.source, 1)
    M = P.w_matrix()

    def func(w):
        return phi(np.asarray(w, dtype=float) @ M.T, check=False)

    grad = None
    if phi.gradient is not None:
        def grad(w):
            return phi.jacobian(np.asarray(w, dtype=float) @ M.T) @ M

    dom = None
    if phi.domain is not None:
        dom = PredicateDomain(lambda w: phi.in_domain(np.asarray(w) @ M.T), None)
    return GraphFunction(spF, func, domain=dom, smoothness=phi.smoothness, gradient=grad, name=f"lift_{phi.name}")


def lift_omega(P: ProjectionPi, omega):
    M = P.w_matrix()
    return lambda w: omega(np.asarray(w, dtype=float) @ M.T)


def lift_region(P: ProjectionPi, region: Box) -> Box:
    """A box in W_F whose image under π lies inside the W_G box ``region``."""
    m = P.m
    lo, hi = region.lo, region.hi
    c = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)
    yc = P.section_matrix @ c[m - 1:]
    row = np.abs(P.matrix).sum(axis=1)
    r = float(np.min(hw[m - 1:] / np.where(row > 0, row, np.inf)))
    # the section maps the centre exactly; the box of half-width r stays inside
    return Box(
        np.concatenate([lo[: m - 1], yc - r]),
        np.concatenate([hi[: m - 1], yc + r]),
    )


def lift_curve(P: ProjectionPi, gamma: IntegralCurve, a=None, psi: GraphFunction = None) -> IntegralCurve:
    """Lift an integral curve of D^φ_{X_j} (j horizontal) to one of D^ψ_{X_j} in F.

    ``a`` is a W_F point over γ(0) (default: the canonical section).  The
    running integral of φ along γ comes from the same RK4 stages that built
    γ, which keeps π∘ζ = γ at rounding level.
    """
    D = gamma.field
    j = D.basis_index
    m = P.m
    if j is None or not 2 <= j <= m:
        raise ValueError("lift_curve needs a curve of a horizontal basis direction X_j, 2 <= j <= m")
    spG = D.splitting
    spF = Splitting(P.source, 1)
    origin = gamma.origin_index
    g0 = spG.embed_w(gamma.states[origin])
    if a is None:
        a = spF.w_coords(P.section(g0))
    a = np.asarray(a, dtype=float)
    if np.max(np.abs(project_pi(P, spF.embed_w(a)) - g0)) > 1e-12:
        raise FiberMismatch("start point is not in the fiber over gamma(0)")
    if psi is None:
        psi = lift_function(P, D.phi)

    t = gamma.times
    x = spF.embed_w(a)
    Z = np.repeat(x[None, :], len(t), axis=0)
    Z[:, j - 1] = x[j - 1] + t
    intphi = gamma.phi_integral[:, 0]
    for idx, (l, s) in enumerate(gc.free_pairs(m)):
        col = m + idx
        if (l, s) == (j, 1):
            Z[:, col] = x[col] - intphi
        elif s == j:  # η_{lj}, l > j
            Z[:, col] = x[col] + 0.5 * t * x[l - 1]
        elif l == j and s > 1:  # η_{js}, 1 < s < j
            Z[:, col] = x[col] - 0.5 * t * x[s - 1]
    states = spF.w_coords(Z)
    return IntegralCurve(
        start=states[origin].copy(),
        times=t.copy(),
        states=states,
        field=ProjectedField(psi, j, "generic"),
        phi_values=gamma.phi_values.copy(),
        phi_integral=gamma.phi_integral.copy(),
        solver_meta=dict(gamma.solver_meta, lifted=True),
        exited=gamma.exited,
    )
