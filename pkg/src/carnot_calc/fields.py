"""Projected vector fields D^φ_W on W and their integral curves.

A field value at w is d(L_w)_e(Ad_{φ(w)} W), reported in W-coordinates.
The generic backend evaluates that formula directly; the closed-form
backends hard-code it for the built-in families and are used as
cross-checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .splitting import DomainError, GraphFunction, Splitting, translate_function, translate_points


class NumericalBreakdown(RuntimeError):
    """NaN/inf encountered while evaluating or integrating."""


BACKENDS = ("generic", "heisenberg", "step2", "engel", "free2")


def _direction_vector(sp: Splitting, direction) -> np.ndarray:
    n = sp.n
    if np.isscalar(direction) or np.ndim(direction) == 0:
        j = int(direction)
        if not sp.k < j <= n:
            raise ValueError(f"direction index {j} is not a W direction (expected {sp.k + 1}..{n})")
        v = np.zeros(n)
        v[j - 1] = 1.0
        return v
    d = np.asarray(direction, dtype=float)
    if d.shape == (sp.group.m - sp.k,):
        v = np.zeros(n)
        v[sp.k:sp.group.m] = d
        return v
    if d.shape == (n,):
        if np.any(d[:sp.k] != 0):
            raise ValueError("direction has a component along L")
        return d.copy()
    raise ValueError(f"direction must be an index, a length-{sp.group.m - sp.k} horizontal vector or a length-{n} vector")


def _check_backend(sp: Splitting, backend: str) -> None:
    G = sp.group
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend '{backend}'")
    ok = {
        "generic": True,
        "heisenberg": G.kind == "heisenberg" and sp.k <= G.params.get("n", 0),
        "step2": G.kind in ("step2", "heisenberg", "free2") and G.step == 2,
        "engel": G.kind == "engel" and sp.k == 1,
        "free2": G.kind == "free2" and sp.k == 1,
    }[backend]
    if not ok:
        raise ValueError(f"backend '{backend}' does not apply to group '{G.name}' with k = {sp.k}")


@dataclass(frozen=True, eq=False)
class ProjectedField:
    phi: GraphFunction
    direction: object
    backend: str = "generic"

    def __post_init__(self):
        sp = self.phi.splitting
        object.__setattr__(self, "vector", _direction_vector(sp, self.direction))
        _check_backend(sp, self.backend)

    @property
    def splitting(self) -> Splitting:
        return self.phi.splitting

    @property
    def basis_index(self) -> Optional[int]:
        nz = np.flatnonzero(self.vector)
        if nz.size == 1 and self.vector[nz[0]] == 1.0:
            return int(nz[0]) + 1
        return None

    def __call__(self, w, check: bool = True) -> np.ndarray:
        return eval_field(self, w, check=check)


def _step2_skew(G) -> np.ndarray:
    m = G.m
    return G.structure_constants[:m, :m, m:].transpose(2, 0, 1)


def projected_frame(sp: Splitting, backend: str, w, phi_w) -> np.ndarray:
    """Closed-form matrix whose column j is D^φ_{X_{j+1}} at w (full coordinates)."""
    G = sp.group
    n, k = G.n, sp.k
    w = np.asarray(w, dtype=float)
    full = sp.embed_w(w)
    shape = w.shape[:-1]
    F = np.zeros(shape + (n, n))
    idx = np.arange(n)
    F[..., idx, idx] = 1.0
    if backend == "heisenberg":
        h = G.params["n"]
        t = 2 * h
        for j in range(h):
            F[..., t, j] = -0.5 * full[..., h + j]
            F[..., t, h + j] = 0.5 * full[..., j] + (phi_w[..., j] if j < k else 0.0)
    elif backend == "step2":
        B = _step2_skew(G)
        m = G.m
        x = full[..., :m]
        # X_j(w) + Σ_{i<k} φ_i [X_i, X_j]
        lin = 0.5 * np.einsum("...l,hlj->...hj", x, B)
        rot = np.einsum("...i,hij->...hj", phi_w, B[:, :k, :])
        F[..., m:, :m] = lin + rot
    elif backend == "engel":
        p = phi_w[..., 0]
        F[..., 2, 1] = p
        F[..., 3, 1] = 0.5 * p * p
        F[..., 3, 2] = p
    elif backend == "free2":
        from .group_core import free_pairs

        mm = G.params["m"]
        psi = phi_w[..., 0]
        for idx_pair, (l, s) in enumerate(free_pairs(mm)):
            row = mm + idx_pair
            # X_s gains +½ x_l ∂_{ls}; X_l gains −½ x_s ∂_{ls}
            F[..., row, s - 1] += 0.5 * full[..., l - 1]
            F[..., row, l - 1] -= 0.5 * full[..., s - 1]
            if s == 1:
                F[..., row, l - 1] -= psi
    else:
        raise ValueError(f"no closed-form frame for backend '{backend}'")
    return F


def eval_field(D: ProjectedField, w, check: bool = True) -> np.ndarray:
    """Coefficients of D^φ_W at w, in W-coordinates, shape (..., n-k)."""
    sp = D.splitting
    G = sp.group
    w = np.asarray(w, dtype=float)
    phi_w = D.phi(w, check=check)
    if D.backend == "generic":
        v = G.Ad(sp.embed_l(phi_w), D.vector)
        out = G.push_left(sp.embed_w(w), v)
    else:
        out = projected_frame(sp, D.backend, w, phi_w) @ D.vector
    if not np.all(np.isfinite(out)):
        raise NumericalBreakdown(f"non-finite field value for {D.phi.name}")
    return out[..., sp.k:]


# integration ---------------------------------------------------------------


def rk4_batch(rhs: Callable, y0, T, nsteps: int, aux: Optional[Callable] = None, record: bool = False):
    """Fixed-step RK4 for many initial values at once.

    Row r is integrated over [0, T[r]] with step T[r]/nsteps (T may be
    negative).  ``aux(y)`` returns integrands whose integrals are carried
    along using the same stages, so ∫aux along the discrete curve is
    consistent with the state to rounding.  Returns (y, aux_integral,
    trajectory or None, aux_trajectory or None).
    """
    y = np.array(y0, dtype=float, copy=True)
    N = y.shape[0]
    h = (np.broadcast_to(np.asarray(T, dtype=float), (N,)) / nsteps)[:, None]
    I = None
    traj, aux_traj = None, None
    if aux is not None:
        I = np.zeros_like(np.asarray(aux(y), dtype=float))
    if record:
        traj = [y.copy()]
        aux_traj = [I.copy()] if I is not None else None
    for _ in range(nsteps):
        k1 = rhs(y)
        y2 = y + 0.5 * h * k1
        k2 = rhs(y2)
        y3 = y + 0.5 * h * k2
        k3 = rhs(y3)
        y4 = y + h * k3
        k4 = rhs(y4)
        if aux is not None:
            a1, a2, a3, a4 = aux(y), aux(y2), aux(y3), aux(y4)
            I = I + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if record:
            traj.append(y.copy())
            if I is not None:
                aux_traj.append(I.copy())
    if not np.all(np.isfinite(y)):
        raise NumericalBreakdown("integration produced non-finite values")
    if record:
        traj = np.stack(traj)
        aux_traj = np.stack(aux_traj) if aux_traj is not None else None
    return y, I, traj, aux_traj


def flow_batch(D: ProjectedField, starts, T, nsteps: int = 32, aux: Optional[Callable] = None, record: bool = False):
    """Integrate D from many starts; see ``rk4_batch``.  Domain is not enforced here."""
    rhs = lambda y: eval_field(D, y, check=False)  # noqa: E731
    return rk4_batch(rhs, np.atleast_2d(starts), T, nsteps, aux=aux, record=record)


@dataclass
class IntegralCurve:
    start: np.ndarray
    times: np.ndarray
    states: np.ndarray
    field: ProjectedField
    phi_values: np.ndarray
    phi_integral: np.ndarray
    solver_meta: dict = field(default_factory=dict)
    exited: bool = False

    @property
    def origin_index(self) -> int:
        return int(np.argmin(np.abs(self.times)))

    def triangular_residual(self) -> float:
        """Max deviation from the triangular form of a basis-direction flow."""
        j = self.field.basis_index
        if j is None:
            raise ValueError("triangular form is defined for basis directions only")
        sp = self.field.splitting
        deg = sp.w_degrees()
        col = j - 1 - sp.k
        res = np.abs(self.states[:, col] - (self.start[col] + self.times))
        frozen = [c for c in range(sp.dim_w) if deg[c] < deg[col] and c != col]
        if frozen:
            res = np.maximum(res, np.abs(self.states[:, frozen] - self.start[frozen]).max(axis=1))
        return float(res.max())

    def to_csv(self, path) -> None:
        sp = self.field.splitting
        header = ["t"] + list(sp.w_names()) + [f"phi{i + 1}" for i in range(sp.k)]
        with open(Path(path), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for t, s, p in zip(self.times, self.states, self.phi_values):
                wr.writerow([repr(float(t))] + [repr(float(x)) for x in s] + [repr(float(x)) for x in p])


def _integrate_leg(D: ProjectedField, a, T: float, h: float, check_domain: bool):
    """One-sided fixed-step RK4 from a over [0, T], stopping at a domain exit."""
    nsteps = max(1, int(math.ceil(abs(T) / h - 1e-9)))
    step = T / nsteps
    phi = D.phi
    rhs = lambda y: eval_field(D, y, check=False)  # noqa: E731
    aux = lambda y: phi(y, check=False)  # noqa: E731
    y = np.array(a, dtype=float)[None, :]
    ts, ys, Is = [0.0], [y[0].copy()], [np.zeros(phi.k)]
    exited = False
    for i in range(nsteps):
        y_new, dI, _, _ = rk4_batch(rhs, y, step, 1, aux=aux)
        if check_domain and not phi.in_domain(y_new[0]):
            exited = True
            break
        y = y_new
        ts.append((i + 1) * step)
        ys.append(y[0].copy())
        Is.append(Is[-1] + dI[0])
    return np.array(ts), np.array(ys), np.array(Is), exited


def flow(D: ProjectedField, a, t_span=(0.0, 1.0), h: float = 1e-3, error_estimate: bool = True) -> IntegralCurve:
    """Integral curve of D through a at t = 0, sampled on [t0, t1] (t0 <= 0 <= t1).

    Fixed-step RK4.  With ``error_estimate`` the curve is recomputed with
    h/2 and the Richardson difference/15 is reported as the error.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t0 <= 0.0 <= t1:
        raise ValueError("t_span must contain 0")
    if h <= 0:
        raise ValueError("step must be positive")
    phi = D.phi
    a = np.asarray(a, dtype=float)
    if not phi.in_domain(a):
        raise DomainError("flow start lies outside the domain")

    def run(step):
        legs = []
        exited = False
        for T in (t0, t1):
            if T == 0.0:
                legs.append((np.zeros(1), a[None, :].copy(), np.zeros((1, phi.k)), False))
            else:
                legs.append(_integrate_leg(D, a, T, step, True))
            exited = exited or legs[-1][3]
        (tb, yb, Ib, _), (tf, yf, If, _) = legs
        times = np.concatenate([tb[::-1], tf[1:]])
        states = np.concatenate([yb[::-1], yf[1:]])
        ints = np.concatenate([Ib[::-1], If[1:]])
        return times, states, ints, exited

    times, states, ints, exited = run(h)
    if not np.all(np.isfinite(states)):
        raise NumericalBreakdown("flow produced non-finite states")
    meta = {"method": "rk4", "h": h}
    if error_estimate and not exited:
        t2, s2, _, ex2 = run(h / 2)
        if not ex2 and len(t2) == 2 * len(times) - 1:
            meta["error_estimate"] = float(np.abs(s2[::2] - states).max() / 15.0)
    return IntegralCurve(
        start=a.copy(),
        times=times,
        states=states,
        field=D,
        phi_values=phi(states, check=False),
        phi_integral=ints,
        solver_meta=meta,
        exited=exited,
    )


def translate_curve(gamma: IntegralCurve, q) -> IntegralCurve:
    """γ_q(t) = q_W·q_L·γ(t)·q_L^{-1}, an integral curve of D^{φ_q}."""
    D = gamma.field
    sp = D.splitting
    q = sp.group.check_point(np.asarray(q, dtype=float))
    phi_q = translate_function(D.phi, q)
    states = translate_points(sp, q, gamma.states)
    qL = sp.l_coords(q)
    return IntegralCurve(
        start=states[gamma.origin_index].copy(),
        times=gamma.times.copy(),
        states=states,
        field=ProjectedField(phi_q, D.vector, "generic"),
        phi_values=gamma.phi_values + qL,
        phi_integral=gamma.phi_integral + np.outer(gamma.times, qL),
        solver_meta=dict(gamma.solver_meta, translated=True),
        exited=gamma.exited,
    )


def curve_field_residual(gamma: IntegralCurve) -> float:
    """max |γ' − D(γ)| using centred differences at interior samples."""
    t, y = gamma.times, gamma.states
    if len(t) < 3:
        return 0.0
    dy = (y[2:] - y[:-2]) / (t[2:] - t[:-2])[:, None]
    fv = eval_field(gamma.field, y[1:-1], check=False)
    return float(np.abs(dy - fv).max())


def directional_derivative(f: Callable, x, v, h: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.asarray(f(x + h * v)) - np.asarray(f(x - h * v))) / (2 * h)


def field_invariance_check(phi: GraphFunction, q, f: Callable, w, directions=None, h: float = 1e-5) -> float:
    """max_j |D^{φ_q}_j f_q (w) − D^φ_j f (π_W(q^{-1}w))| with f_q = f∘σ_q^{-1}.

    ``f`` maps W-coordinates to reals.  All W basis directions are tested
    unless ``directions`` lists 1-based labels.
    """
    sp = phi.splitting
    G = sp.group
    q = G.check_point(np.asarray(q, dtype=float))
    w = np.asarray(w, dtype=float)
    phi_q = translate_function(phi, q)
    qinv = G.inverse(q)
    w_back = translate_points(sp, qinv, w)  # π_W(q^{-1}·w) for w ∈ W

    def f_q(a):
        return f(translate_points(sp, qinv, a))

    labels = directions if directions is not None else range(sp.k + 1, sp.n + 1)
    worst = 0.0
    for j in labels:
        lhs = directional_derivative(f_q, w, eval_field(ProjectedField(phi_q, j), w, check=False), h)
        rhs = directional_derivative(f, w_back, eval_field(ProjectedField(phi, j), w_back, check=False), h)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
