"""Broad*/broad verification, vertical Hölder moduli, commutator squares, propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from ..fields import ProjectedField, flow_batch
from ..sampling import box_points, dyadic_radii, parallel_map, sobol, unit_directions
from ..splitting import Box, DomainError, GraphFunction
from .reports import DEFAULT_THRESHOLDS, HolderReport, Thresholds, VerificationReport


def omega_matrix(omega, w, sp) -> np.ndarray:
    """Evaluate ω at W-points as a (..., k, m − k) array."""
    w = np.asarray(w, dtype=float)
    val = np.asarray(omega(w), dtype=float)
    shape = w.shape[:-1] + (sp.k, sp.group.m - sp.k)
    if val.shape == shape:
        return val
    if sp.k == 1 and val.shape == w.shape[:-1] + (sp.group.m - sp.k,):
        return val[..., None, :]
    if sp.k == 1 and sp.group.m - sp.k == 1 and val.shape == w.shape[:-1]:
        return val[..., None, None]
    raise ValueError(f"omega must return shape {shape}, got {val.shape}")


def _ball_starts(a0, radius: float, n: int, seed: int) -> np.ndarray:
    d = a0.size
    u = 2.0 * sobol(4 * n, d, seed) - 1.0
    u = u[np.linalg.norm(u, axis=1) <= 1.0][:n]
    return np.vstack([a0[None, :], a0 + radius * u])


def _default_region(phi: GraphFunction, region):
    if region is not None:
        return region
    dom = phi.domain
    if isinstance(dom, Box):
        return dom
    if dom is not None and getattr(dom, "bbox", None) is not None:
        return dom.bbox
    raise ValueError("a region is required when the domain is not a box")


def broad_star_check(
    phi: GraphFunction,
    omega,
    a0,
    curve_source="flow",
    delta1=None,
    delta2=None,
    region=None,
    n_starts: int = 64,
    h: float = 1e-3,
    tol: float = 1e-6,
    seed: int = 0,
    max_shrink: int = 4,
    jobs: int = 1,
) -> VerificationReport:
    """max |φ(E_j(a,t)) − φ(a) − ∫_0^t ω_{·j}(E_j(a,s)) ds| over a ∈ B(a0, δ2), |t| ≤ δ2, j = k+1..m.

    ``curve_source`` is "flow" or a dict {j: curve(a, t)} of closed-form
    curves, where ``curve(a, t)`` maps (N, d) starts and (T,) times to
    (N, T, d) states.  With flows, ∫ω is accumulated by the same RK4 stages;
    with closed forms it uses cumulative Simpson on the time grid.  When a
    curve leaves B(a0, δ1) or the domain, δ2 is halved (up to ``max_shrink``
    times) before giving up.
    """
    sp = phi.splitting
    a0 = np.asarray(a0, dtype=float)
    if delta1 is None or delta2 is None:
        diam = _default_region(phi, region).diameter
        delta1 = 0.2 * diam if delta1 is None else delta1
        delta2 = 0.05 * diam if delta2 is None else delta2
    if not 0 < delta2 < delta1:
        raise ValueError("need 0 < delta2 < delta1")
    overrides = curve_source if isinstance(curve_source, dict) else {}

    for attempt in range(max_shrink + 1):
        starts = _ball_starts(a0, delta2, n_starts, seed)
        starts = starts[phi.in_domain(starts)]
        nsteps = max(4, int(math.ceil(delta2 / h)))

        def one_direction(j):
            col = j - sp.k - 1
            aux = lambda y: omega_matrix(omega, y, sp)[..., :, col]  # noqa: E731
            worst, exited, rows = 0.0, False, []
            for sign in (1.0, -1.0):
                if j in overrides:
                    ts = sign * np.linspace(0.0, delta2, 2 * nsteps + 1)
                    traj = np.asarray(overrides[j](starts, ts), dtype=float).transpose(1, 0, 2)
                    integrand = aux(traj)
                    I = cumulative_simpson(integrand, x=ts, axis=0, initial=0.0)
                else:
                    _, _, traj, I = flow_batch(
                        ProjectedField(phi, j), starts, sign * delta2, nsteps, aux=aux, record=True
                    )
                far = np.linalg.norm(traj - a0, axis=-1) > delta1
                inside = phi.in_domain(traj)
                if far.any() or not inside.all():
                    exited = True
                    break
                lhs = phi(traj, check=False) - phi(starts, check=False)[None]
                err = np.max(np.abs(lhs - I), axis=(0, 2))
                worst = max(worst, float(err.max()))
                rows.extend([[int(j), float(sign)] + s.tolist() + [float(e)] for s, e in zip(starts, err)])
            return worst, exited, rows

        results = parallel_map(one_direction, list(sp.horizontal_w), jobs)
        if any(r[1] for r in results):
            delta2 *= 0.5
            continue
        worst = max((r[0] for r in results), default=0.0)
        table = [row for r in results for row in r[2]]
        return VerificationReport(
            check="broadstar",
            grid={
                "a0": a0.tolist(),
                "delta1": float(delta1),
                "delta2": float(delta2),
                "starts": int(len(starts)),
                "steps": nsteps,
                "curve_source": "flow" if not overrides else sorted(int(j) for j in overrides),
                "shrinks": attempt,
            },
            max_residual=worst,
            tolerance=tol,
            residuals=table,
        )
    raise DomainError(f"curves leave B(a0, delta1) even after {max_shrink} halvings of delta2")


def broad_check(
    phi: GraphFunction,
    omega,
    region,
    n_dirs: int = 8,
    n_starts: int = 64,
    T: float = 0.05,
    h: float = 1e-3,
    tol: float = 1e-5,
    seed: int = 0,
) -> VerificationReport:
    """Finite-difference d/dt φ(γ(t)) against ω(γ(t))·W along flows of D^φ_W for unit horizontal W.

    Directions are the basis vectors X_{k+1}..X_m followed by random unit vectors.
    """
    sp = phi.splitting
    mh = sp.group.m - sp.k
    dirs = np.vstack([np.eye(mh), unit_directions(max(0, n_dirs - mh), mh, seed)]) if n_dirs > mh else np.eye(mh)
    starts = box_points(region, n_starts, seed + 1)
    starts = starts[phi.in_domain(starts)]
    nsteps = max(4, int(math.ceil(T / h)))
    worst, rows = 0.0, []
    for W in dirs:
        _, _, traj, _ = flow_batch(ProjectedField(phi, W), starts, T, nsteps, record=True)
        ok = np.all(phi.in_domain(traj), axis=0)
        if not ok.any():
            continue
        traj = traj[:, ok]
        vals = phi(traj, check=False)
        deriv = np.gradient(vals, T / nsteps, axis=0, edge_order=2)
        target = omega_matrix(omega, traj, sp) @ W
        err = np.max(np.abs(deriv - target), axis=(0, 2))
        worst = max(worst, float(err.max()))
        rows.extend([W.tolist() + s.tolist() + [float(e)] for s, e in zip(starts[ok], err)])
    return VerificationReport(
        check="broad",
        grid={"region": region.to_dict(), "directions": int(len(dirs)), "starts": int(len(starts)), "T": T, "steps": nsteps},
        max_residual=worst,
        tolerance=tol,
        residuals=rows,
    )


def vertical_holder_modulus(
    phi: GraphFunction,
    region,
    radii=None,
    n_starts: int = 128,
    n_offsets: int = 3,
    nsteps: int = 8,
    curve_source="flow",
    seed: int = 0,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    jobs: int = 1,
) -> dict:
    """{j: HolderReport} of sup |φ(E_j(a,t)) − φ(a)| / |t|^{1/deg j} for vertical j = m+1..n.

    Each start a is flowed for times |t| in dyadic bands (ρ/2, ρ]; the
    reported modulus at ρ is the sup over all bands at or below ρ.
    ``curve_source`` may map j to closed-form endpoints curve(a, t) for
    (N, d) starts and (N,) times.
    """
    sp = phi.splitting
    G = sp.group
    if radii is None:
        radii = dyadic_radii(region.diameter / 4.0, 24)
    radii = np.asarray(radii, dtype=float)
    starts = box_points(region, n_starts, seed)
    starts = starts[phi.in_domain(starts)]
    fracs = 2.0 ** (-(np.arange(n_offsets) + 0.5) / n_offsets)
    T = (radii[:, None, None] * fracs[None, :, None] * np.array([1.0, -1.0])[None, None, :]).reshape(-1)
    overrides = curve_source if isinstance(curve_source, dict) else {}
    f0 = phi(starts, check=False)

    def one_direction(j):
        deg = int(G.degrees[j - 1])
        A = np.repeat(starts, T.size, axis=0)
        TT = np.tile(T, len(starts))
        if j in overrides:
            ends = np.asarray(overrides[j](A, TT), dtype=float)
        else:
            ends, _, _, _ = flow_batch(ProjectedField(phi, j), A, TT, nsteps)
        ok = phi.in_domain(ends)
        q = np.zeros(len(A))
        diff = np.sum(np.abs(phi(ends[ok], check=False) - np.repeat(f0, T.size, axis=0)[ok]), axis=-1)
        q[ok] = diff / np.abs(TT[ok]) ** (1.0 / deg)
        band = q.reshape(len(starts), len(radii), -1).max(axis=(0, 2))
        moduli = np.maximum.accumulate(band[::-1])[::-1]
        return j, HolderReport.build(
            1.0 / deg, radii, moduli, band, label=f"vertical_X{j}", samples=int(ok.sum()), th=thresholds
        )

    return dict(parallel_map(one_direction, list(sp.vertical_w), jobs))


def curve_quotients(phi: GraphFunction, a, j: int, ts, nsteps: int = 8, curve=None) -> np.ndarray:
    """|φ(E_j(a,t)) − φ(a)| / |t|^{1/deg j} for each t (flow unless a closed-form curve is given)."""
    sp = phi.splitting
    ts = np.asarray(ts, dtype=float)
    a = np.asarray(a, dtype=float)
    A = np.repeat(a[None, :], ts.size, axis=0)
    if curve is not None:
        ends = np.asarray(curve(A, ts), dtype=float)
    else:
        ends, _, _, _ = flow_batch(ProjectedField(phi, j), A, ts, nsteps)
    deg = int(sp.group.degrees[j - 1])
    diff = np.sum(np.abs(phi(ends, check=False) - phi(a, check=False)[None, :]), axis=-1)
    return diff / np.abs(ts) ** (1.0 / deg)


@dataclass
class ReachResult:
    start: np.ndarray
    endpoint: np.ndarray
    nodes: np.ndarray
    lagrange_points: np.ndarray
    increments: np.ndarray
    pair: tuple
    T: float

    def to_dict(self) -> dict:
        return {
            "start": self.start.tolist(),
            "endpoint": self.endpoint.tolist(),
            "nodes": self.nodes.tolist(),
            "lagrange_points": self.lagrange_points.tolist(),
            "increments": self.increments.tolist(),
            "pair": list(self.pair),
            "T": self.T,
        }


def vertical_reach(phi: GraphFunction, a, pair, T: float, nsteps: int = 64) -> ReachResult:
    """Commutator square: flows of times +T, +T, −T, −T along D_ℓ, D_s, D_ℓ, D_s.

    Returns the four segment endpoints, their midpoints (reported as the
    Lagrange points of the φ increments) and the φ increment per segment.
    """
    sp = phi.splitting
    l, s = int(pair[0]), int(pair[1])
    for j in (l, s):
        if j not in sp.horizontal_w:
            raise ValueError(f"X{j} is not a horizontal direction of W")
    nsteps += nsteps % 2
    cur = np.asarray(a, dtype=float)
    if not phi.in_domain(cur):
        raise DomainError("start outside the domain")
    nodes, mids, incs = [cur.copy()], [], []
    for j, tt in ((l, T), (s, T), (l, -T), (s, -T)):
        if tt == 0.0:
            end, mid = cur.copy(), cur.copy()
        else:
            _, _, traj, _ = flow_batch(ProjectedField(phi, j), cur[None, :], tt, nsteps, record=True)
            traj = traj[:, 0]
            if not np.all(phi.in_domain(traj)):
                raise DomainError("commutator square leaves the domain mid-chain")
            end, mid = traj[-1], traj[nsteps // 2]
        incs.append(phi(end, check=False) - phi(cur, check=False))
        mids.append(mid)
        nodes.append(end.copy())
        cur = end
    return ReachResult(
        start=np.asarray(a, dtype=float),
        endpoint=cur,
        nodes=np.array(nodes),
        lagrange_points=np.array(mids),
        increments=np.array(incs),
        pair=(l, s),
        T=float(T),
    )


def propagation_check(
    phi: GraphFunction,
    omega,
    region,
    a0=None,
    broad_star_kw=None,
    vertical_kw=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    jobs: int = 1,
) -> VerificationReport:
    """Broad* on the region followed by vanishing vertical Hölder moduli.

    Per vertical direction the residual is the decay ratio f(ρ_min)/f(ρ_max),
    raised to at least 1 when the slope half of the vanishing rule fails;
    the tolerance is the decay-ratio threshold.  A failed broad* precondition
    gives an infinite residual.
    """
    a0 = region.center if a0 is None else np.asarray(a0, dtype=float)
    bs = broad_star_check(phi, omega, a0, region=region, jobs=jobs, **(broad_star_kw or {}))
    details = {"broad_star": {"verdict": bs.verdict, "max_residual": bs.max_residual, "grid": bs.grid}}
    if not bs.passed:
        details["note"] = "broad* precondition failed"
        return VerificationReport("propagation", {"region": region.to_dict()}, math.inf, thresholds.decay_ratio, [], details)
    reports = vertical_holder_modulus(phi, region, thresholds=thresholds, jobs=jobs, **(vertical_kw or {}))
    rows, worst = [], 0.0
    for j, rep in reports.items():
        ratio = 0.0 if rep.moduli[0] == 0 else float(rep.moduli[-1] / rep.moduli[0])
        r = ratio if rep.vanishing else max(ratio, 1.0)
        rows.append([j, r, rep.verdict])
        worst = max(worst, r)
    details["vertical"] = {str(j): rep.to_dict() for j, rep in reports.items()}
    return VerificationReport("propagation", {"region": region.to_dict()}, worst, thresholds.decay_ratio, rows, details)
