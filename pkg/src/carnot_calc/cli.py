"""carnot-calc command line: group, flow, verify, area, lift, catalog.

Exit codes: 0 pass, 1 fail with evidence, 2 configuration error,
3 numerical breakdown.  Reports are JSON with sorted keys; tables are CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import catalog as cat
from . import group_core as gc
from .area import perimeter, perimeter_level_set, unit_normal
from .config import ConfigError, Resolved, merge, read_config, resolve, resolve_box, resolve_group
from .expressions import ExpressionError
from .fields import NumericalBreakdown, ProjectedField, curve_field_residual, flow
from .free_lift import ProjectionPi, lift_curve, lift_function, lift_omega, lift_region, project_pi
from .regularity import (
    GradientError,
    Thresholds,
    broad_check,
    broad_star_check,
    estimate_intrinsic_gradient,
    intrinsic_lipschitz_check,
    little_holder_modulus,
    omega_matrix,
    pointwise_quotient,
    propagation_check,
    uid_residual,
    vertical_holder_modulus,
)
from .sampling import JOBS_ENV, default_jobs
from .splitting import DomainError, Splitting

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BREAKDOWN = 0, 1, 2, 3
CHECKS = ("lipschitz", "id", "uid", "broad", "broadstar", "vholder", "propagation")


class Outcome:
    """Collects named results and CSV tables for one command."""

    def __init__(self):
        self.results: dict = {}
        self.tables: dict = {}
        self.passed = True
        self.lines: list = []

    def add(self, name: str, passed: bool, result: dict, line: str = ""):
        self.results[name] = dict(result, passed=bool(passed))
        self.passed = self.passed and bool(passed)
        self.lines.append(f"{name}: {'pass' if passed else 'fail'}" + (f"  {line}" if line else ""))

    def table(self, name: str, header: list, rows: list):
        self.tables[name] = (header, rows)


# helpers -------------------------------------------------------------------------


def _thresholds(R: Resolved) -> Thresholds:
    tol = R.config.get("tolerances", {})
    base = Thresholds()
    return Thresholds(
        slope_min=float(tol.get("slope_min", base.slope_min)),
        decay_ratio=float(tol.get("decay_ratio", base.decay_ratio)),
        unbounded_slope=float(tol.get("unbounded_slope", base.unbounded_slope)),
        min_scales=int(tol.get("min_scales", base.min_scales)),
    )


def _check_params(R: Resolved, name: str) -> dict:
    return dict(R.config.get("checks", {}).get(name, {}))


def _omega(R: Resolved, out: Outcome):
    if R.entry.omega is not None:
        return R.entry.omega
    if R.phi.smoothness == "C1" or R.phi.gradient is not None or R.entry.level_set is not None:
        out.results.setdefault("notes", []).append("omega derived from the C1 formula D^phi phi")
        return cat.intrinsic_gradient_c1(R.phi)
    raise ConfigError("$.function.omega: this check needs omega")


def _uid_gradient(R: Resolved, out: Outcome):
    sp = R.splitting
    if R.entry.omega is not None:
        g = omega_matrix(R.entry.omega, R.a0[None, :], sp)[0]
        if np.all(np.isfinite(g)):
            return g, "omega"
    est = estimate_intrinsic_gradient(R.phi, R.a0)
    return est.matrix, "difference_quotient"


def _holder_table(out: Outcome, name: str, rep):
    out.table(name, ["radius", "modulus", "band_modulus"], rep.csv_rows())


def _vertical_curves(R: Resolved):
    return R.entry.curves.get("vertical", "flow") if R.entry.curves else "flow"


# verify ----------------------------------------------------------------------------


def run_check(name: str, R: Resolved, out: Outcome, expect: str = None) -> None:
    """Run one regularity check and record it; ``expect`` flips the pass criterion to 'matches'."""
    th = _thresholds(R)
    kw = _check_params(R, name)
    phi, region, a0 = R.phi, R.region, R.a0
    if name == "lipschitz":
        kw.setdefault("L_guess", R.config.get("tolerances", {}).get("lipschitz"))
        rep = intrinsic_lipschitz_check(phi, region, seed=R.seed, thresholds=th, **kw)
        observed = rep.verdict
        out.table("lipschitz", ["radius", "constant"], [[repr(r), repr(v)] for r, v in rep.residuals])
        res, line = rep.to_dict(), f"L~{rep.details['estimate']:.4g}"
    elif name in ("id", "uid"):
        grad, src = _uid_gradient(R, out)
        rep = uid_residual(phi, a0, grad=grad, seed=R.seed, anchored=name == "id", thresholds=th, **kw)
        observed = "pass" if rep.vanishing else "fail"
        _holder_table(out, name, rep)
        res = dict(rep.to_dict(), gradient=grad.tolist(), gradient_source=src, a0=a0.tolist())
        line = f"slope={rep.fitted_slope:.3f} verdict={rep.verdict}"
    elif name == "broad":
        kw.setdefault("tol", R.tol("broad", 1e-5))
        rep = broad_check(phi, _omega(R, out), region, seed=R.seed, **kw)
        observed = rep.verdict
        res, line = rep.to_dict(), f"residual={rep.max_residual:.3g}"
    elif name == "broadstar":
        kw.setdefault("tol", R.tol("broadstar", 1e-6))
        kw.setdefault("curve_source", R.entry.curves.get("horizontal", "flow") if R.entry.curves else "flow")
        rep = broad_star_check(phi, _omega(R, out), a0, region=region, seed=R.seed, jobs=R.jobs, **kw)
        observed = rep.verdict
        res, line = rep.to_dict(), f"residual={rep.max_residual:.3g}"
    elif name == "vholder":
        kw.setdefault("curve_source", _vertical_curves(R))
        reps = vertical_holder_modulus(phi, region, seed=R.seed, thresholds=th, jobs=R.jobs, **kw)
        ok = all(r.vanishing for r in reps.values())
        observed = "vanishing" if ok else "nonvanishing"
        for j, r in reps.items():
            _holder_table(out, f"vholder_X{j}", r)
        res = {f"X{j}": r.to_dict() for j, r in reps.items()}
        line = " ".join(f"X{j}:{r.verdict}" for j, r in reps.items())
    elif name == "propagation":
        vkw = dict(kw.pop("vertical", {}))
        vkw.setdefault("curve_source", _vertical_curves(R))
        bkw = dict(kw.pop("broadstar", {}))
        bkw.setdefault("tol", R.tol("broadstar", 1e-6))
        rep = propagation_check(phi, _omega(R, out), region, a0, broad_star_kw=dict(bkw, seed=R.seed),
                                vertical_kw=dict(vkw, seed=R.seed), thresholds=th, jobs=R.jobs)
        observed = rep.verdict
        res, line = rep.to_dict(), f"residual={rep.max_residual:.3g}"
    else:
        raise ConfigError(f"unknown check '{name}'")
    if expect is None:
        passed = observed in ("pass", "vanishing")
    else:
        passed = observed == expect
        res = dict(res, expected=expect, observed=observed)
    out.add(name, passed, res, line)


def cmd_verify(R: Resolved, args, out: Outcome) -> None:
    checks = [args.check] if args.check else list(R.config.get("checks", {}))
    if not checks:
        raise ConfigError("$.checks: nothing to verify")
    for name in checks:
        run_check(name, R, out)


# group ---------------------------------------------------------------------------


def cmd_group(R: Resolved, args, out: Outcome) -> None:
    G = R.group
    if G is None:
        raise ConfigError("$.group: missing")
    out.add("group", True, {"spec": G.to_dict(), "dimension": G.n, "degrees": G.degrees.tolist(),
                            "brackets": G.bracket_table()}, f"dimension {G.n}")
    out.lines += [f"name: {G.name}", f"layers: {list(G.layer_dims)}", f"dimension {G.n}", f"step: {G.step}"]
    out.lines += G.bracket_table()


# flow ------------------------------------------------------------------------------


def cmd_flow(R: Resolved, args, out: Outcome) -> None:
    spec = dict(R.config.get("flow", {}))
    sp = R.splitting
    direction = spec.get("direction", sp.k + 1)
    start = np.asarray(spec.get("start", R.a0), dtype=float)
    t_span = spec.get("t_span", [0.0, 0.5])
    h = float(spec.get("h", 1e-3))
    D = ProjectedField(R.phi, direction, spec.get("backend", "generic"))
    gamma = flow(D, start, t_span, h)
    res = curve_field_residual(gamma)
    header = ["t"] + list(sp.w_names()) + [f"phi{i + 1}" for i in range(sp.k)]
    rows = [[repr(float(t))] + [repr(float(x)) for x in s] + [repr(float(x)) for x in p]
            for t, s, p in zip(gamma.times, gamma.states, gamma.phi_values)]
    out.table("curve", header, rows)
    out.add("flow", not gamma.exited, {
        "direction": D.vector.tolist(), "start": start.tolist(), "t_span": list(map(float, t_span)),
        "end": gamma.states[-1].tolist(), "exited_domain": gamma.exited, "solver": gamma.solver_meta,
        "field_residual": res, "samples": int(len(gamma.times)),
    }, f"end={np.array2string(gamma.states[-1], precision=6)}")


# area --------------------------------------------------------------------------------


def cmd_area(R: Resolved, args, out: Outcome) -> None:
    spec = dict(R.config.get("area", {}))
    sp = R.splitting
    box = resolve_box(spec.get("box", "unit"), sp.dim_w)
    n = int(spec.get("n", 16))
    method = spec.get("method", "auto")
    kw = {}
    if method == "auto":
        method = "omega" if R.entry.omega is not None else ("level_set" if R.entry.level_set is not None else "difference_quotient")
    if method == "omega":
        kw["omega"] = R.entry.omega
    elif method == "level_set":
        kw["f"] = R.entry.level_set
    if method == "gradient_ratio":
        r = perimeter_level_set(R.phi, box, R.entry.level_set, n)
    else:
        r = perimeter(R.phi, box, n=n, **kw)
    if not math.isfinite(r.value):
        raise NumericalBreakdown("perimeter density is not finite on the box")
    tol = R.tol("area", 1e-4)
    res = dict(r.to_dict(), method=method, tolerance=tol)
    if R.entry.level_set is not None and method != "gradient_ratio":
        alt = perimeter_level_set(R.phi, box, R.entry.level_set, n)
        res["level_set_value"] = alt.value
        res["level_set_difference"] = abs(alt.value - r.value)
    try:
        nu = unit_normal(R.phi, box.center, **kw) if method in ("omega", "level_set") else unit_normal(R.phi, box.center)
        res["unit_normal_at_center"] = nu.tolist()
    except GradientError:
        pass
    pts = _grid_points(box, 2 * n)
    out.table("density", list(sp.w_names()) + ["density"],
              [[repr(float(x)) for x in p] + [repr(float(d))] for p, d in zip(pts, r.density_samples)])
    out.add("area", r.error_estimate <= tol, res, f"perimeter={r.value:.12g} err~{r.error_estimate:.2g}")


def _grid_points(box, n):
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in zip(box.lo, box.hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)


# lift ---------------------------------------------------------------------------------


def cmd_lift(R: Resolved, args, out: Outcome) -> None:
    spec = dict(R.config.get("lift", {}))
    G = R.group
    P = ProjectionPi.onto(G)
    F = P.source
    rng = np.random.default_rng(R.seed)
    npairs = int(spec.get("n_pairs", 10000))
    p = rng.uniform(-1, 1, (npairs, F.n))
    q = rng.uniform(-1, 1, (npairs, F.n))
    hom = float(np.abs(project_pi(P, F.multiply(p, q)) - G.multiply(project_pi(P, p), project_pi(P, q))).max())
    tol_hom = R.tol("lift_homomorphism", 1e-13)
    out.add("homomorphism", hom <= tol_hom, {"max_residual": hom, "pairs": npairs, "tolerance": tol_hom},
            f"residual={hom:.2e}")
    out.table("projection_matrix", [f"y{l}{s}" for l, s in gc.free_pairs(G.m)], [[repr(float(x)) for x in row] for row in P.matrix])

    sp = R.splitting
    j = int(spec.get("direction", 2))
    start = np.asarray(spec.get("start", R.a0), dtype=float)
    T = float(spec.get("T", 0.2))
    gamma = flow(ProjectedField(R.phi, j), start, (min(0.0, T), max(0.0, T)), float(spec.get("h", 1e-3)))
    zeta = lift_curve(P, gamma)
    proj = float(np.abs(zeta.states @ P.w_matrix().T - gamma.states).max())
    tol_proj = R.tol("lift_projection", 1e-10)
    out.add("lifted_curve", proj <= tol_proj, {
        "projection_residual": proj, "tolerance": tol_proj, "direction": j,
        "lifted_field_residual": curve_field_residual(zeta),
    }, f"projection residual={proj:.2e}")
    spF = Splitting(F, 1)
    out.table("lifted_curve", ["t"] + list(spF.w_names()), [[repr(float(t))] + [repr(float(x)) for x in s] for t, s in zip(zeta.times, zeta.states)])

    if R.entry.omega is not None or R.phi.gradient is not None:
        omega = _omega(R, out)
        base = broad_star_check(R.phi, omega, R.a0, region=R.region, seed=R.seed, tol=R.tol("broadstar", 1e-6))
        psi = lift_function(P, R.phi)
        a0F = spF.w_coords(P.section(sp.embed_w(R.a0)))
        lifted = broad_star_check(psi, lift_omega(P, omega), a0F, region=lift_region(P, R.region), seed=R.seed,
                                  tol=R.tol("broadstar", 1e-6))
        same = base.verdict == lifted.verdict
        out.add("broadstar_transport", same, {"base": base.to_dict(), "lifted": lifted.to_dict()},
                f"{base.verdict} -> {lifted.verdict}")


# catalog ---------------------------------------------------------------------------


def cmd_catalog(R: Resolved, args, out: Outcome) -> None:
    if args.action == "list":
        for name in sorted(cat.REGISTRY):
            out.lines.append(name)
        out.add("catalog", True, {"entries": sorted(cat.REGISTRY)})
        return
    entry = R.entry
    if entry.name == "notched_abs":
        _run_notched_abs(R, out)
        return
    for key, expect in sorted(entry.expected.items()):
        if key in CHECKS:
            run_check(key, R, out, expect=expect)
        elif key == "tangent_at_origin":
            nu = cat.fitted_tangent_normal(entry)
            dev = float(np.linalg.norm(nu - np.array([0.0, 0.0, 1.0])))
            out.add(key, dev <= 1e-3, {"normal": nu.tolist(), "deviation": dev}, f"deviation={dev:.2e}")
        elif key == "phi_squared_c1":
            radii, sups = cat.squared_derivative_table(entry)
            ok = sups[-1] <= 0.1 * sups[0]
            out.table(key, ["radius", "sup_derivative"], [[repr(float(r)), repr(float(s))] for r, s in zip(radii, sups)])
            out.add(key, ok == (expect == "pass"), {"radii": radii.tolist(), "sup": sups.tolist(), "expected": expect})


def _run_notched_abs(R: Resolved, out: Outcome) -> None:
    e = R.entry
    alpha = float(e.params["alpha"])
    th = _thresholds(R)
    probes = e.extra["probe_points"]
    near = little_holder_modulus(e.phi, alpha, e.region, probe_points=probes[np.abs(probes[:, 0]) <= 0.1], seed=R.seed, thresholds=th)
    away = little_holder_modulus(e.phi, alpha, e.extra["away_region"],
                                 probe_points=probes[(probes[:, 0] >= 0.05) & (probes[:, 0] <= 1.0)], seed=R.seed, thresholds=th)
    # open interval 0 < |x| < 1e-4
    xs = np.linspace(-1e-4, 1e-4, 2001)[1:-1, None]
    xs = xs[xs[:, 0] != 0]
    pq = float(np.max(pointwise_quotient(e.phi, np.zeros(1), xs, alpha)))
    for key, rep in (("holder_near_zero", near), ("holder_away_from_zero", away)):
        observed = "pass" if rep.vanishing else "fail"
        _holder_table(out, key, rep)
        out.add(key, observed == e.expected[key], dict(rep.to_dict(), expected=e.expected[key], observed=observed),
                f"verdict={rep.verdict}")
    out.add("pointwise_at_zero", pq < 1e-2, {"max_quotient": pq, "range": 1e-4}, f"max={pq:.2e}")


# argument handling -----------------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _extra_options(tokens: list) -> tuple:
    """Turn leftover ``--name value`` pairs into (params, tolerances)."""
    params, tols = {}, {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument '{tok}'")
        key, _, val = tok[2:].partition("=")
        if not _:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigError(f"option '{tok}' needs a value") from None
        if key.startswith("tol-"):
            v = _parse_value(val)
            if not isinstance(v, (int, float)):
                raise ConfigError(f"--{key} needs a number")
            tols[key[4:].replace("-", "_")] = v
        else:
            params[key.replace("-", "_")] = _parse_value(val)
    return params, tols


def _floats(text):
    return None if text is None else [float(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help=f"worker threads (default ${JOBS_ENV} or 1)")
    common.add_argument("--out", help="directory for report.json and CSV tables")
    common.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    common.add_argument("--group", help="built-in group name or path to a group spec JSON")
    common.add_argument("--k", type=int, help="dimension of the horizontal factor L")
    common.add_argument("--catalog", help="catalog entry name")
    common.add_argument("--phi", action="append", help="expression for phi (repeat for k > 1)")
    common.add_argument("--omega", action="append", help="expression for a column of omega")
    common.add_argument("--box", help="'unit', 'cube' or lo1,..,lod:hi1,..,hid")
    common.add_argument("--region", help="'unit', 'cube' or lo1,..,lod:hi1,..,hid")
    common.add_argument("--a0", help="comma-separated W-coordinates")

    p = argparse.ArgumentParser(prog="carnot-calc", allow_abbrev=False, description="Intrinsic graphs in Carnot groups: numerical checks.")
    p.add_argument("--version", action="version", version=f"carnot-calc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("group", parents=[common], allow_abbrev=False, help="validate a group spec and print its brackets")
    f = sub.add_parser("flow", parents=[common], allow_abbrev=False, help="integral curve of a projected field, as CSV")
    f.add_argument("--direction", help="basis label or comma-separated W vector")
    f.add_argument("--start")
    f.add_argument("--t-span")
    f.add_argument("--h", type=float)
    v = sub.add_parser("verify", parents=[common], allow_abbrev=False, help="run a regularity check")
    v.add_argument("check", nargs="?", choices=CHECKS)
    sub.add_parser("area", parents=[common], allow_abbrev=False, help="perimeter of the graph over a W-box")
    lf = sub.add_parser("lift", parents=[common], allow_abbrev=False, help="free-group lift checks")
    lf.add_argument("--direction", type=int)
    lf.add_argument("--T", type=float)
    c = sub.add_parser("catalog", parents=[common], allow_abbrev=False, help="list or run worked examples")
    c.add_argument("action", choices=("list", "run"))
    c.add_argument("name", nargs="?")
    return p


def _box_arg(text):
    if text is None:
        return None
    if ":" in text:
        lo, hi = text.split(":")
        return {"lo": _floats(lo), "hi": _floats(hi)}
    try:
        return float(text)
    except ValueError:
        return text


def config_from_args(args, extra: list) -> dict:
    base = read_config(args.config) if args.config else {}
    params, tols = _extra_options(extra)
    over: dict = {"seed": args.seed, "jobs": args.jobs, "k": args.k, "catalog": args.catalog}
    if args.group is not None:
        over["group"] = {"path": args.group} if args.group.endswith(".json") else args.group
    if args.command == "catalog" and args.action == "run":
        if not args.name:
            raise ConfigError("catalog run needs an entry name")
        over["catalog"] = args.name
    if args.phi:
        fn = {"expr": args.phi[0] if len(args.phi) == 1 else args.phi}
        if args.omega:
            fn["omega"] = args.omega
        over["function"] = fn
    if params:
        over["params"] = params
    if tols:
        over["tolerances"] = tols
    over["region"] = _box_arg(args.region)
    over["a0"] = _floats(args.a0)
    if args.command == "area" and args.box is not None:
        over["area"] = {"box": _box_arg(args.box)}
    if args.command == "flow":
        fl = {"start": _floats(args.start), "t_span": _floats(args.t_span), "h": args.h}
        if args.direction is not None:
            d = _floats(args.direction)
            fl["direction"] = int(d[0]) if len(d) == 1 else d
        over["flow"] = {k: v for k, v in fl.items() if v is not None}
    if args.command == "lift":
        over["lift"] = {k: v for k, v in {"direction": args.direction, "T": args.T}.items() if v is not None}
    cfg = merge(base, over)
    if "jobs" not in cfg:
        cfg["jobs"] = default_jobs()
    cfg.setdefault("seed", 0)
    if args.command == "verify" and args.check:
        cfg.setdefault("checks", {}).setdefault(args.check, {})
    return cfg


COMMANDS = {
    "group": (cmd_group, False),
    "flow": (cmd_flow, True),
    "verify": (cmd_verify, True),
    "area": (cmd_area, True),
    "lift": (cmd_lift, True),
    "catalog": (cmd_catalog, False),
}


def _report(command: str, cfg: dict, code: int, out: Outcome, error: str = None) -> dict:
    verdict = {EXIT_PASS: "pass", EXIT_FAIL: "fail"}.get(code, "error")
    rep = {
        "tool": "carnot-calc",
        "version": __version__,
        "command": command,
        "config": cfg,
        "verdict": verdict,
        "exit_code": code,
        "results": out.results,
        "tables": sorted(out.tables),
    }
    if error is not None:
        rep["error"] = error
    return rep


def _dump(obj) -> str:
    from .regularity.reports import _clean

    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_outputs(outdir: Path, report: dict, out: Outcome) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in out.tables.items():
        with open(outdir / f"{name}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            wr.writerows(rows)
    (outdir / "report.json").write_text(_dump(report))


def _known_options(parser: argparse.ArgumentParser) -> set:
    opts = set()
    for action in parser._actions:
        opts.update(action.option_strings)
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                opts |= _known_options(sub)
    return opts


def _glue_extra_options(argv: list, known: set) -> list:
    """Join ``--name value`` for unknown names into ``--name=value`` so positionals cannot swallow the value."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and tok not in known and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args, extra = parser.parse_known_args(_glue_extra_options(argv, _known_options(parser)))
    command = args.command if args.command != "verify" or not args.check else f"verify {args.check}"
    if args.command == "catalog":
        command = f"catalog {args.action}" + (f" {args.name}" if args.name else "")
    out = Outcome()
    cfg: dict = {}
    error = None
    try:
        cfg = config_from_args(args, extra)
        func, needs = COMMANDS[args.command]
        if args.command == "group":
            R = Resolved(cfg, resolve_group(cfg.get("group", "")) if "group" in cfg else None, None, None, None,
                         int(cfg["seed"]), int(cfg["jobs"]))
            from .config import validate

            validate(cfg)
        else:
            needs = needs or (args.command == "catalog" and args.action == "run")
            R = resolve(cfg, need_function=needs)
        func(R, args, out)
        code = EXIT_PASS if out.passed else EXIT_FAIL
    except (ConfigError, gc.GroupSpecError, ExpressionError, DomainError, GradientError) as exc:
        code, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    except (NumericalBreakdown, FloatingPointError, np.linalg.LinAlgError) as exc:
        code, error = EXIT_BREAKDOWN, f"{type(exc).__name__}: {exc}"
    except (ValueError, TypeError) as exc:
        code, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    report = _report(command, cfg, code, out, error)
    if args.out:
        _write_outputs(Path(args.out), report, out)
    if args.json:
        sys.stdout.write(_dump(report))
    else:
        for line in out.lines:
            print(line)
        if error:
            print(f"error: {error}", file=sys.stderr)
        print(f"verdict: {report['verdict']} (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
