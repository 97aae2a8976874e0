"""Command-line driver: configure, solve, sweep, analyze, compare.

One JSON config document describes an experiment; unknown keys anywhere in
it are hard errors (silent typos in physics parameters are the worst failure
mode).  Outputs are JSON summaries, CSV tables and field dumps, all written
atomically.  Exit codes: 0 success, 2 config error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import numpy as np

from . import analysis, fieldio, manifold, solver, textures
from .analysis import BallOutsideDomain, CircleMeetsDefect, CircleOutsideDomain
from .fieldio import DumpCorrupt
from .grid import (
    Domain,
    DomainTooThin,
    InvalidSpec,
    assemble_field,
    boundary_data,
    build_grid,
)
from .manifold import ProjectionUndefined
from .potential import HypothesisViolated, NonPositiveCoefficient, derive_params
from .solver import NonFiniteEncountered, SolveOptions, energy
from .textures import EpsilonTooLarge

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_NUMERICAL_ERRORS = (
    NonFiniteEncountered,
    EpsilonTooLarge,
    HypothesisViolated,
    DomainTooThin,
    ProjectionUndefined,
    CircleOutsideDomain,
    CircleMeetsDefect,
    BallOutsideDomain,
)


class ConfigInvalid(ValueError):
    """Config failed to parse or validate; message carries the field path."""


def _require_keys(section, allowed, required, path):
    if not isinstance(section, dict):
        raise ConfigInvalid(f"{path}: expected an object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigInvalid(f"{path}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(section)
    if missing:
        raise ConfigInvalid(f"{path}: missing keys {sorted(missing)}")


def _positive(section, key, path):
    value = section[key]
    if not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
        raise ConfigInvalid(f"{path}.{key}: must be a positive number")
    return float(value)


def _validate_boundary(spec, domain_kind, path):
    if domain_kind == "annulus":
        _require_keys(spec, ("outer", "inner"), ("outer", "inner"), path)
        return {
            "outer": _validate_boundary(spec["outer"], "disk", path + ".outer"),
            "inner": _validate_boundary(spec["inner"], "disk", path + ".inner"),
        }
    _require_keys(spec, ("kind", "winding", "director", "samples"), ("kind",), path)
    kind = spec.get("kind")
    if kind == "geodesic":
        _require_keys(spec, ("kind", "winding"), ("kind",), path)
        out = {"kind": "geodesic", "winding": int(spec.get("winding", 1))}
    elif kind == "constant":
        _require_keys(spec, ("kind", "director"), ("kind",), path)
        director = spec.get("director", [1.0, 0.0, 0.0])
        if not (isinstance(director, (list, tuple)) and len(director) == 3):
            raise ConfigInvalid(f"{path}.director: must be a 3-vector")
        out = {"kind": "constant", "director": [float(x) for x in director]}
    elif kind == "custom":
        _require_keys(spec, ("kind", "samples"), ("kind", "samples"), path)
        samples = np.asarray(spec["samples"], dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 5 or samples.shape[0] < 8:
            raise ConfigInvalid(f"{path}.samples: need an (N>=8, 5) array")
        out = {"kind": "custom", "samples": samples}
    else:
        raise ConfigInvalid(f"{path}.kind: unknown boundary kind {kind!r}")
    return out


def load_config(path, sweep=False):
    """Parse and validate a config file into a normalized dict."""
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError:
        raise
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"config does not parse: {err}") from err

    top_allowed = ("domain", "grid", "material", "boundary", "solver", "output")
    eps_key = ("epsilons",) if sweep else ("epsilon",)
    _require_keys(
        raw,
        top_allowed + ("epsilon", "epsilons"),
        ("domain", "grid", "material", "boundary") + eps_key,
        "config",
    )

    dom = raw["domain"]
    _require_keys(
        dom, ("kind", "radius", "center", "inner_radius"), ("kind", "radius"), "domain"
    )
    kind = dom.get("kind")
    if kind not in ("disk", "annulus"):
        raise ConfigInvalid(f"domain.kind: unknown kind {kind!r}")
    center = dom.get("center", [0.0, 0.0])
    if not (isinstance(center, (list, tuple)) and len(center) == 2):
        raise ConfigInvalid("domain.center: must be [x, y]")
    radius = _positive(dom, "radius", "domain")
    inner = 0.0
    if kind == "annulus":
        if "inner_radius" not in dom:
            raise ConfigInvalid("domain.inner_radius: required for annulus")
        inner = _positive(dom, "inner_radius", "domain")
        if inner >= radius:
            raise ConfigInvalid("domain.inner_radius: must be < radius")
    domain = Domain(
        kind=kind,
        radius=radius,
        center=(float(center[0]), float(center[1])),
        inner_radius=inner,
    )

    _require_keys(raw["grid"], ("n",), ("n",), "grid")
    n = raw["grid"]["n"]
    if not isinstance(n, int) or n < 16 or n % 2:
        raise ConfigInvalid("grid.n: must be an even integer >= 16")

    _require_keys(raw["material"], ("a", "b", "c"), ("a", "b", "c"), "material")
    material = {k: _positive(raw["material"], k, "material") for k in "abc"}

    bspec = _validate_boundary(raw["boundary"], kind, "boundary")

    if sweep:
        eps_list = raw["epsilons"]
        if (
            not isinstance(eps_list, list)
            or len(eps_list) < 3
            or any(not isinstance(e, (int, float)) or e <= 0 for e in eps_list)
            or any(b >= a for a, b in zip(eps_list, eps_list[1:]))
        ):
            raise ConfigInvalid(
                "epsilons: need >= 3 strictly decreasing positive values"
            )
        epsilons = [float(e) for e in eps_list]
    else:
        if not isinstance(raw.get("epsilon"), (int, float)) or raw["epsilon"] <= 0:
            raise ConfigInvalid("epsilon: must be a positive number")
        epsilons = [float(raw["epsilon"])]

    sol = raw.get("solver", {})
    _require_keys(
        sol,
        (
            "max_iters",
            "grad_tol",
            "step_rule",
            "fixed_step",
            "truncation",
            "seed",
            "noise",
        ),
        (),
        "solver",
    )
    try:
        options = SolveOptions(
            max_iters=int(sol.get("max_iters", 20000)),
            grad_tol=float(sol.get("grad_tol", 1e-6)),
            step_rule=sol.get("step_rule", "bb"),
            fixed_step=float(sol.get("fixed_step", 0.05)),
            truncation=bool(sol.get("truncation", True)),
            seed=int(sol.get("seed", 0)),
        )
    except ValueError as err:
        raise ConfigInvalid(f"solver: {err}") from err
    noise = sol.get("noise", 0.01)
    if not isinstance(noise, (int, float)) or noise < 0:
        raise ConfigInvalid("solver.noise: must be a number >= 0")

    out = raw.get("output", {})
    _require_keys(out, ("field_format", "vtk"), (), "output")
    field_format = out.get("field_format", "f64le")
    if field_format not in ("f64le", "csv"):
        raise ConfigInvalid("output.field_format: must be 'f64le' or 'csv'")

    return {
        "domain": domain,
        "n": n,
        "material": material,
        "boundary": bspec,
        "epsilons": epsilons,
        "options": options,
        "noise": float(noise),
        "field_format": field_format,
        "vtk": bool(out.get("vtk", False)),
    }


def _solve_once(cfg, eps, out_dir, delta):
    """One full solve: params, grid, boundary, warm start, minimize, truncate."""
    started = time.perf_counter()
    params = derive_params(**cfg["material"])
    grid = build_grid(cfg["domain"], cfg["n"])
    dirichlet = boundary_data(grid, cfg["boundary"])
    start_values, fallback = textures.warm_start(
        grid,
        cfg["boundary"],
        eps,
        params,
        seed=cfg["options"].seed,
        noise=cfg["noise"],
    )
    field0 = assemble_field(grid, dirichlet, start_values, eps, params)
    field, log = solver.minimize(field0, cfg["options"])
    field = solver.truncate(field)

    breakdown = energy(field)
    hypo_consts, _ = validate_cached(params)
    report = analysis.detect_defects(field, delta, manifold_constants=hypo_consts)
    stats = analysis.biaxiality_stats(field)

    os.makedirs(out_dir, exist_ok=True)
    dump_path = os.path.join(out_dir, "field.ldg")
    fieldio.dump_field(field, dump_path, payload=cfg["field_format"])
    fieldio.write_csv(
        os.path.join(out_dir, "iterations.csv"),
        ["iter", "energy_total", "energy_dirichlet", "energy_potential", "grad_sup", "step"],
        [
            (
                row["iter"],
                row["energy_total"],
                row["energy_dirichlet"],
                row["energy_potential"],
                row["grad_sup"],
                row["step"],
            )
            for row in log
        ],
    )
    if cfg["vtk"]:
        fieldio.export_vtk(field, os.path.join(out_dir, "field.vtk"))

    summary = {
        "epsilon": eps,
        "material": cfg["material"],
        "grid_n": cfg["n"],
        "energy": breakdown.as_dict(),
        "biaxiality": stats,
        "defects": report.as_dict(),
        "seed": cfg["options"].seed,
        "iterations": log[-1]["iter"],
        "grad_sup": log[-1]["grad_sup"],
        "converged": log[-1]["grad_sup"] <= cfg["options"].grad_tol,
        "warm_start_fallback": fallback,
        "wall_time_s": time.perf_counter() - started,
        "field_dump": dump_path,
    }
    fieldio.write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


_HYPO_CACHE = {}


def validate_cached(params):
    """Hypothesis validation per material (memoized; deterministic seed)."""
    key = (params.a, params.b, params.c)
    if key not in _HYPO_CACHE:
        from .potential import validate_hypotheses

        _HYPO_CACHE[key] = validate_hypotheses(params, samples=1000)
    return _HYPO_CACHE[key]


def cmd_solve(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["options"].seed = args.seed
    summary = _solve_once(cfg, cfg["epsilons"][0], args.out, args.delta)
    if summary["warm_start_fallback"]:
        params = derive_params(**cfg["material"])
        bound = cfg["domain"].radius * np.sqrt(params.sigma)
        print(
            f"warning: core does not fit (eps >= R*sqrt(sigma) = {bound:.6g}); "
            "used the radial boundary extension as the initial field",
            file=sys.stderr,
        )
    print(json.dumps({k: summary[k] for k in ("epsilon", "converged", "iterations")}))
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config, sweep=True)
    if args.seed is not None:
        cfg["options"].seed = args.seed
    jobs = max(1, args.jobs)
    runs = []
    if jobs == 1:
        for eps in cfg["epsilons"]:
            runs.append(
                _solve_once(
                    cfg, eps, os.path.join(args.out, f"eps-{eps:g}"), args.delta
                )
            )
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    _solve_once,
                    cfg,
                    eps,
                    os.path.join(args.out, f"eps-{eps:g}"),
                    args.delta,
                )
                for eps in cfg["epsilons"]
            ]
            runs = [f.result() for f in futures]

    rows = [
        (
            run["epsilon"],
            run["energy"]["total"],
            run["energy"]["dirichlet"],
            run["energy"]["potential"],
            run["biaxiality"]["max_beta"],
            run["biaxiality"]["min_absq"],
            run["defects"]["count"],
        )
        for run in runs
    ]
    fieldio.write_csv(
        os.path.join(args.out, "sweep.csv"),
        ["epsilon", "E_total", "E_dirichlet", "E_potential", "max_beta", "min_absQ", "defect_count"],
        rows,
    )
    logeps = np.abs(np.log([run["epsilon"] for run in runs]))
    totals = np.array([run["energy"]["total"] for run in runs])
    slope, intercept = np.polyfit(logeps, totals, 1)
    rate = manifold.DEFECT_ENERGY_RATE
    fit = {
        "slope": float(slope),
        "intercept": float(intercept),
        "reference_rate": rate,
        "slope_over_reference": float(slope / rate),
    }
    fieldio.write_json(
        os.path.join(args.out, "sweep_summary.json"),
        {"fit": fit, "runs": runs},
    )
    print(json.dumps(fit))
    return EXIT_OK


def cmd_analyze(args):
    field = fieldio.load_field(args.field)
    hypo_consts, _ = validate_cached(field.params)
    report = analysis.detect_defects(
        field, args.delta, manifold_constants=hypo_consts
    )
    stats = analysis.biaxiality_stats(field)
    dom = field.grid.domain
    eps = field.epsilon

    main = analysis.dominant_defect(report)
    center = main.centroid if main is not None else dom.center
    rho_lo = max(5.0 * eps, (main.radius + 2 * field.grid.h) if main else 5 * eps)
    rho_hi = dom.radius / 2.0
    profile_rows = []
    skipped = []
    if rho_hi > rho_lo:
        for rho in np.geomspace(rho_lo, rho_hi, num=12):
            try:
                prof = analysis.radial_profile(
                    field, center, [rho], defect_report=report
                )
                profile_rows.extend(prof.rows)
            except (CircleOutsideDomain, CircleMeetsDefect) as err:
                skipped.append({"rho": float(rho), "reason": str(err)})
    loop = None
    if profile_rows:
        try:
            loop = analysis.circle_loop_diagnostics(
                field, center, profile_rows[0]["rho"], defect_report=report
            )
        except (ProjectionUndefined, CircleMeetsDefect) as err:
            loop = {"error": str(err)}

    ball_center = dom.center
    clearance = dom.radius - np.hypot(
        ball_center[0] - dom.center[0], ball_center[1] - dom.center[1]
    )
    pohozaev = None
    try:
        pohozaev = analysis.pohozaev_residual(
            field, ball_center, 0.45 * clearance
        )
    except BallOutsideDomain as err:
        pohozaev = {"error": str(err)}

    os.makedirs(args.out, exist_ok=True)
    fieldio.write_csv(
        os.path.join(args.out, "profile.csv"),
        ["rho", "S", "R", "length", "variance"],
        [
            (row["rho"], row["S"], row["R"], row["length"], row["speed_variance"])
            for row in profile_rows
        ],
    )
    summary = {
        "field": args.field,
        "epsilon": eps,
        "defects": report.as_dict(),
        "biaxiality": stats,
        "profile": profile_rows,
        "profile_skipped": skipped,
        "loop": loop,
        "pohozaev_residual": pohozaev,
        "reference_rate": manifold.DEFECT_ENERGY_RATE,
        "min_loop_length": manifold.MIN_LOOP_LENGTH,
    }
    fieldio.write_json(os.path.join(args.out, "analysis.json"), summary)
    print(
        json.dumps(
            {
                "defect_count": report.count,
                "max_beta": stats["max_beta"],
                "maximal_biaxial": stats["maximal_biaxial"],
            }
        )
    )
    return EXIT_OK


def cmd_compare(args):
    cfg = load_config(args.config)
    params = derive_params(**cfg["material"])
    if cfg["domain"].kind != "disk":
        raise ConfigInvalid("compare: domain must be a disk")
    grid = build_grid(cfg["domain"], cfg["n"])
    eps = cfg["epsilons"][0]
    try:
        report = textures.compare_cores(grid, eps, params)
    except EpsilonTooLarge:
        bound = cfg["domain"].radius * np.sqrt(params.sigma)
        print(
            f"error: core does not fit; need eps < R*sqrt(sigma) = {bound:.6g}",
            file=sys.stderr,
        )
        raise
    os.makedirs(args.out, exist_ok=True)
    fieldio.write_json(os.path.join(args.out, "compare.json"), report)
    print(
        json.dumps(
            {
                "gap": report["gap"],
                "predicted_gap": report["predicted_gap"],
                "t": report["t"],
            }
        )
    )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ldg2d",
        description="2D Landau-de Gennes Q-tensor laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", "-c", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep jobs")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument(
            "--delta",
            type=float,
            default=0.3,
            help="defect threshold distance to the vacuum manifold",
        )

    common(sub.add_parser("solve", help="minimize one configuration"))
    common(sub.add_parser("sweep", help="epsilon sweep with energy fit"))
    analyze = sub.add_parser("analyze", help="diagnostics on a field dump")
    analyze.add_argument("--field", required=True, help="field dump path")
    common(analyze, config=False)
    common(sub.add_parser("compare", help="biaxial vs melting core energies"))
    return parser


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DumpCorrupt, OSError) as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigInvalid, InvalidSpec, NonPositiveCoefficient, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
