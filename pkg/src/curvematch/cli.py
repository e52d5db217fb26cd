"""Command-line entry points for reproducible registration runs.

Each command resolves one JSON config (defaults filled in, unknown keys
rejected), writes the resolved document into the output directory, and
emits CSV artifacts only through repr-formatted floats so a re-run from
the resolved config is byte-identical.

Exit codes: 0 ok, 2 usage/config problems, 3 forward-map failures,
4 linear-algebra failures.
"""

import argparse
import json
import os
import sys
import time
from multiprocessing import Pool

import numpy as np

from .assembly import build_dofmap
from .eki import EKIConfig, run_eki
from .errors import CurveMatchError, ForwardError, SolverError, UsageError
from .forward import Scenario, forward_operator, shoot
from .mesh import (
    MeshGenConfig,
    curve_polygon,
    generate_template_mesh,
    min_cell_angle,
    write_mesh_snapshot,
)
from .momentum import (
    SYNTHETIC,
    momentum_norm,
    read_momentum_csv,
    synthetic_momentum,
    write_momentum_csv,
)
from .raster import RasterSpec, area, rasterize, read_raster, smooth, write_raster

_SECTION_DEFAULTS = {
    "mesh": {"half_width": 10.0, "h": 1.0, "radius": 1.0, "segments": 48},
    "target": {"alpha": 0.5, "steps": 15},
    "inversion": {"alpha": 1.0, "steps": 10},
    "raster": {"nx": 128, "ny": 128, "kappa": 10.0, "half_width": None},
    "eki": {"ensemble_size": 20, "max_iter": 5, "xi": 1.0e-3, "init_low": -25.0, "init_high": 25.0},
}
_TOP_DEFAULTS = {"scenario": None, "out_dir": "run", "seed": 0, "jobs": 1}


def resolve_config(doc: dict) -> dict:
    """Fill in defaults; reject anything the schema does not know."""
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    known_top = set(_TOP_DEFAULTS) | set(_SECTION_DEFAULTS)
    unknown = set(doc) - known_top
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = dict(_TOP_DEFAULTS)
    for key in _TOP_DEFAULTS:
        if key in doc:
            out[key] = doc[key]
    for name, defaults in _SECTION_DEFAULTS.items():
        given = doc.get(name, {})
        if not isinstance(given, dict):
            raise UsageError(f"config section {name!r} must be an object")
        bad = set(given) - set(defaults)
        if bad:
            raise UsageError(f"unknown keys in config section {name!r}: {sorted(bad)}")
        merged = dict(defaults)
        merged.update(given)
        out[name] = merged
    if out["raster"]["half_width"] is None:
        out["raster"]["half_width"] = out["mesh"]["half_width"]
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return resolve_config({})
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    return resolve_config(doc)


def _mesh_config(cfg: dict) -> MeshGenConfig:
    m = cfg["mesh"]
    return MeshGenConfig(
        half_width=float(m["half_width"]),
        h=float(m["h"]),
        radius=float(m["radius"]),
        segments=int(m["segments"]),
    )


def _raster_spec(cfg: dict) -> RasterSpec:
    r = cfg["raster"]
    return RasterSpec(
        nx=int(r["nx"]),
        ny=int(r["ny"]),
        half_width=float(r["half_width"]),
        kappa=float(r["kappa"]),
    )


def _eki_config(cfg: dict) -> EKIConfig:
    e = cfg["eki"]
    return EKIConfig(
        ensemble_size=int(e["ensemble_size"]),
        max_iter=int(e["max_iter"]),
        xi=float(e["xi"]),
        seed=int(cfg["seed"]),
        init_low=float(e["init_low"]),
        init_high=float(e["init_high"]),
    )


def _write_config(out_dir: str, cfg: dict) -> None:
    with open(os.path.join(out_dir, "config_resolved.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_polygon_csv(path: str, poly: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("vertex,x,y\n")
        for i, (x, y) in enumerate(poly):
            fh.write(f"{i},{float(x)!r},{float(y)!r}\n")


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def _shoelace(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# one scenario per worker process, set once at pool start
_POOL_SCENARIO = None


def _pool_init(scenario):
    global _POOL_SCENARIO
    _POOL_SCENARIO = scenario


def _pool_eval(p):
    try:
        return forward_operator(p, _POOL_SCENARIO).values.ravel(), True
    except ForwardError:
        return None, False


def cmd_mesh_gen(cfg: dict) -> int:
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    mesh, loop = generate_template_mesh(_mesh_config(cfg))
    write_mesh_snapshot(out, mesh, loop)
    _write_polygon_csv(os.path.join(out, "template_curve.csv"), curve_polygon(loop, mesh.vertices))
    _write_config(out, cfg)
    print(
        f"mesh: {mesh.num_vertices} vertices, {mesh.num_cells} cells, "
        f"{mesh.num_edges} edges, min angle {min_cell_angle(mesh):.1f} deg, "
        f"{loop.num_facets} curve facets"
    )
    return 0


def cmd_make_target(cfg: dict) -> int:
    name = cfg["scenario"]
    if name not in SYNTHETIC:
        raise UsageError(f"scenario must be one of {sorted(SYNTHETIC)}, got {name!r}")
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    mesh, loop = generate_template_mesh(_mesh_config(cfg))
    dofmap = build_dofmap(mesh)
    spec = _raster_spec(cfg)
    p_true = synthetic_momentum(name, loop, mesh.vertices)

    res = shoot(mesh, loop, dofmap, p_true, float(cfg["target"]["alpha"]), int(cfg["target"]["steps"]))
    target_poly = res.polygons[-1]
    field = smooth(rasterize(target_poly, spec))

    _write_polygon_csv(os.path.join(out, "template_curve.csv"), curve_polygon(loop, mesh.vertices))
    _write_polygon_csv(os.path.join(out, "target_curve.csv"), target_poly)
    write_momentum_csv(os.path.join(out, "true_momentum.csv"), p_true)
    write_raster(os.path.join(out, "target_raster"), field)
    _write_config(out, cfg)
    print(
        f"target {name!r}: curve area {_shoelace(target_poly):.6f} "
        f"(template {_shoelace(res.polygons[0]):.6f}), raster mass {area(field):.6f}"
    )
    return 0


def cmd_forward(cfg: dict, momentum_path: str) -> int:
    out = cfg["out_dir"]
    mesh, loop = generate_template_mesh(_mesh_config(cfg))
    try:
        p0 = read_momentum_csv(momentum_path)
    except OSError as exc:
        raise UsageError(f"cannot read momentum: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if p0.shape != (loop.num_facets,):
        raise UsageError(f"momentum has {p0.size} facets, curve has {loop.num_facets}")

    os.makedirs(out, exist_ok=True)
    dofmap = build_dofmap(mesh)
    res = shoot(mesh, loop, dofmap, p0, float(cfg["target"]["alpha"]), int(cfg["target"]["steps"]))
    for k, poly in enumerate(res.polygons):
        _write_polygon_csv(os.path.join(out, f"trajectory_{k:03d}.csv"), poly)
    write_mesh_snapshot(out, mesh, loop, coords=res.coords, prefix="mesh_final")
    _write_config(out, cfg)
    areas = ", ".join(f"{_shoelace(p):.4f}" for p in res.polygons[:: max(1, len(res.polygons) // 5)])
    print(f"forward: {len(res.polygons) - 1} steps, areas {areas} ... {_shoelace(res.polygons[-1]):.4f}")
    return 0


def cmd_invert(cfg: dict) -> int:
    out = cfg["out_dir"]
    raster_base = os.path.join(out, "target_raster")
    if not (os.path.exists(raster_base + ".bin") and os.path.exists(raster_base + ".json")):
        raise UsageError(f"no target raster under {out!r}; run make-target first")
    target_field = read_raster(raster_base)
    spec = _raster_spec(cfg)
    if target_field.spec != spec:
        raise UsageError("target raster spec does not match config raster section")

    mesh, loop = generate_template_mesh(_mesh_config(cfg))
    dofmap = build_dofmap(mesh)
    scenario = Scenario(
        mesh=mesh,
        loop=loop,
        dofmap=dofmap,
        alpha=float(cfg["inversion"]["alpha"]),
        steps=int(cfg["inversion"]["steps"]),
        spec=spec,
    )
    p_true = None
    true_path = os.path.join(out, "true_momentum.csv")
    if os.path.exists(true_path):
        p_true = read_momentum_csv(true_path)
        if p_true.shape != (loop.num_facets,):
            raise UsageError("true_momentum.csv does not match the curve facet count")

    ecfg = _eki_config(cfg)
    jobs = int(cfg["jobs"])
    target = target_field.values.ravel()

    def fwd(p):
        return forward_operator(p, scenario).values.ravel()

    forward_many = None
    pool = None
    if jobs > 1:
        pool = Pool(jobs, initializer=_pool_init, initargs=(scenario,))

        def forward_many(P):
            results = pool.map(_pool_eval, list(P))
            ok = np.array([r[1] for r in results])
            Q = np.zeros((len(P), target.size))
            for j, (q, good) in enumerate(results):
                if good:
                    Q[j] = q
            return Q, ok

    diag_path = os.path.join(out, "diagnostics.csv")
    diag = open(diag_path, "w")
    diag.write("iteration,E,R,S\n")

    def on_iteration(k, E, R, S, pbar):
        diag.write(f"{k},{_fmt(E)},{_fmt(R)},{_fmt(S)}\n")
        diag.flush()
        try:
            mres = shoot(mesh, loop, dofmap, pbar, scenario.alpha, scenario.steps)
        except ForwardError:
            return
        _write_polygon_csv(os.path.join(out, f"mean_curve_{k:03d}.csv"), mres.polygons[-1])

    t0 = time.perf_counter()
    try:
        result = run_eki(
            fwd,
            target,
            ecfg,
            loop.num_facets,
            loop.lengths0,
            spec.cell_area,
            p_true=p_true,
            on_iteration=on_iteration,
            forward_many=forward_many,
        )
    finally:
        diag.close()
        if pool is not None:
            pool.close()
            pool.join()
    elapsed = time.perf_counter() - t0

    with open(os.path.join(out, "ensemble_final.csv"), "w") as fh:
        fh.write("member,facet,p\n")
        for j in range(result.momenta.shape[0]):
            for f in range(result.momenta.shape[1]):
                fh.write(f"{j},{f},{float(result.momenta[j, f])!r}\n")
    write_momentum_csv(os.path.join(out, "mean_momentum.csv"), result.mean_momentum)
    with open(os.path.join(out, "timings.txt"), "w") as fh:
        fh.write(f"inversion_seconds {elapsed:.3f}\n")
    _write_config(out, cfg)
    print(
        f"invert: {ecfg.max_iter} iterations, E {result.E[0]:.6f} -> {result.E[-1]:.6f}, "
        f"R {result.R[-1]:.6f}, S {result.S[-1]:.6f}, {elapsed:.1f} s"
    )
    return 0


def cmd_report(run_dir: str) -> int:
    cfg_path = os.path.join(run_dir, "config_resolved.json")
    if not os.path.exists(cfg_path):
        raise UsageError(f"no config_resolved.json under {run_dir!r}")
    with open(cfg_path) as fh:
        cfg = json.load(fh)
    print(f"run directory: {run_dir}")
    print(f"scenario: {cfg.get('scenario')!r}, seed {cfg.get('seed')}")
    diag_path = os.path.join(run_dir, "diagnostics.csv")
    if os.path.exists(diag_path):
        with open(diag_path) as fh:
            rows = [line.strip().split(",") for line in fh.readlines()[1:] if line.strip()]
        print(f"iterations recorded: {len(rows)}")
        if rows:
            first, last = rows[0], rows[-1]
            for label, idx in (("E", 1), ("R", 2), ("S", 3)):
                a, b = first[idx], last[idx]
                if a and b:
                    print(f"  {label}: {float(a):.6f} -> {float(b):.6f}")
    else:
        print("no diagnostics.csv (inversion not run)")
    for name in ("template_curve.csv", "target_curve.csv", "mean_momentum.csv", "target_raster.bin"):
        mark = "present" if os.path.exists(os.path.join(run_dir, name)) else "absent"
        print(f"  {name}: {mark}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="curvematch", description="Planar curve registration runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
        p.add_argument("--jobs", type=int, help="ensemble evaluation processes (overrides config)")

    for name in ("mesh-gen", "make-target", "forward", "invert"):
        p = sub.add_parser(name)
        add_common(p)
        if name == "forward":
            p.add_argument("--momentum", required=True, help="momentum CSV (facet,p)")
    rep = sub.add_parser("report")
    rep.add_argument("run_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.run_dir)
        cfg = load_config(args.config)
        if args.out is not None:
            cfg["out_dir"] = args.out
        if args.seed is not None:
            cfg["seed"] = int(args.seed)
        if args.jobs is not None:
            if args.jobs < 1:
                raise UsageError("--jobs must be at least 1")
            cfg["jobs"] = int(args.jobs)
        if args.command == "mesh-gen":
            return cmd_mesh_gen(cfg)
        if args.command == "make-target":
            return cmd_make_target(cfg)
        if args.command == "forward":
            return cmd_forward(cfg, args.momentum)
        return cmd_invert(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ForwardError as exc:
        print(f"forward failure: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except CurveMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
