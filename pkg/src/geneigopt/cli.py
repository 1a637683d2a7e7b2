"""Command-line front end: config ingestion, runs, rendering, verification.

Subcommands:

* ``solve <config>``      one solver run (subgradient / smoothed APG)
* ``sweep-eps <config>``  epsilon-continuation over a schedule
* ``bisect <config>``     global bisection solve
* ``render <result>``     SVG drawing of a stored design
* ``verify <suite>``      run the numerical certification suites

Configs and results are JSON; iteration histories are CSV.  The environment
variable ``GENEIG_SEED`` overrides the configured seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import xml.etree.ElementTree as ET
from dataclasses import asdict

import jsonschema
import numpy as np

from . import __version__, problems, solvers, truss, verify
from .errors import BracketError, ConfigError, GenEigError
from .problems import FeasibleSet, ProblemSpec
from .solvers import DISPLAY_THRESHOLD, SolverOptions

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BRACKET = 3

FORM_EXACT = "exact"
FORM_PENCIL_EPS = "pencil_eps"
FORM_LOWER_BOUND_EPS = "lower_bound_eps"

_SOLVER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"enum": ["subgradient", "smoothed_apg", "bisection"]},
        "max_iters": {"type": "integer", "minimum": 1},
        "step_rule": {"enum": [solvers.STEP_POLYAK, solvers.STEP_DIMINISHING,
                               solvers.STEP_CONSTANT]},
        "initial_step": {"type": "number", "exclusiveMinimum": 0},
        "smoothing_mu0": {"type": "number", "exclusiveMinimum": 0},
        "mu_decay": {"enum": [solvers.MU_FIXED, solvers.MU_ONE_OVER_K]},
        "restart": {"type": "boolean"},
        "tol_obj": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "bisect_tol": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "volume"],
    "properties": {
        "problem": {"enum": [problems.ROBUST_COMPLIANCE, problems.EIGENFREQUENCY]},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nx", "ny", "spacing"],
            "properties": {
                "nx": {"type": "integer", "minimum": 1},
                "ny": {"type": "integer", "minimum": 1},
                "spacing": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "nodes": {"type": "array",
                  "items": {"type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2}},
        "bars": {"type": "array",
                 "items": {"type": "array", "items": {"type": "integer"},
                           "minItems": 2, "maxItems": 2}},
        "fixed_nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["dirs"],
                "properties": {
                    "ix": {"type": "integer", "minimum": 0},
                    "iy": {"type": "integer", "minimum": 0},
                    "node": {"type": "integer", "minimum": 0},
                    "dirs": {"enum": ["x", "y", "xy"]},
                },
            },
        },
        "load_node": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ix": {"type": "integer", "minimum": 0},
                "iy": {"type": "integer", "minimum": 0},
                "node": {"type": "integer", "minimum": 0},
            },
        },
        "load_scale": {"type": "number", "exclusiveMinimum": 0},
        "load_dims": {"enum": [1, 2]},
        "nonstructural_mass": {"type": "number", "minimum": 0},
        "material": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "young_modulus": {"type": "number", "exclusiveMinimum": 0},
                "density": {"type": "number", "minimum": 0},
            },
        },
        "volume": {
            "type": "object",
            "additionalProperties": False,
            "required": ["v0"],
            "properties": {
                "v0": {"type": "number", "exclusiveMinimum": 0},
                "constraint": {"enum": [problems.VOLUME_LE, problems.VOLUME_EQ]},
            },
        },
        "formulation": {"enum": [FORM_EXACT, FORM_PENCIL_EPS,
                                 FORM_LOWER_BOUND_EPS]},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "eps_schedule": {"type": "array", "minItems": 1,
                         "items": {"type": "number", "exclusiveMinimum": 0}},
        "solver": _SOLVER_SCHEMA,
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "result": {"type": "string"},
                "history": {"type": "string"},
                "svg": {"type": "string"},
            },
        },
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise ConfigError(f"invalid config field {field}: {exc.message}",
                          field=field)
    if ("grid" in cfg) == ("nodes" in cfg):
        raise ConfigError("config needs exactly one of 'grid' or 'nodes'",
                          field="grid")
    if "nodes" in cfg and "bars" not in cfg:
        raise ConfigError("'nodes' requires 'bars'", field="bars")
    return cfg


def config_digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _node_index(cfg: dict, entry: dict, nx: int) -> int:
    if "node" in entry:
        return entry["node"]
    if "ix" not in entry or "iy" not in entry:
        raise ConfigError("node reference needs 'node' or 'ix'/'iy'",
                          field="load_node")
    return truss.grid_node_index(nx, entry["ix"], entry["iy"])


def build_from_config(cfg: dict):
    """Construct (ground structure, model, problem spec fragments)."""
    if "grid" in cfg:
        g = cfg["grid"]
        nx = g["nx"]
        fixed_map = {}
        for entry in cfg.get("fixed_nodes", []):
            fixed_map[_node_index(cfg, entry, nx)] = entry["dirs"]

        def fixed(ix, iy):
            return fixed_map.get(truss.grid_node_index(nx, ix, iy), "")

        gs = truss.generate_ground_structure(g["nx"], g["ny"], g["spacing"],
                                             fixed)
    else:
        nodes = np.asarray(cfg["nodes"], dtype=float)
        bars = np.asarray(cfg["bars"], dtype=int)
        nx = 0
        fixed = set()
        for entry in cfg.get("fixed_nodes", []):
            node = entry.get("node")
            if node is None:
                raise ConfigError("explicit geometry requires 'node' indices",
                                  field="fixed_nodes")
            if "x" in entry["dirs"]:
                fixed.add(2 * node)
            if "y" in entry["dirs"]:
                fixed.add(2 * node + 1)
        gs = truss.GroundStructure(nodes=nodes, bars=bars,
                                   fixed_dofs=frozenset(fixed), spacing=1.0)

    mat_cfg = cfg.get("material", {})
    mat = truss.Material(young_modulus=mat_cfg.get("young_modulus", 1.0),
                         density=mat_cfg.get("density", 0.0))
    load_entry = cfg.get("load_node")
    if load_entry is None:
        raise ConfigError("config requires 'load_node'", field="load_node")
    load_node = _node_index(cfg, load_entry, nx)
    model = truss.build_model(
        gs, mat, load_node,
        load_scale=cfg.get("load_scale", 1.0),
        nonstructural_mass=cfg.get("nonstructural_mass", 0.0),
        load_dims=cfg.get("load_dims", 2),
    )
    return gs, model


def problem_from_config(cfg: dict, model, eps: float | None = None):
    vol = cfg["volume"]
    default_kind = problems.VOLUME_LE \
        if cfg["problem"] == problems.ROBUST_COMPLIANCE else problems.VOLUME_EQ
    formulation = cfg.get("formulation", FORM_PENCIL_EPS)
    if eps is None:
        eps = cfg.get("eps", 0.0 if formulation == FORM_EXACT else 1e-6)
    lower_bound = eps if formulation == FORM_LOWER_BOUND_EPS else 0.0
    pencil_eps = eps if formulation == FORM_PENCIL_EPS else 0.0
    fs = FeasibleSet(l=model.volumes, v0=vol["v0"],
                     kind=vol.get("constraint", default_kind),
                     lower_bound=lower_bound)
    return ProblemSpec(cfg["problem"], model, fs, eps=pencil_eps)


def solver_options_from_config(cfg: dict) -> SolverOptions:
    s = dict(cfg.get("solver", {}))
    s.pop("name", None)
    env_seed = os.environ.get("GENEIG_SEED")
    if env_seed is not None:
        s["seed"] = int(env_seed)
    return SolverOptions(**s)


def result_record(cfg: dict, gs, model, report, wall_time: float) -> dict:
    return {
        "config_digest": config_digest(cfg),
        "tool_version": __version__,
        "wall_time_s": wall_time,
        "model": {
            "m": model.m,
            "n": model.n,
            "bar_count": gs.n_bars,
            "node_count": gs.n_nodes,
        },
        "geometry": {
            "nodes": gs.nodes.tolist(),
            "bars": gs.bars.tolist(),
            "fixed_dofs": sorted(gs.fixed_dofs),
            "load_node": model.load_node,
        },
        "report": {
            "x_final": report.x_final.tolist(),
            "obj_final": report.obj_final,
            "obj_exact": "inf" if math.isinf(report.obj_exact)
            else report.obj_exact,
            "eps_used": report.eps_used,
            "iterations": report.iterations,
            "termination": report.termination,
            "active_bars": report.active_bars,
        },
    }


def _write_result(record: dict, reports, cfg: dict, config_path: str):
    out = cfg.get("output", {})
    base, _ = os.path.splitext(config_path)
    result_path = out.get("result", base + ".result.json")
    history_path = out.get("history", base + ".history.csv")
    with open(result_path, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    with open(history_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "step", "eps", "mu"])
        for rep in reports:
            for it, obj in rep.history:
                writer.writerow([it, repr(obj), "", rep.eps_used, ""])
    svg_path = out.get("svg")
    if svg_path:
        render_svg(record, svg_path)
    return result_path


def render_svg(result: dict, out_path: str,
               display_threshold: float = DISPLAY_THRESHOLD) -> str:
    """Draw the final design: bar widths proportional to areas.

    Bars below ``display_threshold`` times the largest area are omitted.
    Fixed nodes are filled black, the load/mass node is red, free nodes are
    white with a black outline.
    """
    geo = result["geometry"]
    nodes = np.asarray(geo["nodes"], dtype=float)
    bars = np.asarray(geo["bars"], dtype=int).reshape(-1, 2)
    x = np.asarray(result["report"]["x_final"], dtype=float)
    fixed_nodes = {d // 2 for d in geo["fixed_dofs"]}
    load_node = geo["load_node"]

    span = max(np.ptp(nodes[:, 0]), np.ptp(nodes[:, 1]), 1.0)
    scale = 400.0 / span
    pad = 40.0
    xmin, ymin = nodes.min(axis=0)
    ymax = nodes[:, 1].max()

    def pos(node):
        px = pad + (nodes[node, 0] - xmin) * scale
        py = pad + (ymax - nodes[node, 1]) * scale
        return px, py

    width = pad * 2 + (nodes[:, 0].max() - xmin) * scale
    height = pad * 2 + (ymax - ymin) * scale
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(width), height=str(height))
    top = float(np.max(x)) if len(x) else 0.0
    drawn = 0
    if top > 0:
        for j, (a, b) in enumerate(bars):
            if x[j] < display_threshold * top:
                continue
            xa, ya = pos(a)
            xb, yb = pos(b)
            ET.SubElement(svg, "line", x1=f"{xa:.2f}", y1=f"{ya:.2f}",
                          x2=f"{xb:.2f}", y2=f"{yb:.2f}", stroke="black",
                          attrib={"stroke-width": f"{8.0 * x[j] / top:.4f}",
                                  "stroke-linecap": "round"})
            drawn += 1
    if drawn == 0:
        print("warning: no bars above the display threshold", file=sys.stderr)
    for node in range(nodes.shape[0]):
        px, py = pos(node)
        if node == load_node:
            fill = "red"
        elif node in fixed_nodes:
            fill = "black"
        else:
            fill = "white"
        ET.SubElement(svg, "circle", cx=f"{px:.2f}", cy=f"{py:.2f}", r="5",
                      fill=fill, stroke="black",
                      attrib={"stroke-width": "1"})
    ET.ElementTree(svg).write(out_path, xml_declaration=True, encoding="unicode")
    return out_path


def _dispatch_solve(cfg: dict, config_path: str, mode: str) -> int:
    gs, model = build_from_config(cfg)
    opts = solver_options_from_config(cfg)
    solver_name = cfg.get("solver", {}).get("name", "subgradient")
    start = time.perf_counter()

    if mode == "sweep":
        schedule = cfg.get("eps_schedule")
        if not schedule:
            raise ConfigError("sweep-eps requires 'eps_schedule'",
                              field="eps_schedule")
        spec = problem_from_config(cfg, model, eps=schedule[0])
        method = "smoothed_apg" if solver_name == "smoothed_apg" \
            else "subgradient"
        reports = solvers.eps_continuation(spec, schedule, opts, method=method)
        final = reports[-1]
    elif mode == "bisect" or solver_name == "bisection":
        spec = problem_from_config(cfg, model)
        final = solvers.bisection_global(spec, opts=opts)
        reports = [final]
    else:
        spec = problem_from_config(cfg, model)
        solve = solvers.smoothed_apg if solver_name == "smoothed_apg" \
            else solvers.projected_subgradient
        final = solve(spec, None, opts)
        reports = [final]

    wall = time.perf_counter() - start
    record = result_record(cfg, gs, model, final, wall)
    if mode == "sweep":
        record["sweep"] = [
            {"eps": r.eps_used, "obj_final": r.obj_final,
             "distance_to_last": float(np.linalg.norm(
                 r.x_final - reports[-1].x_final))}
            for r in reports
        ]
    path = _write_result(record, reports, cfg, config_path)
    print(f"wrote {path}  (objective {final.obj_final:.6g}, "
          f"{final.active_bars}/{model.m} active bars)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geneigopt",
        description="Generalized eigenvalue topology optimization runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep-eps", "bisect"):
        p = sub.add_parser(name)
        p.add_argument("config")
    p = sub.add_parser("render")
    p.add_argument("result")
    p.add_argument("-o", "--out", default=None)
    p.add_argument("--threshold", type=float, default=DISPLAY_THRESHOLD)
    p = sub.add_parser("verify")
    p.add_argument("suite", choices=["geneig", "examples", "solvers", "all"])
    p.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        if args.command in ("solve", "sweep-eps", "bisect"):
            cfg = load_config(args.config)
            mode = {"solve": "solve", "sweep-eps": "sweep",
                    "bisect": "bisect"}[args.command]
            return _dispatch_solve(cfg, args.config, mode)
        if args.command == "render":
            with open(args.result) as fh:
                result = json.load(fh)
            out = args.out or os.path.splitext(args.result)[0] + ".svg"
            render_svg(result, out, args.threshold)
            print(f"wrote {out}")
            return EXIT_OK
        if args.command == "verify":
            seed = int(os.environ.get("GENEIG_SEED", args.seed))
            results = verify.run_suites(args.suite, seed)
            print(json.dumps(results, indent=2))
            ok = all(r["passed"] for r in results)
            for r in results:
                status = "PASS" if r["passed"] else "FAIL"
                print(f"{status} {r['name']} {r['detail']}", file=sys.stderr)
            return EXIT_OK if ok else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BracketError as exc:
        print(f"bisection error: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except GenEigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
