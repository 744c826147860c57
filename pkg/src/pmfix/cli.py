"""pmfix command line.

    pmfix run <scenario.json> [--out DIR] [--seed N]
    pmfix run-all --out DIR
    pmfix list
    pmfix schema <command>

Exit codes: 0 success, 1 bad input, 2 the mathematics said no (reports are
still written).
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import control_functions as cf
from . import fixed_point_engine as fpe
from . import ifs_fractals as ifs
from . import integral_equation as ie
from . import metric_core as mc
from . import partial_hausdorff as ph
from .errors import PmfixError
from .registry import list_builtins, metric_from_name

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2


class InputError(Exception):
    pass


# -- schemas -----------------------------------------------------------------------

_num = {"type": "number"}
_int = {"type": "integer"}
_grid = {"type": "object", "required": ["lo", "hi", "n"],
         "properties": {"lo": _num, "hi": _num, "n": {"type": "integer", "minimum": 1}}}
_pair = {"oneOf": [{"type": "string"},
                   {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}}]}
_piece = {"type": "object", "properties": {"lo": _num, "hi": _num, "slope": _num, "intercept": _num,
                                           "lo_open": {"type": "boolean"}, "hi_open": {"type": "boolean"}}}
_maps = {"oneOf": [
    {"type": "string", "enum": ["example22", "identity"]},
    {"type": "object", "required": ["f", "g", "S", "T"],
     "properties": {k: {"type": "array", "items": _piece} for k in ("f", "g", "S", "T")}},
]}
_quartet_payload = {
    "type": "object",
    "required": ["metric", "control_pair", "maps", "grid"],
    "properties": {
        "metric": {"type": "string"}, "k": _num, "control_pair": _pair, "maps": _maps,
        "order": {"type": "string", "enum": ["usual-leq"]}, "grid": _grid, "opts": {"type": "object"},
    },
}

SCHEMAS = {
    "check-axioms": {
        "type": "object",
        "required": ["metrics", "n_triples"],
        "properties": {
            "n_triples": {"type": "integer", "minimum": 1}, "seed": _int,
            "metrics": {"type": "array", "minItems": 1, "items": {
                "type": "object", "required": ["name", "domain"],
                "properties": {"name": {"type": "string"}, "k": _num, "domain": {
                    "type": "object", "required": ["kind"],
                    "properties": {"kind": {"enum": ["real-interval", "nonneg-reals", "interval-pairs",
                                                     "grid-functions"]},
                                   "lo": _num, "hi": _num, "n": _int, "nodes": _int}}}}},
        },
    },
    "verify-contraction": _quartet_payload,
    "fixed-point": _quartet_payload,
    "hausdorff": {
        "type": "object", "required": ["metrics", "grid", "n_sets"],
        "properties": {"metrics": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                       "k": _num, "grid": _grid, "n_sets": {"type": "integer", "minimum": 3},
                       "max_size": {"type": "integer", "minimum": 1}, "seed": _int},
    },
    "ifs": {
        "type": "object", "required": ["seed_set"],
        "properties": {
            "builtin": {"enum": ["sierpinski"]},
            "maps": {"type": "array", "minItems": 1, "items": {
                "type": "object", "required": ["matrix", "offset"],
                "properties": {"type": {"enum": ["affine"]}, "matrix": {"type": "array"},
                               "offset": {"type": "array"}}}},
            "family": {"enum": list(ifs.FAMILIES)}, "params": {"type": "object"},
            "metric": {"type": "string"}, "control_pair": _pair,
            "seed_set": {"type": "array", "minItems": 1}, "opts": {"type": "object"},
            "raster": {"type": "object", "required": ["width", "height", "bounds"],
                       "properties": {"width": _int, "height": _int,
                                      "bounds": {"type": "array", "minItems": 4, "maxItems": 4}}},
        },
        "anyOf": [{"required": ["builtin"]}, {"required": ["maps"]}],
    },
    "integral": {
        "type": "object", "required": ["F", "kappa", "h"],
        "properties": {
            "F": {"type": "object", "required": ["name"],
                  "properties": {"name": {"enum": list(ie.F_BUILTINS)}, "a": _num}},
            "kappa": {"type": "object", "required": ["name"],
                      "properties": {"name": {"enum": list(ie.KAPPA_BUILTINS)}, "c": _num}},
            "h": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.25},
            "N": {"type": "integer", "minimum": 2}, "control_pair": _pair, "opts": {"type": "object"},
        },
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["command", "payload"],
    "properties": {"command": {"enum": list(SCHEMAS)}, "payload": {"type": "object"},
                   "output_dir": {"type": "string"}},
}


# -- helpers --------------------------------------------------------------------

def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _domain(spec: dict) -> mc.DomainDescriptor:
    kind = spec["kind"]
    if kind == "real-interval":
        return mc.real_interval(spec["lo"], spec["hi"], spec.get("n", 2001))
    if kind == "nonneg-reals":
        return mc.nonneg_reals(spec.get("hi", 10.0), spec.get("n", 1001))
    if kind == "interval-pairs":
        return mc.interval_pairs(spec.get("lo", -5.0), spec.get("hi", 5.0), spec.get("n", 60))
    return mc.grid_functions(spec.get("nodes", 21), spec.get("n", 400), spec.get("hi", 5.0))


def _quartet(payload: dict) -> tuple:
    k = float(payload.get("k", 2.0))
    m = metric_from_name(payload["metric"], k)
    cp = cf.pair_from_spec(payload["control_pair"])
    maps = payload["maps"]
    if maps == "example22":
        q = fpe.example22_quartet(k)
    elif maps == "identity":
        q = fpe.identity_quartet()
    else:
        def vec(pieces):
            fn = fpe.piecewise_map(pieces)
            return lambda X: fn(X)
        q = fpe.MapQuartet(vec(maps["f"]), vec(maps["g"]), vec(maps["S"]), vec(maps["T"]), name="piecewise")
    g = payload["grid"]
    dom = mc.real_interval(g["lo"], g["hi"], g["n"])
    return m, q, cp, dom


# -- commands -------------------------------------------------------------------

def cmd_check_axioms(payload, out: Path, seed) -> int:
    seed = payload.get("seed", 42) if seed is None else seed
    reports = []
    for spec in payload["metrics"]:
        m = metric_from_name(spec["name"], spec.get("k", 2.0))
        reports.append(mc.check_axioms(m, _domain(spec["domain"]), payload["n_triples"], seed))
    _dump(out / "axioms.json", [r.to_dict() for r in reports])
    return EXIT_OK if all(r.ok for r in reports) else EXIT_VIOLATION


def cmd_verify_contraction(payload, out: Path, seed) -> int:
    m, q, cp, dom = _quartet(payload)
    rep = fpe.sweep_contraction(m, q, cp, dom)
    _dump(out / "contraction.json", rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_fixed_point(payload, out: Path, seed) -> int:
    m, q, cp, dom = _quartet(payload)
    opts = dict(payload.get("opts", {}))
    x0 = opts.pop("x0", dom.hi)
    seeds = opts.pop("seeds", np.linspace(dom.lo, dom.hi, 10).tolist())
    run_opts = {k: opts[k] for k in ("tol", "max_iters", "window", "tol_pre") if k in opts}

    hyp = fpe.check_dominated_dominating(q, dom, m)
    contraction = fpe.sweep_contraction(m, q, cp, dom)
    trace = fpe.iterate(m, q, cp, x0, grid=dom, **run_opts)
    uniq = fpe.probe_uniqueness(m, q, cp, seeds, grid=dom, **run_opts)

    _dump(out / "hypotheses.json", hyp.to_dict())
    _dump(out / "contraction.json", contraction.to_dict())
    _dump(out / "iteration.json", trace.to_dict())
    _dump(out / "uniqueness.json", uniq.to_dict())
    (out / "trace.csv").write_text(trace.to_csv())
    ok = hyp.ok and contraction.ok and trace.status == "converged" and uniq.unique
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_hausdorff(payload, out: Path, seed) -> int:
    seed = payload.get("seed", 0) if seed is None else seed
    g = payload["grid"]
    grid = np.linspace(g["lo"], g["hi"], g["n"])
    rng = np.random.default_rng(seed)
    max_size = min(payload.get("max_size", 50), len(grid))
    sets = [ph.FiniteSet(rng.choice(grid, size=int(rng.integers(1, max_size + 1)), replace=False))
            for _ in range(payload["n_sets"])]
    sets_dir = out / "sets"
    sets_dir.mkdir(exist_ok=True)
    for i, s in enumerate(sets):
        (sets_dir / f"set_{i:02d}.csv").write_text(s.to_csv())
    reports = {}
    for name in payload["metrics"]:
        m = metric_from_name(name, payload.get("k", 2.0))
        reports[m.name] = ph.check_hausdorff_props(m, sets).to_dict()
    _dump(out / "hausdorff.json", reports)
    return EXIT_OK if not any(any(r["violations"].values()) for r in reports.values()) else EXIT_VIOLATION


def cmd_ifs(payload, out: Path, seed) -> int:
    seed = payload.get("seed", 0) if seed is None else seed
    system = ifs.system_from_config(payload)
    A0 = ph.FiniteSet(mc.as_points(payload["seed_set"], np.asarray(payload["seed_set"]).shape[-1]))
    opts = payload.get("opts", {})
    run = ifs.iterate_attractor(system, A0, tol=opts.get("tol", 1e-4), max_iters=opts.get("max_iters", 60),
                                merge_radius=opts.get("merge_radius"))
    (out / "hp_steps.csv").write_text(run.steps_csv())
    (out / "attractor.csv").write_text(run.final.to_csv())
    report = {"run": run.to_dict()}
    if system.family in ("plain-contraction", "exp-F", "quadratic-F", "sqrt-F"):
        rng = np.random.default_rng(seed)
        lo, hi = run.final.points.min(axis=0), run.final.points.max(axis=0)
        pairs = rng.uniform(lo, hi + 1e-12, size=(2000, 2, A0.dim))
        report["family"] = ifs.check_family(system, pairs).to_dict()
    raster = payload.get("raster")
    if raster:
        img = ifs.render_attractor(run, raster["width"], raster["height"], raster["bounds"])
        (out / "attractor.ppm").write_bytes(ifs.to_ppm(img))
        report["occupied_pixels"] = int(img.sum())
    _dump(out / "ifs.json", report)
    ok = run.status == "converged" and report.get("family", {}).get("violations", 0) == 0
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_integral(payload, out: Path, seed) -> int:
    prob = ie.problem_from_config(payload)
    opts = payload.get("opts", {})
    cond = ie.check_conditions(prob)
    _dump(out / "conditions.json", cond.to_dict())
    if not cond.ok:
        return EXIT_VIOLATION
    res = ie.solve(prob, opts.get("x0", 1.0), tol=opts.get("tol", 1e-10),
                   max_iters=opts.get("max_iters", 10_000), check=False)
    (out / "solution.csv").write_text(res.to_csv())
    _dump(out / "solve.json", res.to_dict())
    return EXIT_OK if res.status == "converged" else EXIT_VIOLATION


COMMANDS = {
    "check-axioms": cmd_check_axioms,
    "verify-contraction": cmd_verify_contraction,
    "fixed-point": cmd_fixed_point,
    "hausdorff": cmd_hausdorff,
    "ifs": cmd_ifs,
    "integral": cmd_integral,
}


# -- scenario handling ------------------------------------------------------------

def bundled_scenarios() -> list[str]:
    root = resources.files("pmfix") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def _read_scenario(ref: str) -> tuple[dict, str]:
    path = Path(ref)
    if path.is_file():
        text, stem = path.read_text(), path.stem
    else:
        name = ref if ref.endswith(".json") else ref + ".json"
        res = resources.files("pmfix") / "scenarios" / name
        if not res.is_file():
            raise InputError(f"no scenario file {ref!r}")
        text, stem = res.read_text(), Path(name).stem
    try:
        scenario = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"parse error in {ref}: {exc}") from exc
    return scenario, stem


def validate(scenario: dict) -> None:
    try:
        jsonschema.validate(scenario, SCENARIO_SCHEMA)
        jsonschema.validate(scenario["payload"], SCHEMAS[scenario["command"]])
    except jsonschema.ValidationError as exc:
        raise InputError(f"schema error: {exc.message}") from exc


def run(ref: str, out: str | None = None, seed: int | None = None) -> int:
    try:
        scenario, stem = _read_scenario(ref)
        validate(scenario)
        out_dir = Path(out or scenario.get("output_dir") or Path("pmfix-out") / stem)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InputError(f"io error: {exc}") from exc
        return COMMANDS[scenario["command"]](scenario["payload"], out_dir, seed)
    except (InputError, PmfixError, ValueError, KeyError, OSError) as exc:
        print(f"pmfix: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run_all(out_root: str, seed: int | None = None) -> dict:
    codes = {}
    for name in bundled_scenarios():
        codes[name] = run(name, str(Path(out_root) / Path(name).stem), seed)
    return codes


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pmfix", description="fixed points in ordered partial metric spaces")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run one scenario file (or the name of a bundled one)")
    p_run.add_argument("scenario")
    p_run.add_argument("--out")
    p_run.add_argument("--seed", type=int)
    p_all = sub.add_parser("run-all", help="run every bundled scenario")
    p_all.add_argument("--out", required=True)
    p_all.add_argument("--seed", type=int)
    sub.add_parser("list", help="list bundled metrics, pairs, maps, systems and scenarios")
    p_schema = sub.add_parser("schema", help="print the payload schema of a command")
    p_schema.add_argument("command", choices=sorted(SCHEMAS))
    args = parser.parse_args(argv)

    if args.cmd == "run":
        return run(args.scenario, args.out, args.seed)
    if args.cmd == "run-all":
        codes = run_all(args.out, args.seed)
        for name, code in codes.items():
            print(f"{name}: exit {code}")
        # a scenario exiting 2 is a finding, not a failure of the suite
        return EXIT_INPUT if EXIT_INPUT in codes.values() else EXIT_OK
    if args.cmd == "list":
        sys.stdout.write(list_builtins())
        return EXIT_OK
    print(json.dumps(SCHEMAS[args.command], indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
