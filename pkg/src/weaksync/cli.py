"""Command line entry point.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 bad config or input,
3 runtime error (divergence, structural failure, I/O).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import ConfigError, GraphValidationError, WeakSyncError
from .experiment import analyze_graph, load_config, run_experiment, with_overrides
from .generate import StructuredGraphSpec, dump_graph_json, generate_structured
from .graph import load_graph
from .simulate import trajectory_to_csv, trajectory_to_dict

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_OUT = "weaksync-out"
DEMOS = {"fault": "fault-scenario.json", "fault-dt": "fault-scenario-dt.json", "hub": "hub.json"}

log = logging.getLogger("weaksync")


def default_out_dir() -> Path:
    return Path(os.environ.get("WEAKSYNC_OUT", DEFAULT_OUT))


def bundled_config(name) -> Path:
    return Path(str(resources.files("weaksync") / "data" / name))


def _out_dir(args, run_name) -> Path:
    base = Path(args.out_dir) if args.out_dir else default_out_dir()
    return base / run_name


def _emit(text, path=None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    report = analyze_graph(load_graph(args.graph))
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["node"] + [f"beta[{i + 1}]" for i in range(report["k"])])
        for node, row in report["beta"].items():
            writer.writerow([node] + [f"{v:.17g}" for v in row])
        _emit(buf.getvalue(), args.output)
    else:
        _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_generate(args) -> int:
    data = json.loads(Path(args.spec).read_text())
    seed = args.seed if args.seed is not None else data.get("seed")
    if seed is None:
        raise ConfigError("seed", "pass --seed or put 'seed' in the spec")
    try:
        spec = StructuredGraphSpec.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("spec", str(exc)) from exc
    _emit(dump_graph_json(generate_structured(spec, seed)), args.output)
    return EXIT_OK


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = load_config(args.config, overrides)
    return with_overrides(cfg, epsilon=getattr(args, "epsilon", None), horizon=args.horizon, step=args.step)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    cfg.outputs = ()
    result = run_experiment(cfg)
    out = _out_dir(args, cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        path = out / "trajectory.json"
        path.write_text(json.dumps(trajectory_to_dict(result.trajectory)))
    else:
        path = out / "trajectory.csv"
        path.write_text(trajectory_to_csv(result.trajectory))
    print(path)
    return EXIT_OK


def _verify(cfg, args) -> int:
    if args.format == "csv" and "csv" not in cfg.outputs:
        cfg.outputs = tuple(cfg.outputs) + ("csv",)
    if "report" not in cfg.outputs:
        cfg.outputs = tuple(cfg.outputs) + ("report",)
    result = run_experiment(cfg, _out_dir(args, cfg.name))
    sys.stdout.write(json.dumps(result.report["sync"] | {"requested_verdicts": result.report["requested_verdicts"]}, indent=2) + "\n")
    for f in result.files:
        log.info("wrote %s", f)
    return result.exit_code


def cmd_verify(args) -> int:
    return _verify(_load(args), args)


def cmd_demo(args) -> int:
    args.config = bundled_config(DEMOS[args.scenario])
    cfg = _load(args)
    cfg.outputs = tuple(dict.fromkeys(tuple(cfg.outputs) + ("report", "plots")))
    return _verify(cfg, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaksync", description="Weak synchronization of multi-agent networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p, epsilon=True):
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", help="base output directory (default: $WEAKSYNC_OUT or ./weaksync-out)")
        p.add_argument("--horizon", type=float, help="final time (CT) or step count (DT)")
        p.add_argument("--step", type=float, help="RK4 step size")
        if epsilon:
            p.add_argument("--epsilon", type=float, help="tail tolerance for every verdict")

    p = sub.add_parser("analyze", help="bicomponents, beta coefficients and kernel of a graph")
    p.add_argument("graph")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="random graph with prescribed bicomponent sizes")
    p.add_argument("spec")
    p.add_argument("-o", "--output")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate a config and export the trajectory")
    p.add_argument("config")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_flags(p, epsilon=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="simulate and check synchronization verdicts")
    p.add_argument("config")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    run_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="run a bundled scenario")
    p.add_argument("scenario", choices=sorted(DEMOS))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    run_flags(p)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphValidationError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WeakSyncError, OSError, ValueError) as exc:
        print(f"error ({type(exc).__module__}.{type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
