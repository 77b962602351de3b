"""Command-line entry point: ``gne-esc {simulate,reproduce,oracle,check,sweep}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..game_model import EvaluationError
from ..integrator import DivergenceError, InitialStateError, StepSizeError
from .config import ConfigError, PRESETS, load_config, preset, read_document, resolve, set_path
from .export import export, summary_document
from .runner import condition_report, reference_solution, run_experiment

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_DIVERGED = 3

OUT_ENV = "GNE_ESC_OUT"


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _out_dir(cfg, override) -> Path:
    if override:
        return Path(override)
    if cfg.document["outputs"].get("dir"):
        return Path(cfg.document["outputs"]["dir"])
    return default_out_root() / cfg.name


def _load_doc(source: str) -> dict:
    if source in PRESETS and not Path(source).exists():
        return {"preset": source}
    return read_document(source)


def _print_final(result) -> None:
    s = summary_document(result)
    f = s["final"]
    print(f"t_end            {s['t_end']:.6g}")
    print("final xhat       " + ", ".join(f"{v:.6f}" for v in s["final_xhat"]))
    print("oracle x*        " + ", ".join(f"{v:.6f}" for v in s["oracle"]["x_star"]))
    print(f"inf-distance     {s['final_inf_dist']:.6g}")
    print(f"sum violation    {f['constraint_violation']:.6g}")
    print(f"mu spread        {f['mu_spread']:.6g}")
    print(f"max amplitude    {f['max_amp']:.6g}")
    print(f"max |sum z|      {s['max_abs_z_sum']:.3g}")


def _simulate(cfg, out) -> Path:
    result = run_experiment(cfg)
    out_dir = _out_dir(cfg, out)
    export(result, out_dir, cfg.document["outputs"]["formats"])
    _print_final(result)
    print(f"wrote {out_dir}")
    return out_dir


def cmd_simulate(args) -> int:
    _simulate(load_config(args.config), args.out)
    return EXIT_OK


def _parse_stubborn(items) -> dict:
    out = {}
    for item in items or []:
        key, _, value = item.partition("=")
        if not value:
            raise ConfigError("stubborn-index", f"expected PLAYER=VALUE, got {item!r}")
        out[str(int(key))] = float(value)
    return out


def cmd_reproduce(args) -> int:
    base = preset("cournot4")
    root = Path(args.out) if args.out else default_out_root() / "reproduce-cournot"
    overrides = {}
    if args.t_end is not None:
        overrides["integrator"] = {"t_end": args.t_end}
    if args.stubborn:
        doc = dict(base, name="cournot4-stubborn", stubborn=_parse_stubborn(args.stubborn), **overrides)
        cfg = resolve(doc)
        _simulate(cfg, root / "stubborn")
        return EXIT_OK
    adaptive = resolve(dict(base, **overrides))
    _simulate(adaptive, root / "adaptive")
    fixed_doc = set_path(dict(base, name="cournot4-fixed-amplitude", **overrides),
                         "params.amplitude_dynamics", False)
    _simulate(resolve(fixed_doc), root / "fixed-amplitude")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    sol = reference_solution(cfg)
    kind = "best response" if cfg.stubborn else "GNE"
    print(f"{kind} x* = (" + ", ".join(f"{v:.6f}" for v in sol.x_star) + ")")
    print(f"mu_bar = {sol.mu_bar:.6f}")
    print(f"kkt residual = {sol.kkt_residual:.3g}")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = condition_report(cfg)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True, default=float))
    return EXIT_VIOLATION if report.freq_violations else EXIT_OK


def _sweep_one(job):
    doc, out_dir = job
    cfg = resolve(doc)
    result = run_experiment(cfg)
    export(result, out_dir, cfg.document["outputs"]["formats"])
    return str(out_dir)


def cmd_sweep(args) -> int:
    doc = _load_doc(args.config)
    root = Path(args.out) if args.out else default_out_root() / f"sweep-{args.param}"
    jobs = []
    for raw in args.values:
        value = json.loads(raw)
        run_doc = set_path(doc, args.param, value)
        run_doc["name"] = f"{args.param}={raw}"
        resolve(run_doc)  # fail fast before fanning out
        jobs.append((run_doc, root / f"{args.param}={raw}"))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            done = list(pool.map(_sweep_one, jobs))
    else:
        done = [_sweep_one(j) for j in jobs]
    rows = []
    for raw, path in zip(args.values, done):
        s = json.loads((Path(path) / "summary.json").read_text())
        rows.append({"value": json.loads(raw), "final_inf_dist": s["final_inf_dist"],
                     "constraint_violation": s["final"]["constraint_violation"],
                     "max_amp": s["final"]["max_amp"], "dir": path})
    (root / "sweep.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"{args.param}={r['value']}: inf-dist {r['final_inf_dist']:.4g}, "
              f"violation {r['constraint_violation']:.4g}, max amp {r['max_amp']:.3g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gne-esc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configuration and export its files")
    p.add_argument("config", help="JSON configuration path or preset name")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="preset runs of the Cournot study")
    p.add_argument("experiment", choices=["cournot"])
    p.add_argument("--stubborn", action="append", metavar="PLAYER=VALUE",
                   help="hold a player (1-based) at a fixed strategy")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("oracle", help="print the KKT solution or stubborn best response")
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="print the condition report; nonzero exit on frequency violations")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="independent runs over one parameter")
    p.add_argument("--param", required=True, help="dotted path; bare names refer to params")
    p.add_argument("--values", required=True, nargs="+", help="JSON values")
    p.add_argument("--config", default="cournot4")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StepSizeError, InitialStateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DivergenceError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def cli(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
