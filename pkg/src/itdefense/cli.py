"""Command-line entry point: ``itdefense simulate | check-intercept | validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import engine
from .geometry import GeometryError, solve_intercept
from .io import events_jsonl, summary_json, trajectories_csv
from .render import render_svg
from .scenario import ScenarioError, load_scenario_file, validate, with_engagement

EXIT_OK = 0
EXIT_CONFIG = 2


def _fail(msg: str) -> int:
    print(f"itdefense: error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def _load(path: str):
    """Return (cfg, None) or (None, exit code) after printing the problem."""
    try:
        return load_scenario_file(path), None
    except FileNotFoundError:
        return None, _fail(f"scenario file not found: {path}")
    except IsADirectoryError:
        return None, _fail(f"scenario path is a directory: {path}")
    except ScenarioError as exc:
        if exc.violations:
            for v in exc.violations:
                print(f"{v.code}\t{v.path}\t{v.message}", file=sys.stderr)
            return None, _fail(f"invalid scenario ({len(exc.violations)} violations)")
        return None, _fail(str(exc))


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg, code = _load(args.scenario)
    if cfg is None:
        return code
    changes = {}
    if args.master_step is not None:
        changes["master_step"] = args.master_step
    if args.max_time is not None:
        changes["max_time"] = args.max_time
    if args.toggle_ballistic_depletion:
        changes["ballistic_depletion"] = not cfg.engagement.ballistic_depletion
    if changes:
        cfg = with_engagement(cfg, **changes)
        rep = validate(cfg)
        if rep:
            for v in rep.violations:
                print(f"{v.code}\t{v.path}\t{v.message}", file=sys.stderr)
            return _fail(f"invalid scenario after overrides ({len(rep.violations)} violations)")

    result = engine.run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectories.csv").write_text(trajectories_csv(result.trajectory), encoding="utf-8")
    (out / "events.jsonl").write_text(events_jsonl(result.events), encoding="utf-8")
    (out / "summary.json").write_text(summary_json(result, cfg), encoding="utf-8")
    if not args.no_svg:
        (out / "plot.svg").write_text(render_svg(result, cfg), encoding="utf-8")
    o = result.outcome
    print(f"outcome: it={o.it} ei={o.ei} hva={o.hva} by={o.decided_by} t={o.time:.4f}")
    return EXIT_OK


def cmd_check_intercept(args: argparse.Namespace) -> int:
    try:
        sol = solve_intercept((args.it_x, args.it_y), (args.ei_x, args.ei_y),
                              args.theta_atk, args.v_atk, args.v_itc)
    except GeometryError as exc:
        return _fail(str(exc))
    if sol.feasible:
        rec = {"status": "feasible", "reason": None, "gamma": sol.gamma,
               "theta_itc": sol.heading, "t_itc": sol.time_to_intercept}
    else:
        rec = {"status": "infeasible", "reason": sol.reason, "gamma": sol.gamma,
               "theta_itc": None, "t_itc": None}
    print(json.dumps(rec))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cfg, code = _load(args.scenario)
    if cfg is None:
        return code
    print(f"ok: {cfg.n} interceptors, {len(cfg.static_defenses)} static defenses")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itdefense", description="Inbound threat vs expendable interceptor simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write logs")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--master-step", type=float)
    s.add_argument("--max-time", type=float)
    s.add_argument("--toggle-ballistic-depletion", action="store_true",
                   help="flip the scenario's ballistic_depletion setting")
    s.add_argument("--no-svg", action="store_true")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check-intercept", help="terminal intercept heading for straight-line motion")
    for name in ("--it-x", "--it-y", "--ei-x", "--ei-y", "--theta-atk", "--v-atk", "--v-itc"):
        c.add_argument(name, type=float, required=True)
    c.set_defaults(func=cmd_check_intercept)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
