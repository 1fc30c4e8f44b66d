"""Command-line front end.

Exit codes:
    0  success
    1  bad input: unreadable or schema-violating scenario, bad params file, bad arguments
    2  infeasible fingernail/cable geometry
    3  no grasp candidates
    4  preprocessing hit its iteration cap
    5  any other pipeline error
``batch`` records per-scenario pipeline errors in its report and exits
nonzero only when the harness itself fails (exit 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .batch import (
    BatchConfig,
    acceptance_suite,
    dumps_report,
    load_directory,
    markdown_table,
    result_record,
    run_batch,
    write_batch,
)
from .errors import CarobioError, InfeasibleGeometry, MaxIterationsExceeded, NoCandidates, ScenarioError
from .geometry import CableSection, FingernailProfile, force_stroke_curve, parallel_gripper_min_force, solve_contact, valid_stroke_domain
from .pipeline import PipelineConfig, plan_scenario, run_scenario, sim_params_from
from .scenarios import load_scenario

log = logging.getLogger("carobio")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_GEOMETRY = 2
EXIT_NO_CANDIDATES = 3
EXIT_MAX_ITERATIONS = 4
EXIT_PIPELINE = 5


class _Parser(argparse.ArgumentParser):
    # Usage errors share the bad-input code so 2 stays reserved for geometry.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ScenarioError):
        return EXIT_INPUT
    if isinstance(exc, InfeasibleGeometry):
        return EXIT_GEOMETRY
    if isinstance(exc, NoCandidates):
        return EXIT_NO_CANDIDATES
    if isinstance(exc, MaxIterationsExceeded):
        return EXIT_MAX_ITERATIONS
    return EXIT_PIPELINE


def _config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "params", None):
        try:
            overrides = json.loads(Path(args.params).read_text())
            if not isinstance(overrides, dict):
                raise ValueError("params file must hold a JSON object")
            config.sim = sim_params_from(overrides)
        except (OSError, ValueError, TypeError) as exc:
            raise ScenarioError(f"params file {args.params}: {exc}") from exc
    return config


def _scenario(args):
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------------


def cmd_grasp_model(args) -> int:
    outer = args.outer_radius if args.outer_radius is not None else 2.0 * args.inner_radius
    profile = FingernailProfile(args.inner_radius, outer, args.tip_height)
    cable = CableSection(args.cable_radius, args.linear_density)
    lo, hi = valid_stroke_domain(profile, cable)
    if args.stroke:
        strokes = args.stroke
    else:
        a, b, n = args.stroke_range if args.stroke_range else (lo, hi, args.points)
        n = int(n)
        if args.stroke_range:
            strokes = np.linspace(float(a), float(b), n)
        else:
            # Open interval: drop the two tangency endpoints.
            strokes = np.linspace(lo, hi, n + 2)[1:-1]
    curve = force_stroke_curve(profile, cable, args.lifted_length, strokes)
    mass = args.linear_density * args.lifted_length
    n_p = parallel_gripper_min_force(mass, args.friction)
    out = sys.stdout
    out.write("d,theta_deg,N_c,N_p,advantage\n")
    for d, _ in curve.points:
        sol = solve_contact(profile, cable, d, args.lifted_length)
        adv = int(np.sin(sol.contact_angle) > args.friction)
        out.write(f"{d:.9g},{np.degrees(sol.contact_angle):.9g},{sol.contact_force:.9g},{n_p:.9g},{adv}\n")
    for d in curve.rejected:
        log.warning("stroke %g outside the valid interval (%g, %g); skipped", d, lo, hi)
    return EXIT_OK


def cmd_plan(args) -> int:
    sc = _scenario(args)
    res = plan_scenario(sc, _config(args))
    out = _out_dir(args)
    _write_json(out / "plan.json", {
        "scenario": sc.id,
        "seed": int(sc.seed),
        "adjustments": [m.to_dict() for m in res.moves],
        "plan": res.plan.to_dict(),
    })
    res.trajectory.to_csv(out / "trajectory.csv")
    _write_json(out / "vote.json", res.vote.to_dict())
    print(f"{sc.id}: grasp node {res.vote.final}, {len(res.moves)} adjustments, "
          f"{len(res.plan.primitives)} primitives, {len(res.trajectory)} waypoints -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    res = run_scenario(sc, _config(args), dump_frames=args.dump_frames)
    out = _out_dir(args)
    record = result_record(sc, res)
    (out / "report.json").write_text(dumps_report(record))
    _write_json(out / "timings.json", res.timings)
    if args.dump_frames:
        frames = out / "frames"
        frames.mkdir(exist_ok=True)
        for k, x in enumerate(res.sim.frames):
            np.savetxt(frames / f"frame_{k:05d}.csv", x, delimiter=",", header="x,y,z", comments="", fmt="%.9f")
    print(f"{sc.id}: {' '.join(o.value for o in res.sim.outcomes)}")
    return EXIT_OK


def cmd_batch(args) -> int:
    if args.acceptance:
        scenarios = acceptance_suite()
    elif args.directory:
        scenarios = load_directory(args.directory)
    else:
        raise ScenarioError("give a scenario directory or --acceptance")
    if not scenarios:
        raise ScenarioError(f"no scenario files in {args.directory}")
    config = BatchConfig(pipeline=_config(args), seeds=args.seeds, workers=args.workers)
    try:
        report, timings = run_batch(scenarios, config)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    paths = write_batch(report, timings, args.out_dir)
    sys.stdout.write(markdown_table(report))
    print(f"report: {paths['report']}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carobio", description="Single-grasp cable routing planner and simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("grasp-model", help="force-stroke table for the fingernail grasp (CSV on stdout)")
    g.add_argument("--inner-radius", type=float, default=0.015, help="fingernail inner arc radius R_f (m)")
    g.add_argument("--outer-radius", type=float, default=None, help="outer arc radius (m), default 2 R_f")
    g.add_argument("--tip-height", type=float, default=0.02)
    g.add_argument("--cable-radius", type=float, default=0.002, help="cable radius (m)")
    g.add_argument("--linear-density", type=float, default=0.05, help="kg/m")
    g.add_argument("--lifted-length", type=float, default=0.3, help="lifted cable length (m)")
    g.add_argument("--friction", type=float, default=0.5, help="pad friction coefficient")
    g.add_argument("--stroke", type=float, action="append", help="single stroke d (m); repeatable")
    g.add_argument("--stroke-range", type=float, nargs=3, metavar=("LO", "HI", "N"))
    g.add_argument("--points", type=int, default=21, help="samples inside the valid interval")
    g.set_defaults(func=cmd_grasp_model)

    def common(q, seed=True):
        q.add_argument("--out-dir", default="out")
        q.add_argument("--params", help="JSON file of simulator overrides")
        if seed:
            q.add_argument("--seed", type=int, help="override the scenario seed")

    q = sub.add_parser("plan", help="plan a scenario: plan.json, trajectory.csv, vote.json")
    q.add_argument("scenario")
    common(q)
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("simulate", help="plan and simulate a scenario: report.json")
    q.add_argument("scenario")
    q.add_argument("--dump-frames", action="store_true", help="write per-step cable nodes as CSV")
    common(q)
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("batch", help="run every scenario in a directory, or the acceptance suite")
    q.add_argument("directory", nargs="?")
    q.add_argument("--acceptance", action="store_true", help="run the built-in 26-scenario suite")
    q.add_argument("--seeds", type=int, nargs="+", help="rerun each scenario with these seeds")
    q.add_argument("--workers", type=int, default=1)
    common(q, seed=False)
    q.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CAROBIO_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CarobioError as exc:
        code = exit_code(exc)
        print(f"carobio: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except ValueError as exc:
        # Invalid numeric arguments (e.g. a profile with outer <= inner radius).
        print(f"carobio: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
