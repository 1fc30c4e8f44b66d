"""Seeded batch runs and the cable-category success table."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CarobioError
from .pipeline import PipelineConfig, PipelineResult, run_scenario
from .scenarios import Scenario, load_scenario, random_scenario
from .scene import Rigidity
from .simulator import Outcome

log = logging.getLogger(__name__)

REPORT_VERSION = 1
HARNESS_LABEL = (
    "Self-consistency harness on simulated desk-scale scenes with a quasi-static "
    "cable model; not a hardware reproduction."
)


@dataclass
class BatchConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    seeds: list[int] | None = None  # rerun every scenario once per seed
    workers: int = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return round(v, 9) if math.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def failure_reason(outcomes: list[Outcome]) -> str | None:
    """'A' or 'B' from the first slot that did not pass, None on success.

    A slot left unreached with no earlier failure never lined up with the
    cable, so it counts as misalignment."""
    for o in outcomes:
        if o is Outcome.PASSED:
            continue
        return "A" if o is Outcome.FOLDED else "B"
    return None


def _axis_changes_deg(scenario: Scenario) -> list[float]:
    axes = [s.axis[:2] / np.linalg.norm(s.axis[:2]) for s in scenario.scene.slots]
    out = []
    for a, b in zip(axes, axes[1:]):
        out.append(math.degrees(math.acos(float(np.clip(a @ b, -1.0, 1.0)))))
    return out


def _header(scenario: Scenario) -> dict:
    cable = scenario.scene.cable
    return {
        "id": scenario.id,
        "category": scenario.category,
        "seed": int(scenario.seed),
        "diameter_mm": round(cable.diameter * 1e3, 3),
        "rigidity": cable.rigidity.value,
        "n_slots": len(scenario.scene.slots),
        "axis_changes_deg": [round(a, 3) for a in _axis_changes_deg(scenario)],
    }


def result_record(scenario: Scenario, res: PipelineResult) -> dict:
    """Per-scenario report entry: vote summary, plan stats and SimResult."""
    rec = _header(scenario)
    rec["vote"] = {
        "final": res.vote.final,
        "tie_break_used": res.vote.tie_break_used,
        "candidates": len(res.vote.candidates),
        "top_frequency": max(res.vote.frequency.values()),
    }
    plan = res.plan
    rec["plan"] = {
        "adjustments": len(res.moves),
        "primitives": {k: plan.count(k) for k in ("adjust", "grasp", "offset", "guide", "set_mode", "insert", "release")},
        "waypoints": len(res.trajectory),
        "duration_s": float(res.trajectory.t[-1]),
    }
    if res.sim is not None:
        rec["sim"] = res.sim.to_dict()
        rec["success"] = res.sim.all_passed
        rec["failure_reason"] = failure_reason(res.sim.outcomes)
    return _jsonable(rec)


def scenario_record(scenario: Scenario, config: PipelineConfig | None = None) -> tuple[dict, float]:
    """Run one scenario; pipeline errors are recorded, not raised."""
    tick = time.perf_counter()
    try:
        res = run_scenario(scenario, config)
    except CarobioError as exc:
        rec = _header(scenario)
        rec.update(error=type(exc).__name__, message=str(exc), success=False, failure_reason=None)
        return _jsonable(rec), time.perf_counter() - tick
    return result_record(scenario, res), time.perf_counter() - tick


def _run_one(args):
    scenario, config = args
    return scenario_record(scenario, config)


def expand_seeds(scenarios: list[Scenario], seeds: list[int] | None) -> list[Scenario]:
    if not seeds:
        return list(scenarios)
    return [replace(sc, seed=int(s), id=f"{sc.id}@{s}") for sc in scenarios for s in seeds]


def aggregate(records: list[dict]) -> list[dict]:
    """Rows keyed by (category, diameter, rigidity); errored runs are kept
    out of the success denominator and counted separately."""
    rows: dict[tuple, dict] = {}
    for r in records:
        key = (r["category"], r["diameter_mm"], r["rigidity"])
        row = rows.setdefault(key, {
            "category": key[0], "diameter_mm": key[1], "rigidity": key[2],
            "runs": 0, "success": 0, "failure_A": 0, "failure_B": 0, "errors": 0,
        })
        if "error" in r:
            row["errors"] += 1
            continue
        row["runs"] += 1
        if r["success"]:
            row["success"] += 1
        else:
            row["failure_" + r["failure_reason"]] += 1
    order = {r.value: i for i, r in enumerate(Rigidity)}
    return [rows[k] for k in sorted(rows, key=lambda k: (k[0], k[1], order.get(k[2], 9)))]


def run_batch(scenarios: list[Scenario], config: BatchConfig | None = None) -> tuple[dict, dict]:
    """Returns (report, timings).  The report is independent of worker count
    and wall time, so equal seeds give byte-identical reports."""
    config = BatchConfig() if config is None else config
    todo = expand_seeds(scenarios, config.seeds)
    ids = [sc.id for sc in todo]
    if len(set(ids)) != len(ids):
        raise ValueError("scenario ids must be unique within a batch")
    tick = time.perf_counter()
    jobs = [(sc, config.pipeline) for sc in todo]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    total = time.perf_counter() - tick
    records = sorted((r for r, _ in results), key=lambda r: r["id"])
    rows = aggregate(records)
    done = [r for r in records if "error" not in r]
    report = {
        "report_version": REPORT_VERSION,
        "label": HARNESS_LABEL,
        "scenarios": records,
        "aggregate": rows,
        "totals": {
            "runs": len(done),
            "success": sum(r["success"] for r in done),
            "failure_A": sum(r["failure_reason"] == "A" for r in done),
            "failure_B": sum(r["failure_reason"] == "B" for r in done),
            "errors": len(records) - len(done),
        },
    }
    timings = {
        "total_s": total,
        "workers": config.workers,
        "scenarios": {r["id"]: w for r, w in sorted(results, key=lambda rw: rw[0]["id"])},
    }
    return report, timings


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def markdown_table(report: dict) -> str:
    lines = [
        f"_{report['label']}_",
        "",
        "| Category | Dia./mm | Rigidity | Success rate | Failure reason |",
        "|---|---|---|---|---|",
    ]
    for row in report["aggregate"]:
        reason = f"A:{row['failure_A']} B:{row['failure_B']}"
        if row["errors"]:
            reason += f" errors:{row['errors']}"
        dia = f"{row['diameter_mm']:g}"
        lines.append(f"| {row['category']} | {dia} | {row['rigidity']} | {row['success']}/{row['runs']} | {reason} |")
    t = report["totals"]
    lines += ["", f"Total: {t['success']}/{t['runs']} (A:{t['failure_A']} B:{t['failure_B']}, errors:{t['errors']})"]
    return "\n".join(lines) + "\n"


def write_batch(report: dict, timings: dict, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "table": out / "table.md", "timings": out / "timings.json"}
    paths["report"].write_text(dumps_report(report))
    paths["table"].write_text(markdown_table(report))
    paths["timings"].write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n")
    return paths


def load_directory(directory) -> list[Scenario]:
    files = sorted(Path(directory).glob("*.json"))
    return [load_scenario(p) for p in files]


# -- the table analogue suite ------------------------------------------------------

# (category, diameter in metres, rigidity) for the medium and high rows.
STIFF_ROWS = [
    ("usb-cable", 0.004, Rigidity.MEDIUM),
    ("usb-cable", 0.006, Rigidity.MEDIUM),
    ("pvc-hose", 0.014, Rigidity.MEDIUM),
    ("pvc-hose", 0.020, Rigidity.HIGH),
    ("nylon-rope", 0.014, Rigidity.MEDIUM),
    ("nylon-rope", 0.020, Rigidity.HIGH),
    ("nylon-rope", 0.024, Rigidity.HIGH),
]
SOFT_ROWS = [("nylon-rope", 0.004, Rigidity.LOW), ("nylon-rope", 0.008, Rigidity.LOW)]
LARGE_AXIS_CHANGE = math.radians(80.0)


def _named(seed, rigidity, dia, category, n_slots, tag, forced=None) -> Scenario:
    sid = f"{tag}-{category}-{dia * 1e3:02.0f}mm-{rigidity.value}-s{seed}"
    return random_scenario(seed, n_slots=n_slots, rigidity=rigidity, diameter=dia,
                           forced_axis_change=forced, scenario_id=sid, category=category)


def acceptance_suite(base_seed: int = 1000) -> list[Scenario]:
    """20 medium/high scenarios spread over the stiff rows (K alternating 2
    and 3), 5 low-rigidity ones and one with an 80 degree axis change."""
    out = []
    for k in range(20):
        cat, dia, rig = STIFF_ROWS[k % len(STIFF_ROWS)]
        out.append(_named(base_seed + k, rig, dia, cat, 2 + k % 2, "stiff"))
    for k in range(5):
        cat, dia, rig = SOFT_ROWS[k % len(SOFT_ROWS)]
        out.append(_named(base_seed + 100 + k, rig, dia, cat, 2 + k % 2, "soft"))
    out.append(_named(base_seed + 200, Rigidity.MEDIUM, 0.004, "large-axis-change", 3, "turn",
                      forced=LARGE_AXIS_CHANGE))
    return out
