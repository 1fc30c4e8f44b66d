"""End-to-end run: perceive, preprocess, select, plan, simulate."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

from .grasp_select import VoteResult, select_grasp
from .motion_plan import Plan, PlanConfig, Trajectory, compile_plan, discretize
from .perception import perceive
from .preprocess import AdjustmentMove, preprocess_cable
from .scenarios import Scenario
from .scene import CableState, Rigidity, Scene
from .simulator import SimParams, SimResult, execute

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    perceive: bool = True
    noise_sigma: float = 0.0
    pitch: float = 0.001
    plan: PlanConfig = field(default_factory=PlanConfig)
    sim: SimParams = field(default_factory=SimParams)


@dataclass
class PipelineResult:
    planning_scene: Scene
    preprocessed: CableState
    moves: list[AdjustmentMove]
    vote: VoteResult
    plan: Plan
    trajectory: Trajectory
    sim: SimResult | None = None
    timings: dict = field(default_factory=dict)


def sim_params_from(overrides: dict, base: SimParams | None = None) -> SimParams:
    """Overrides use degrees for the two thresholds and rigidity names for the stiffness table."""
    base = SimParams() if base is None else base
    kw = {k: getattr(base, k) for k in base.__dataclass_fields__}
    for k, v in (overrides or {}).items():
        if k in ("fold_angle_threshold_deg", "misalign_threshold_deg"):
            kw[k[:-4]] = math.radians(float(v))
        elif k == "bend_stiffness":
            table = dict(kw["bend_stiffness"])
            table.update({Rigidity(r): float(s) for r, s in v.items()})
            kw[k] = table
        elif k in kw:
            kw[k] = v
        else:
            raise ValueError(f"unknown simulator parameter {k!r}")
    return SimParams(**kw)


def planning_scene(scenario: Scenario, config: PipelineConfig) -> Scene:
    scene = scenario.scene
    opts = scenario.perception
    if not opts.get("enabled", config.perceive):
        return scene
    seen = perceive(
        scene,
        noise_sigma=opts.get("noise_sigma", config.noise_sigma),
        seed=scenario.seed,
        pitch=opts.get("pitch", config.pitch),
    )
    return seen.apply_to(scene)


def plan_scenario(scenario: Scenario, config: PipelineConfig | None = None) -> PipelineResult:
    config = PipelineConfig() if config is None else config
    tick = time.perf_counter()
    scene = planning_scene(scenario, config)
    t_perceive = time.perf_counter() - tick
    state, moves = preprocess_cable(scene)
    vote = select_grasp(scene, state)
    plan = compile_plan(scene, vote, moves, config.plan)
    traj = discretize(plan)
    log.info("%s: %d adjustments, grasp node %d, %d waypoints", scenario.id, len(moves), vote.final, len(traj))
    return PipelineResult(
        planning_scene=scene,
        preprocessed=state,
        moves=moves,
        vote=vote,
        plan=plan,
        trajectory=traj,
        timings={"perceive": t_perceive, "plan": time.perf_counter() - tick - t_perceive},
    )


def run_scenario(scenario: Scenario, config: PipelineConfig | None = None, dump_frames: bool = False) -> PipelineResult:
    config = PipelineConfig() if config is None else config
    result = plan_scenario(scenario, config)
    params = sim_params_from(scenario.sim_params, config.sim)
    tick = time.perf_counter()
    result.sim = execute(result.trajectory, scenario.scene, params, seed=scenario.seed, dump_frames=dump_frames)
    result.timings["simulate"] = time.perf_counter() - tick
    return result
