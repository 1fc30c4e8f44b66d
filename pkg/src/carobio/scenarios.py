"""Scenario files (JSON) and seeded scenario generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ScenarioError
from .geometry import FingernailProfile
from .scene import (
    DEFAULT_NODE_COUNT,
    CableSpec,
    CableState,
    GripperSpec,
    Rigidity,
    Scene,
    Slot,
    SlotPose,
    SlotSpec,
    resample_polyline,
)

SCHEMA_VERSION = 1
_UNIT_SCALE = {"m": 1.0, "mm": 1e-3}

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "units", "cable", "slots"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "units": {"enum": list(_UNIT_SCALE)},
        "id": {"type": "string"},
        "category": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "table_z": {"type": "number"},
        "gripper": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "body_width": _POS,
                "fingernail_height": _POS,
                "outer_profile_radius": _POS,
                "stroke_range": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2},
                "profile": {
                    "type": "object",
                    "required": ["inner_radius", "outer_radius", "tip_height"],
                    "additionalProperties": False,
                    "properties": {"inner_radius": _POS, "outer_radius": _POS, "tip_height": _POS},
                },
            },
        },
        "cable": {
            "type": "object",
            "required": ["total_length", "diameter"],
            "additionalProperties": False,
            "properties": {
                "total_length": _POS,
                "diameter": _POS,
                "linear_density": _POS,  # kg/m, never scaled
                "rigidity": {"enum": [r.value for r in Rigidity]},
                "fixed_end": _VEC3,
                "nodes": {"type": "array", "items": _VEC3, "minItems": 3},
                "polyline": {"type": "array", "items": _VEC3, "minItems": 2},
                "node_count": {"type": "integer", "minimum": 3},
            },
            "oneOf": [{"required": ["nodes"]}, {"required": ["polyline"]}],
        },
        "slots": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["width", "height", "max_radius", "center", "axis"],
                "additionalProperties": False,
                "properties": {
                    "width": _POS,
                    "height": _POS,
                    "max_radius": _POS,
                    "center": _VEC3,
                    "axis": _VEC3,
                },
            },
        },
        "sim_params": {"type": "object"},
        "perception": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "noise_sigma": {"type": "number", "minimum": 0},
                "pitch": _POS,
            },
        },
    },
}


@dataclass
class Scenario:
    scene: Scene
    id: str = "scenario"
    category: str = ""
    seed: int = 0
    sim_params: dict = field(default_factory=dict)
    perception: dict = field(default_factory=dict)


def _scale(v, s):
    return [float(x) * s for x in v]


def scenario_from_dict(data: dict) -> Scenario:
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    s = _UNIT_SCALE[data["units"]]
    g = data.get("gripper", {})
    default = GripperSpec()
    prof = g.get("profile")
    try:
        gripper = GripperSpec(
            body_width=g.get("body_width", default.body_width / s) * s,
            fingernail_height=g.get("fingernail_height", default.fingernail_height / s) * s,
            outer_profile_radius=g.get("outer_profile_radius", default.outer_profile_radius / s) * s,
            stroke_range=tuple(_scale(g["stroke_range"], s)) if "stroke_range" in g else default.stroke_range,
            profile=FingernailProfile(**{k: v * s for k, v in prof.items()}) if prof else default.profile,
        )
        c = data["cable"]
        cable = CableSpec(
            total_length=c["total_length"] * s,
            diameter=c["diameter"] * s,
            linear_density=c.get("linear_density", 0.05),
            rigidity=c.get("rigidity", "medium"),
        )
        fixed = np.array(_scale(c["fixed_end"], s)) if "fixed_end" in c else None
        if "nodes" in c:
            nodes = np.array([_scale(p, s) for p in c["nodes"]])
            state = CableState(nodes=nodes, fixed_end=nodes[0] if fixed is None else fixed)
        else:
            pts = np.array([_scale(p, s) for p in c["polyline"]])
            state = resample_polyline(pts, c.get("node_count", DEFAULT_NODE_COUNT), fixed)
        slots = tuple(
            Slot(
                SlotSpec(width=d["width"] * s, height=d["height"] * s, max_radius=d["max_radius"] * s),
                SlotPose(center=np.array(_scale(d["center"], s)), axis=np.array(d["axis"], dtype=float)),
            )
            for d in data["slots"]
        )
        scene = Scene(slots=slots, cable=cable, state=state, gripper=gripper, table_z=data.get("table_z", 0.0) * s)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc
    return Scenario(
        scene=scene,
        id=data.get("id", "scenario"),
        category=data.get("category", ""),
        seed=data.get("seed", 0),
        sim_params=dict(data.get("sim_params", {})),
        perception=dict(data.get("perception", {})),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    """Always written in metres so that a load/save/load cycle is exact."""
    scene = sc.scene
    g = scene.gripper
    out = {
        "schema_version": SCHEMA_VERSION,
        "units": "m",
        "id": sc.id,
        "category": sc.category,
        "seed": int(sc.seed),
        "table_z": float(scene.table_z),
        "gripper": {
            "body_width": g.body_width,
            "fingernail_height": g.fingernail_height,
            "outer_profile_radius": g.outer_profile_radius,
            "stroke_range": [float(v) for v in g.stroke_range],
            "profile": {
                "inner_radius": g.profile.inner_radius,
                "outer_radius": g.profile.outer_radius,
                "tip_height": g.profile.tip_height,
            },
        },
        "cable": {
            "total_length": scene.cable.total_length,
            "diameter": scene.cable.diameter,
            "linear_density": scene.cable.linear_density,
            "rigidity": scene.cable.rigidity.value,
            "fixed_end": [float(v) for v in scene.state.fixed_end],
            "nodes": [[float(v) for v in p] for p in scene.state.nodes],
        },
        "slots": [
            {
                "width": sl.spec.width,
                "height": sl.spec.height,
                "max_radius": sl.spec.max_radius,
                "center": [float(v) for v in sl.center],
                "axis": [float(v) for v in sl.axis],
            }
            for sl in scene.slots
        ],
    }
    if sc.sim_params:
        out["sim_params"] = sc.sim_params
    if sc.perception:
        out["perception"] = sc.perception
    return out


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(data)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=1, sort_keys=True) + "\n")


# -- generators --------------------------------------------------------------------

DESK_SLOT = SlotSpec(width=0.04, height=0.05, max_radius=0.0215)


def _heading(a: float) -> np.ndarray:
    return np.array([math.cos(a), math.sin(a), 0.0])


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


@dataclass
class LayoutConfig:
    first_distance: tuple[float, float] = (0.20, 0.26)
    spacing: tuple[float, float] = (0.20, 0.26)
    max_turn: float = math.radians(50.0)
    axis_noise: float = math.radians(5.0)
    max_axis_change: float = math.radians(60.0)
    lateral_offset: tuple[float, float] = (0.06, 0.12)
    tail: float = 0.25
    node_count: int = DEFAULT_NODE_COUNT


def random_scenario(
    seed: int,
    n_slots: int = 2,
    rigidity=Rigidity.MEDIUM,
    diameter: float = 0.004,
    layout: LayoutConfig | None = None,
    forced_axis_change: float | None = None,
    scenario_id: str | None = None,
    category: str = "",
) -> Scenario:
    """Slots strung along a gently turning route; the cable lies beside the
    route, shifted sideways by a random offset.

    With ``forced_axis_change`` the last slot keeps the route heading for its
    position but its axis is turned by that angle relative to the previous one.
    """
    lay = LayoutConfig() if layout is None else layout
    rng = np.random.default_rng(seed)
    z_c = diameter / 2
    fixed = np.array([0.0, 0.0, z_c])
    h = rng.uniform(-math.pi, math.pi)
    centers, headings = [], []
    p = fixed[:2].copy()
    for j in range(n_slots):
        if j > 0:
            h += rng.uniform(-lay.max_turn, lay.max_turn)
        dist = rng.uniform(*(lay.first_distance if j == 0 else lay.spacing))
        p = p + dist * _heading(h)[:2]
        centers.append(p.copy())
        headings.append(h)
    axes = []
    for j in range(n_slots):
        a = headings[j] + rng.uniform(-lay.axis_noise, lay.axis_noise)
        if j > 0:
            change = _wrap(a - axes[-1])
            limit = lay.max_axis_change
            a = axes[-1] + max(-limit, min(limit, change))
        axes.append(a)
    if forced_axis_change is not None and n_slots > 1:
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        axes[-1] = axes[-2] + side * forced_axis_change
    slots = tuple(
        Slot(DESK_SLOT, SlotPose(center=np.array([c[0], c[1], DESK_SLOT.height / 2]), axis=_heading(a)))
        for c, a in zip(centers, axes)
    )

    # Cable: leave the fixed end at an angle, run alongside the route, then a straight tail.
    side = 1.0 if rng.uniform() < 0.5 else -1.0
    offset = rng.uniform(*lay.lateral_offset)
    route = [fixed[:2]] + centers
    pts = [fixed[:2]]
    for j in range(len(route) - 1):
        d = route[j + 1] - route[j]
        n = np.array([-d[1], d[0]]) / np.linalg.norm(d)
        pts.append(route[j + 1] + side * offset * n)
    last = pts[-1] - pts[-2]
    pts.append(pts[-1] + lay.tail * last / np.linalg.norm(last))
    poly = np.column_stack([np.array(pts), np.full(len(pts), z_c)])
    state = resample_polyline(poly, lay.node_count, fixed)
    # Chord sampling cuts corners slightly; the nominal length is the chain length.
    cable = CableSpec(total_length=float(state.arclength()), diameter=diameter, rigidity=rigidity)
    scene = Scene(slots=slots, cable=cable, state=state)
    return Scenario(
        scene=scene,
        id=scenario_id or f"s{seed:04d}",
        category=category,
        seed=seed,
    )
