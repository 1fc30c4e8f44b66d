"""Single-grasp routing plan built from four motion primitives.

Plan layout::

    Adjust*  Grasp(SGM)  [SetMode(SGM) Offset Guide_j SetMode(TGM) Insert_j] for each slot  Release

Offsets before each Guide bridge the previous end pose to the Guide start;
for the first slot that bridge is the lift from the grasp pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateArc
from .geometry import GraspMode, select_mode
from .grasp_select import VoteResult
from .preprocess import AdjustmentMove, apply_adjustment
from .scene import Scene, Slot, grasp_direction

E_Z = np.array([0.0, 0.0, 1.0])


@dataclass
class PlanConfig:
    tolerance: float = 0.005  # redundancy margin added to both offsets
    insert_rate: float = 0.010
    guide_speed: float = 0.050
    transit_speed: float = 0.100
    dt: float = 0.020
    sgm_clearance: float = 0.002
    tgm_ratio: float = 0.8
    insertion_depth: float | None = None  # defaults to the cable diameter
    mode_switch_time: float = 0.2


# -- primitives ----------------------------------------------------------------


@dataclass(eq=False)
class Adjust:
    move: AdjustmentMove
    anchor_position: np.ndarray
    kind: str = field(default="adjust", init=False)


@dataclass(eq=False)
class Grasp:
    node: int
    mode: GraspMode
    position: np.ndarray
    yaw: float
    kind: str = field(default="grasp", init=False)


@dataclass(eq=False)
class Offset:
    start: np.ndarray
    vector: np.ndarray
    slot: int
    kind: str = field(default="offset", init=False)

    @property
    def end(self) -> np.ndarray:
        return self.start + self.vector


@dataclass(eq=False)
class Guide:
    slot: int
    start: np.ndarray
    end: np.ndarray
    yaw_start: float
    yaw_end: float
    axis: np.ndarray
    kind: str = field(default="guide", init=False)


@dataclass(eq=False)
class Insert:
    slot: int
    center: np.ndarray
    start: np.ndarray
    end: np.ndarray
    rate: float
    sweep: float
    yaw: float
    kind: str = field(default="insert", init=False)

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.start - self.center))

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    def _frame(self):
        u = (self.start - self.center) / self.radius
        w = E_Z - (E_Z @ u) * u
        n = np.linalg.norm(w)
        if n < 1e-12:
            raise DegenerateArc("arc start is vertically above its centre")
        return u, w / n

    def point(self, phi):
        u, w = self._frame()
        phi = np.asarray(phi, dtype=float)[..., None]
        return self.center + self.radius * (np.cos(phi) * u - np.sin(phi) * w)


@dataclass(eq=False)
class SetMode:
    mode: GraspMode
    stroke: float
    kind: str = field(default="set_mode", init=False)


@dataclass(eq=False)
class Release:
    stroke: float
    kind: str = field(default="release", init=False)


Primitive = Adjust | Grasp | Offset | Guide | Insert | SetMode | Release


@dataclass(eq=False)
class Plan:
    primitives: list
    slot_primitives: dict[int, list[int]]
    axes: list[np.ndarray]
    grasp_node: int
    strokes: dict[str, float]
    config: PlanConfig
    vote: VoteResult | None = None

    def count(self, kind: str) -> int:
        return sum(1 for p in self.primitives if p.kind == kind)

    def to_dict(self) -> dict:
        return {
            "grasp_node": self.grasp_node,
            "strokes": self.strokes,
            "axes": [_vec(a) for a in self.axes],
            "slot_primitives": {str(k): v for k, v in self.slot_primitives.items()},
            "primitives": [_prim_dict(p) for p in self.primitives],
        }


def _vec(v) -> list[float]:
    return [float(x) for x in v]


def _prim_dict(p) -> dict:
    d = {"kind": p.kind}
    if isinstance(p, Adjust):
        d.update(move=p.move.to_dict(), anchor_position=_vec(p.anchor_position))
    elif isinstance(p, Grasp):
        d.update(node=p.node, mode=p.mode.value, position=_vec(p.position), yaw=p.yaw)
    elif isinstance(p, Offset):
        d.update(slot=p.slot, start=_vec(p.start), vector=_vec(p.vector))
    elif isinstance(p, Guide):
        d.update(slot=p.slot, start=_vec(p.start), end=_vec(p.end), yaw_start=p.yaw_start, yaw_end=p.yaw_end, axis=_vec(p.axis))
    elif isinstance(p, Insert):
        d.update(slot=p.slot, center=_vec(p.center), start=_vec(p.start), end=_vec(p.end), rate=p.rate, sweep=p.sweep, radius=p.radius, yaw=p.yaw)
    elif isinstance(p, SetMode):
        d.update(mode=p.mode.value, stroke=p.stroke)
    elif isinstance(p, Release):
        d.update(stroke=p.stroke)
    return d


# -- offsets and segments --------------------------------------------------------


def horizontal_offset(slot: Slot, gripper, tolerance: float, axis=None) -> np.ndarray:
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    o = slot.axis if axis is None else np.asarray(axis, dtype=float)
    return (gripper.body_width / 2 + slot.spec.width / 2 + tolerance) * o


def vertical_offset(slot: Slot, gripper, tolerance: float) -> np.ndarray:
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    return (gripper.fingernail_height / 2 + slot.spec.height / 2 + tolerance) * E_Z


def routing_axes(scene: Scene, start=None) -> list[np.ndarray]:
    """Slot axes flipped, where needed, to point along the routing direction."""
    prev = scene.state.fixed_end if start is None else np.asarray(start)
    axes = []
    for slot in scene.slots:
        a = slot.axis.copy()
        travel = slot.center[:2] - prev[:2]
        if a[:2] @ travel < 0:
            a = -a
        axes.append(a)
        prev = slot.center
    return axes


def guide_points(j: int, scene: Scene, tolerance: float, axes=None, first_start=None):
    """Start/end of the Guide toward slot ``j`` (0-based).

    ``G_{j-1} = S_{j-1} + d_h(S_j)``, ``G_j = S_j + d_v(S_j) + d_h(S_j)``.  For
    the first slot there is no previous slot; ``first_start`` (the grasp pose)
    lifted by ``d_v(S_1) + d_h(S_1)`` is used instead.
    """
    axes = routing_axes(scene) if axes is None else axes
    slot = scene.slots[j]
    g = scene.gripper
    d_h = horizontal_offset(slot, g, tolerance, axes[j])
    d_v = vertical_offset(slot, g, tolerance)
    end = slot.center + d_v + d_h
    if j == 0:
        if first_start is None:
            raise ValueError("first Guide needs the grasp pose")
        start = np.asarray(first_start, dtype=float) + d_v + d_h
    else:
        start = scene.slots[j - 1].center + d_h
    return start, end


def guide_segment(j: int, scene: Scene, tolerance: float = 0.005, axes=None, first_start=None, yaw_start=None) -> Guide:
    axes = routing_axes(scene) if axes is None else axes
    start, end = guide_points(j, scene, tolerance, axes, first_start)
    yaw_end = math.atan2(axes[j][1], axes[j][0])
    if yaw_start is None:
        yaw_start = yaw_end if j == 0 else math.atan2(axes[j - 1][1], axes[j - 1][0])
    return Guide(slot=j, start=start, end=end, yaw_start=yaw_start, yaw_end=yaw_end, axis=axes[j])


def insert_arc(
    j: int,
    scene: Scene,
    rate: float,
    center,
    start,
    depth: float | None = None,
    yaw: float = 0.0,
) -> Insert:
    """Downward swing about the previous Guide start until the held cable point
    reaches the slot opening height minus the insertion depth."""
    center = np.asarray(center, dtype=float)
    start = np.asarray(start, dtype=float)
    radius = float(np.linalg.norm(start - center))
    if radius < 1e-3:
        raise DegenerateArc(f"arc radius {radius:.2e} m is below 1 mm")
    if rate <= 0:
        raise ValueError("insert rate must be positive")
    slot = scene.slots[j]
    depth = scene.cable.diameter if depth is None else depth
    z_end = slot.center[2] + slot.spec.height / 2 - depth
    u = (start - center) / radius
    w = E_Z - (E_Z @ u) * u
    if np.linalg.norm(w) < 1e-12:
        raise DegenerateArc("arc start is vertically above its centre")
    w /= np.linalg.norm(w)
    # z(phi) = c_z + R cos(phi + alpha) with alpha = atan2(w_z, u_z)
    alpha = math.atan2(w[2], u[2])
    q = (z_end - center[2]) / radius
    if q >= u[2]:
        sweep = 0.0
    elif q <= -1.0:
        sweep = math.pi - alpha
    else:
        sweep = math.acos(q) - alpha
    end = center + radius * (math.cos(sweep) * u - math.sin(sweep) * w)
    return Insert(slot=j, center=center, start=start, end=end, rate=rate, sweep=sweep, yaw=yaw)


# -- compilation -------------------------------------------------------------------


def strokes_for(scene: Scene, config: PlanConfig) -> dict[str, float]:
    d_c = scene.cable.diameter
    lo, hi = scene.gripper.stroke_range
    sgm = d_c + config.sgm_clearance
    tgm = config.tgm_ratio * d_c
    if not (lo <= tgm < sgm <= hi):
        raise ValueError("grasp strokes fall outside the gripper stroke range")
    assert select_mode(sgm, d_c) is GraspMode.SGM and select_mode(tgm, d_c) is GraspMode.TGM
    return {"open": hi, "SGM": sgm, "TGM": tgm}


def compile_plan(
    scene: Scene,
    vote: VoteResult,
    moves: list[AdjustmentMove] = (),
    config: PlanConfig | None = None,
) -> Plan:
    """``scene`` carries the cable state *before* preprocessing; ``moves`` are
    replayed to obtain anchor positions and the grasp pose."""
    config = PlanConfig() if config is None else config
    strokes = strokes_for(scene, config)
    prims: list = []
    state = scene.state
    for move in moves:
        prims.append(Adjust(move=move, anchor_position=state.nodes[move.anchor].copy()))
        state = apply_adjustment(state, move, scene.rest_spacing)

    g = vote.final
    grasp_pos = state.nodes[g].copy()
    tangent = grasp_direction(state, g)
    yaw0 = math.atan2(tangent[1], tangent[0])
    prims.append(Grasp(node=g, mode=GraspMode.SGM, position=grasp_pos, yaw=yaw0))

    axes = routing_axes(scene, start=grasp_pos)
    slot_prims: dict[int, list[int]] = {}
    here = grasp_pos
    yaw = yaw0
    for j in range(len(scene.slots)):
        mine = []
        start, end = guide_points(j, scene, config.tolerance, axes, first_start=grasp_pos)
        mine.append(len(prims))
        prims.append(SetMode(GraspMode.SGM, strokes["SGM"]))
        mine.append(len(prims))
        prims.append(Offset(start=here.copy(), vector=start - here, slot=j))
        guide = guide_segment(j, scene, config.tolerance, axes, first_start=grasp_pos, yaw_start=yaw)
        mine.append(len(prims))
        prims.append(guide)
        mine.append(len(prims))
        prims.append(SetMode(GraspMode.TGM, strokes["TGM"]))
        # The arc pivots about this slot's Guide start, G_{j-1}.
        ins = insert_arc(j, scene, config.insert_rate, start, end, config.insertion_depth, yaw=guide.yaw_end)
        mine.append(len(prims))
        prims.append(ins)
        slot_prims[j] = mine
        here = ins.end
        yaw = guide.yaw_end
    prims.append(Release(strokes["open"]))
    return Plan(
        primitives=prims,
        slot_primitives=slot_prims,
        axes=axes,
        grasp_node=g,
        strokes=strokes,
        config=config,
        vote=vote,
    )


# -- discretisation -----------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray
    position: np.ndarray
    yaw: np.ndarray
    stroke: np.ndarray
    segment: np.ndarray
    plan: Plan | None = None

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,x,y,z,yaw,stroke\n")
            for k in range(len(self.t)):
                x, y, z = self.position[k]
                fh.write(f"{self.t[k]:.6f},{x:.9f},{y:.9f},{z:.9f},{self.yaw[k]:.9f},{self.stroke[k]:.9f}\n")


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


class _Builder:
    def __init__(self, dt: float):
        self.dt = dt
        self.t: list[float] = []
        self.pos: list[np.ndarray] = []
        self.yaw: list[float] = []
        self.stroke: list[float] = []
        self.seg: list[int] = []

    def emit(self, t, p, yaw, stroke, seg):
        self.t.append(t)
        self.pos.append(np.asarray(p, dtype=float))
        self.yaw.append(yaw)
        self.stroke.append(stroke)
        self.seg.append(seg)

    @property
    def now(self):
        return self.t[-1]

    def path(self, fn, duration, seg, yaw_fn, stroke):
        n = max(1, math.ceil(duration / self.dt - 1e-9)) if duration > 0 else 1
        t0 = self.now
        step = duration / n if duration > 0 else self.dt
        for k in range(1, n + 1):
            s = k / n
            self.emit(t0 + k * step, fn(s), yaw_fn(s), stroke, seg)

    def line(self, a, b, speed, seg, yaw0, yaw1, stroke):
        a, b = np.asarray(a, float), np.asarray(b, float)
        dyaw = _wrap(yaw1 - yaw0)
        self.path(lambda s: a + s * (b - a), float(np.linalg.norm(b - a)) / speed, seg, lambda s: yaw0 + s * dyaw, stroke)

    def dwell(self, duration, seg, stroke0, stroke1):
        if duration <= 0:
            return  # instant switch: later waypoints carry the new stroke
        p, yaw = self.pos[-1], self.yaw[-1]
        n = max(1, math.ceil(duration / self.dt - 1e-9))
        t0 = self.now
        for k in range(1, n + 1):
            s = k / n
            self.emit(t0 + s * duration, p, yaw, stroke0 + s * (stroke1 - stroke0), seg)


def discretize(plan: Plan, dt: float | None = None, guide_speed: float | None = None, transit_speed: float | None = None) -> Trajectory:
    cfg = plan.config
    dt = cfg.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_guide = cfg.guide_speed if guide_speed is None else guide_speed
    v_transit = cfg.transit_speed if transit_speed is None else transit_speed
    strokes = plan.strokes
    b = _Builder(dt)
    first = plan.primitives[0]
    start = first.anchor_position if isinstance(first, Adjust) else first.position
    yaw = first.yaw if isinstance(first, Grasp) else next(p.yaw for p in plan.primitives if isinstance(p, Grasp))
    b.emit(0.0, start, yaw, strokes["open"], 0)
    stroke = strokes["open"]
    for idx, prim in enumerate(plan.primitives):
        here = b.pos[-1]
        if isinstance(prim, Adjust):
            b.line(here, prim.anchor_position, v_transit, idx, yaw, yaw, stroke)
            b.dwell(cfg.mode_switch_time, idx, stroke, strokes["SGM"])
            b.line(prim.anchor_position, prim.anchor_position + prim.move.vector, v_guide, idx, yaw, yaw, strokes["SGM"])
            b.dwell(cfg.mode_switch_time, idx, strokes["SGM"], strokes["open"])
            stroke = strokes["open"]
        elif isinstance(prim, Grasp):
            b.line(here, prim.position, v_transit, idx, yaw, prim.yaw, stroke)
            yaw = prim.yaw
            b.dwell(cfg.mode_switch_time, idx, stroke, strokes["SGM"])
            stroke = strokes["SGM"]
        elif isinstance(prim, SetMode):
            if prim.stroke != stroke:
                b.dwell(cfg.mode_switch_time, idx, stroke, prim.stroke)
                stroke = prim.stroke
        elif isinstance(prim, Offset):
            if np.linalg.norm(prim.vector) > 0:
                b.line(here, prim.end, v_guide, idx, yaw, yaw, stroke)
        elif isinstance(prim, Guide):
            if np.linalg.norm(prim.start - here) > 1e-9:
                b.line(here, prim.start, v_guide, idx, yaw, yaw, stroke)
            b.line(prim.start, prim.end, v_guide, idx, prim.yaw_start, prim.yaw_end, stroke)
            yaw = prim.yaw_end
        elif isinstance(prim, Insert):
            if prim.sweep > 0:
                y = yaw
                b.path(lambda s, p=prim: p.point(s * p.sweep), prim.length / prim.rate, idx, lambda s: y, stroke)
        elif isinstance(prim, Release):
            b.dwell(cfg.mode_switch_time, idx, stroke, prim.stroke)
            stroke = prim.stroke
    return Trajectory(
        t=np.array(b.t),
        position=np.array(b.pos),
        yaw=np.array(b.yaw),
        stroke=np.array(b.stroke),
        segment=np.array(b.seg, dtype=int),
        plan=plan,
    )
