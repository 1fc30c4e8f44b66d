"""Quasi-static node-chain cable simulator.

Each trajectory waypoint moves the gripper; the cable is then relaxed by
position projection (pins, inextensible segments, bend smoothing, gravity,
table contact).  After every Insert the slot is judged with the failure
taxonomy: A = folded cable, B = cable not aligned with (or not seated in)
the slot.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import CableNotNearSlot
from .geometry import GraspMode, select_mode
from .motion_plan import Adjust, Insert, Plan, Trajectory
from .preprocess import coherence_weights, project_lengths
from .scene import CableState, Rigidity, Scene, Slot

log = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    PASSED = "passed"
    FOLDED = "failure_A_folded"
    MISALIGNED = "failure_B_misaligned"
    NOT_REACHED = "not_reached"


@dataclass
class SimParams:
    bend_stiffness: dict = field(
        default_factory=lambda: {Rigidity.LOW: 0.05, Rigidity.MEDIUM: 0.3, Rigidity.HIGH: 0.8}
    )
    projection_iterations: int = 20
    fold_angle_threshold: float = math.radians(30.0)
    misalign_threshold: float = math.radians(45.0)
    table_friction: bool = True
    friction_limit: float = 1e-4  # soft displacement per sweep that table friction absorbs (m)
    segment_length: float = 0.005
    gravity_step: float = 2e-4  # downward displacement per sweep (m)
    convergence_tol: float = 1e-5
    hard_passes: int = 100  # cap on the final length-only passes
    stretch_tol: float = 2e-3
    slide_limit: float = 0.005  # SGM axial slide per step (m)
    slack_ratio: float = 0.97
    settle_steps: int = 100  # relaxation calls after the release
    wake_tol: float = 1e-6  # motion per sweep below which a node on the table sticks
    jitter: float = 1e-4
    capture_radius: float | None = None  # lateral jaw reach; defaults to half the open stroke
    hold_length: float | None = None  # straight run held by the jaws; defaults to the body width

    def __post_init__(self):
        self.bend_stiffness = {Rigidity(k): float(v) for k, v in self.bend_stiffness.items()}
        for name in ("fold_angle_threshold", "misalign_threshold"):
            v = getattr(self, name)
            if not 0 < v < math.pi:
                raise ValueError(f"{name} must lie in (0, pi)")
        if self.projection_iterations < 1:
            raise ValueError("projection_iterations must be >= 1")

    def stiffness(self, rigidity) -> float:
        return self.bend_stiffness[Rigidity(rigidity)]


@dataclass
class RelaxResult:
    state: CableState
    converged: bool
    iterations: int
    tension: float


@dataclass
class SimResult:
    outcomes: list[Outcome]
    final_state: CableState
    max_tension: float
    events: list[dict] = field(default_factory=list)
    frames: list[np.ndarray] | None = None

    @property
    def all_passed(self) -> bool:
        return all(o is Outcome.PASSED for o in self.outcomes)

    def to_dict(self) -> dict:
        return {
            "outcomes": [o.value for o in self.outcomes],
            "all_passed": self.all_passed,
            "max_tension": round(self.max_tension, 9),
            "events": self.events,
        }


# -- projection kernel -------------------------------------------------------------


@numba.njit(cache=True)
def _project_hard(x, rest, inv_mass, pin_idx, pin_pos, zmin, tail_start):
    n = x.shape[0]
    # Forward then backward leader-follower passes (FABRIK-style): each
    # segment is fixed by moving only one end, which converges quickly
    # between two held points and drags a free tail in a single pass.
    for sweep in range(2):
        for jj in range(n - 1):
            j = jj if sweep == 0 else n - 2 - jj
            if sweep == 1 and j >= tail_start:
                continue
            if sweep == 0:
                wa, wb = (0.0, 1.0) if inv_mass[j + 1] > 0.0 else (inv_mass[j], 0.0)
            else:
                wa, wb = (1.0, 0.0) if inv_mass[j] > 0.0 else (0.0, inv_mass[j + 1])
            if wa + wb == 0.0:
                continue
            dx = x[j + 1, 0] - x[j, 0]
            dy = x[j + 1, 1] - x[j, 1]
            dz = x[j + 1, 2] - x[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < 1e-12:
                continue
            c = (d - rest) / d
            x[j, 0] += wa * c * dx
            x[j, 1] += wa * c * dy
            x[j, 2] += wa * c * dz
            x[j + 1, 0] -= wb * c * dx
            x[j + 1, 1] -= wb * c * dy
            x[j + 1, 2] -= wb * c * dz
    for m in range(pin_idx.shape[0]):
        x[pin_idx[m], 0] = pin_pos[m, 0]
        x[pin_idx[m], 1] = pin_pos[m, 1]
        x[pin_idx[m], 2] = pin_pos[m, 2]
    for i in range(n):
        if inv_mass[i] == 0.0:
            continue
        if x[i, 2] < zmin:
            x[i, 2] = zmin


@numba.njit(cache=True)
def _max_stretch(x, rest):
    out = 0.0
    for j in range(x.shape[0] - 1):
        dx = x[j + 1, 0] - x[j, 0]
        dy = x[j + 1, 1] - x[j, 1]
        dz = x[j + 1, 2] - x[j, 2]
        r = math.sqrt(dx * dx + dy * dy + dz * dz) / rest
        if r > out:
            out = r
    return out


@numba.njit(cache=True)
def _relax_kernel(x, rest, pin_idx, pin_pos, bend, gstep, zmin, friction, awake, wake_tol, iterations, tol, hard_cap, stretch_tol):
    """Soft terms (gravity, bend smoothing) once per sweep followed by hard
    projections; a final hard-only phase restores inextensibility.  ``awake``
    is updated in place: a node is awake while it moved more than
    ``wake_tol`` in the last sweep."""
    n = x.shape[0]
    inv_mass = np.ones(n)
    tail_start = 0
    for m in range(pin_idx.shape[0]):
        inv_mass[pin_idx[m]] = 0.0
        if pin_idx[m] > tail_start:
            tail_start = pin_idx[m]
    prev = np.empty_like(x)
    used = 0
    disp = 0.0
    for it in range(iterations):
        used = it + 1
        prev[:, :] = x
        for i in range(n):
            if inv_mass[i] > 0.0:
                x[i, 2] -= gstep
        if bend > 0.0:
            # Pull each node toward its neighbours' midpoint; at a pinned node
            # the free neighbours move instead, by the same curvature reduction.
            for i in range(1, n - 1):
                if inv_mass[i] > 0.0:
                    for k in range(3):
                        x[i, k] += bend * (0.5 * (x[i - 1, k] + x[i + 1, k]) - x[i, k])
                else:
                    free = inv_mass[i - 1] + inv_mass[i + 1]
                    if free == 0.0:
                        continue
                    for k in range(3):
                        c = bend * (0.5 * (x[i - 1, k] + x[i + 1, k]) - x[i, k]) / free
                        x[i - 1, k] -= inv_mass[i - 1] * c
                        x[i + 1, k] -= inv_mass[i + 1] * c
        if friction >= 0.0:
            # Coulomb-like table friction: a sliding node keeps only the part
            # of this sweep's soft displacement that exceeds ``friction``; a
            # node at rest on the table (static friction) keeps none of it.
            for i in range(n):
                if inv_mass[i] == 0.0 or prev[i, 2] > zmin + 1e-9:
                    continue
                sx = x[i, 0] - prev[i, 0]
                sy = x[i, 1] - prev[i, 1]
                s = math.sqrt(sx * sx + sy * sy)
                f = 0.0 if s <= friction or not awake[i] else (s - friction) / s
                x[i, 0] = prev[i, 0] + f * sx
                x[i, 1] = prev[i, 1] + f * sy
        for inner in range(2):
            _project_hard(x, rest, inv_mass, pin_idx, pin_pos, zmin, tail_start)
        disp = 0.0
        for i in range(n):
            dx = x[i, 0] - prev[i, 0]
            dy = x[i, 1] - prev[i, 1]
            dz = x[i, 2] - prev[i, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            awake[i] = d > wake_tol
            if d > disp:
                disp = d
        if disp < tol:
            break
    for k in range(hard_cap):
        if _max_stretch(x, rest) < 1.0 + stretch_tol:
            break
        _project_hard(x, rest, inv_mass, pin_idx, pin_pos, zmin, tail_start)
    return used, disp, _max_stretch(x, rest)


_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_P = np.zeros((0, 3))


def _relax_arrays(x, rest, pins, bend, params, zmin, iterations=None, awake=None):
    """In-place relaxation; ``pins`` maps node index to position.  Without
    ``awake`` every node starts out sliding."""
    if awake is None:
        awake = np.ones(x.shape[0], dtype=np.bool_)
    if pins:
        idx = np.fromiter(pins.keys(), dtype=np.int64, count=len(pins))
        pos = np.array([pins[i] for i in idx], dtype=float).reshape(-1, 3)
    else:
        idx, pos = _EMPTY_I, _EMPTY_P
    friction = params.friction_limit if params.table_friction else -1.0
    iters = params.projection_iterations if iterations is None else iterations
    return _relax_kernel(
        x, rest, idx, pos, bend, params.gravity_step, zmin, friction, awake, params.wake_tol, iters,
        params.convergence_tol, params.hard_passes, params.stretch_tol,
    )


def relax(
    state: CableState,
    pins,
    params: SimParams,
    rest_length: float,
    bend_stiffness: float,
    table_z: float = 0.0,
    cable_diameter: float = 0.0,
    iterations: int | None = None,
) -> RelaxResult:
    """Project ``state`` onto the constraint set.  ``pins`` is a collection of
    ``(node index, position)``; at most two are expected (fixed end, gripper)."""
    pins = list(pins)
    if len(pins) > 2:
        raise ValueError("at most two pinned nodes")
    for i, p in pins:
        if not np.all(np.isfinite(p)):
            raise ValueError("pin positions must be finite")
        if not 0 <= i < state.count:
            raise IndexError(i)
    x = np.array(state.nodes, dtype=float)
    zmin = table_z + cable_diameter / 2
    used, disp, stretch = _relax_arrays(
        x, rest_length, {int(i): np.asarray(p, float) for i, p in pins}, bend_stiffness, params, zmin, iterations=iterations
    )
    converged = disp < params.convergence_tol and stretch < 1.01
    return RelaxResult(state=state.with_nodes(x), converged=converged, iterations=used, tension=stretch)


# -- outcome checks ------------------------------------------------------------------


def interior_angles(nodes: np.ndarray) -> np.ndarray:
    a = nodes[:-2] - nodes[1:-1]
    b = nodes[2:] - nodes[1:-1]
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na > 1e-12) & (nb > 1e-12)
    cos = np.ones(len(a))
    cos[ok] = np.einsum("ij,ij->i", a[ok], b[ok]) / (na[ok] * nb[ok])
    return np.arccos(np.clip(cos, -1.0, 1.0))


def detect_fold(state: CableState, params: SimParams) -> bool:
    return bool(np.any(interior_angles(np.asarray(state.nodes)) < params.fold_angle_threshold))


def misalignment_angle(state: CableState, slot: Slot) -> float:
    """In-plane angle between the cable at its node closest to the slot
    centre and the slot axis, folded to [0, pi/2]."""
    nodes = np.asarray(state.nodes)
    d = np.linalg.norm(nodes - slot.center, axis=1)
    i = int(np.argmin(d))
    if d[i] > 2 * slot.spec.max_radius:
        raise CableNotNearSlot(f"closest cable node is {d[i]:.3f} m from the slot")
    axis = slot.axis[:2] / np.linalg.norm(slot.axis[:2])
    # Widen the stencil until the horizontal run is measurable.
    for k in range(1, len(nodes)):
        lo, hi = max(i - k, 0), min(i + k, len(nodes) - 1)
        v = nodes[hi, :2] - nodes[lo, :2]
        n = np.linalg.norm(v)
        if n > 1e-6 or (lo == 0 and hi == len(nodes) - 1):
            break
    if n <= 1e-12:
        return math.pi / 2
    cos = abs(float(v @ axis)) / n
    return math.acos(min(cos, 1.0))


def detect_misalignment(state: CableState, slot: Slot, params: SimParams) -> bool:
    return misalignment_angle(state, slot) > params.misalign_threshold


def _segment_window_distance(a, b, slot: Slot, z_lo: float, z_hi: float, step: float) -> float:
    """Distance from segment ab to the slot opening window (plane normal = slot axis)."""
    axis = slot.axis
    lateral = np.array([-axis[1], axis[0], 0.0])
    lateral /= np.linalg.norm(lateral)
    half_w = slot.spec.thickness / 2
    c = slot.center
    n = max(2, int(math.ceil(np.linalg.norm(b - a) / step)) + 1)
    s = np.linspace(0.0, 1.0, n)[:, None]
    pts = a + s * (b - a)
    rel = pts - c
    along = rel @ axis
    lat = rel @ lateral
    z = pts[:, 2]
    d_lat = np.maximum(np.abs(lat) - half_w, 0.0)
    d_z = np.maximum(np.maximum(z_lo - z, z - z_hi), 0.0)
    best = float(np.min(np.sqrt(along**2 + d_lat**2 + d_z**2)))
    # exact plane crossing
    fa, fb = float((a - c) @ axis), float((b - c) @ axis)
    if fa * fb <= 0 and fa != fb:
        t = fa / (fa - fb)
        p = a + t * (b - a)
        r = p - c
        dl = max(abs(float(r @ lateral)) - half_w, 0.0)
        dz = max(z_lo - p[2], p[2] - z_hi, 0.0)
        best = min(best, math.hypot(dl, dz))
    return best


def check_slot_pass(state: CableState, slot: Slot, cable_diameter: float, table_z: float | None = None) -> bool:
    """Cable threads the slot opening: the vertical window through the slot
    centre, normal to the slot axis, ``thickness`` wide and ``height`` tall,
    with half a cable diameter of clearance."""
    nodes = np.asarray(state.nodes)
    bottom = slot.center[2] - slot.spec.height / 2 if table_z is None else table_z
    top = slot.center[2] + slot.spec.height / 2
    clearance = cable_diameter / 2
    step = max(cable_diameter / 10, 1e-4)
    reach = slot.spec.max_radius + slot.spec.height + clearance
    near = np.linalg.norm(nodes - slot.center, axis=1) < reach + np.max(np.linalg.norm(np.diff(nodes, axis=0), axis=1), initial=0.0)
    for k in range(len(nodes) - 1):
        if not (near[k] or near[k + 1]):
            continue
        if _segment_window_distance(nodes[k], nodes[k + 1], slot, bottom, top, step) <= clearance:
            return True
    return False


# -- execution -----------------------------------------------------------------------


def _resample_to(state: CableState, total_length: float, seg: float) -> tuple[np.ndarray, float]:
    n = max(int(round(total_length / seg)) + 1, state.count)
    nodes = np.asarray(state.nodes)
    d = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(d)])
    targets = np.linspace(0.0, cum[-1], n)
    x = np.column_stack([np.interp(targets, cum, nodes[:, k]) for k in range(3)])
    return x, total_length / (n - 1)


def _jaw_capture(x, grip, yaw, span, gripper, rest) -> int | None:
    """Node swept between the closing jaws: within half the body width (or
    half a segment) along the jaw, within half the open stroke across it, and
    within fingernail reach vertically.  The one nearest the jaw centre is
    taken."""
    u = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    v = np.array([-u[1], u[0], 0.0])
    rel = x - grip
    along = np.abs(rel @ u)
    lat = np.abs(rel @ v)
    reach = max(gripper.body_width, rest) / 2
    ok = (along <= reach) & (lat <= span / 2) & (np.abs(rel[:, 2]) <= gripper.fingernail_height)
    if not ok.any():
        return None
    score = np.where(ok, np.hypot(along, lat), np.inf)
    return int(np.argmin(score))


def _placed(center_node: int, half: int, point, direction, rest: float, n: int) -> dict:
    """Kinematic nodes laid straight along ``direction`` through ``point``."""
    out = {}
    for i in range(max(center_node - half, 1), min(center_node + half, n - 1) + 1):
        out[i] = point + (i - center_node) * rest * direction
    return out


def _clamp_node(x, seat, axis, half, rest, behind: dict, ahead: dict) -> int:
    """Chain index to centre a slot clamp on: the node nearest the seat,
    shifted if needed so the cable between the clamp and its held
    neighbours (earlier clamps behind, the hand ahead) stays long enough."""
    node = int(np.argmin(np.linalg.norm(x - seat, axis=1)))
    if ahead:
        rear = min(ahead)
        gap = float(np.linalg.norm(ahead[rear] - (seat + half * rest * axis)))
        node = min(node, rear - half - math.ceil(gap / rest - 1e-9))
    back = [i for i in behind if i < node]
    if back:
        last = max(back)
        gap = float(np.linalg.norm(behind[last] - (seat - half * rest * axis)))
        node = max(node, last + half + math.ceil(gap / rest - 1e-9))
    return node


def execute(
    trajectory: Trajectory,
    scene: Scene,
    params: SimParams | None = None,
    seed: int = 0,
    dump_frames: bool = False,
    frame_every: int = 25,
) -> SimResult:
    """Run ``trajectory`` against ``scene`` (the ground-truth world).

    The jaws hold a short straight run of cable that turns with the gripper yaw; under
    SGM that run slides toward the loose end whenever the span behind it is
    nearly taut.  A slot that passes its check clamps the cable along its axis
    at the seat height for the rest of the run.
    """
    params = SimParams() if params is None else params
    plan: Plan = trajectory.plan
    if plan is None:
        raise ValueError("trajectory carries no plan; build it with discretize()")
    rng = np.random.default_rng(seed)
    d_c = scene.cable.diameter
    zmin = scene.table_z + d_c / 2
    bend = params.stiffness(scene.cable.rigidity)
    q_spacing = scene.rest_spacing
    # A cable cannot bend tighter than its own thickness, so nodes are never
    # closer than one diameter.
    x, rest = _resample_to(scene.state, scene.cable.total_length, max(params.segment_length, d_c))
    n = len(x)
    x[1:, :2] += rng.normal(0.0, params.jitter, size=(n - 1, 2))
    x[:, 2] = np.maximum(x[:, 2], zmin)
    fixed = np.array(scene.state.fixed_end, dtype=float)
    fixed[2] = max(fixed[2], zmin)
    x = project_lengths(x, fixed, rest)
    jaw_span = plan.strokes["open"] if params.capture_radius is None else 2 * params.capture_radius
    hold = scene.gripper.body_width if params.hold_length is None else params.hold_length
    hand_half = max(0, int(round(hold / 2 / rest)))
    slide_credit = 0.0  # axial slide allowance carried over between steps (m)
    awake = np.zeros(n, dtype=np.bool_)  # the cable starts at rest on the table

    outcomes = [Outcome.NOT_REACHED] * len(scene.slots)
    events: list[dict] = []
    frames = [] if dump_frames else None
    clamps: dict[int, np.ndarray] = {0: fixed}
    held: int | None = None
    hold_twist = 0.0  # cable heading in the jaws relative to the gripper yaw
    missed = False
    max_tension = 0.0
    adjust_base = None
    adjust_key = None
    stop = False
    prims = plan.primitives

    def log_event(k, kind, **kw):
        ev = {"step": int(k), "t": round(float(trajectory.t[k]), 6), "event": kind}
        ev.update(kw)
        events.append(ev)

    def hand(grip, yaw):
        a = yaw + hold_twist
        u = np.array([math.cos(a), math.sin(a), 0.0])
        return _placed(held, hand_half, grip, u, rest, n)

    def pins_for(grip, yaw):
        pins = dict(clamps)
        if held is not None:
            pins.update(hand(grip, yaw))
        return pins

    def span_ratio(grip, yaw):
        # Chord over available arclength between the last clamp and the rear of the hand.
        h = hand(grip, yaw)
        rear = min(h)
        behind = max(i for i in clamps if i < rear) if any(i < rear for i in clamps) else 0
        avail = (rear - behind) * rest
        return float(np.linalg.norm(h[rear] - clamps.get(behind, fixed))) / max(avail, 1e-12)

    def judge(k, j):
        nonlocal stop
        st = CableState(nodes=x.copy(), fixed_end=fixed)
        slot = scene.slots[j]
        folded = detect_fold(st, params)
        try:
            mis = misalignment_angle(st, slot)
        except CableNotNearSlot:
            mis = math.pi / 2
        passed = check_slot_pass(st, slot, d_c, scene.table_z)
        if folded:
            out = Outcome.FOLDED
        elif mis > params.misalign_threshold or not passed:
            out = Outcome.MISALIGNED
        else:
            out = Outcome.PASSED
        outcomes[j] = out
        angles = interior_angles(x)
        log_event(k, "slot_check", slot=j, outcome=out.value, misalign_deg=round(math.degrees(mis), 4),
                  min_interior_deg=round(math.degrees(float(angles.min())), 4), threaded=passed)
        if out is Outcome.PASSED:
            seat = slot.center.copy()
            seat[2] = slot.top_z - (plan.config.insertion_depth or d_c)
            half = max(1, int(round(slot.spec.width / 2 / rest)))
            node = _clamp_node(x, seat, plan.axes[j], half, rest, clamps, hand(grip_prev, yaw_prev) if held is not None else {})
            placed = _placed(node, half, seat, plan.axes[j], rest, n)
            if held is not None:
                placed = {i: p for i, p in placed.items() if abs(i - held) > hand_half}
            clamps.update(placed)
        else:
            stop = True

    last_seg = int(trajectory.segment[0])
    grip_prev, yaw_prev = trajectory.position[0], float(trajectory.yaw[0])
    for k in range(len(trajectory)):
        grip = trajectory.position[k]
        yaw = float(trajectory.yaw[k])
        stroke = float(trajectory.stroke[k])
        seg = int(trajectory.segment[k])
        prim = prims[seg]

        if seg != last_seg:
            done = prims[last_seg]
            if isinstance(done, Insert):
                judge(k - 1, done.slot)
                if stop:
                    break
            last_seg = seg

        closed = stroke <= plan.strokes["SGM"] + 1e-12
        mode = select_mode(stroke, d_c) if closed else None
        if closed and held is None and not missed:
            held = _jaw_capture(x, grip, yaw, jaw_span, scene.gripper, rest)
            if held is None:
                missed = True
                log_event(k, "grasp_missed")
            else:
                # The jaws close on the cable as it lies, then turn with the gripper.
                t = x[min(held + 1, n - 1), :2] - x[max(held - 1, 0), :2]
                hold_twist = math.remainder(math.atan2(t[1], t[0]) - yaw, 2 * math.pi) if np.hypot(*t) > 1e-9 else 0.0
                log_event(k, "grasp", node=held, mode=mode.value)
        elif not closed:
            missed = False
            if held is not None:
                log_event(k, "release", node=held)
                held = None

        if isinstance(prim, Adjust) and held is not None:
            key = (seg, held)
            if adjust_key != key:
                adjust_key = key
                adjust_base = (x.copy(), grip.copy())
            base, grip0 = adjust_base
            # Same Gaussian coherence as preprocessing, expressed in simulator nodes.
            w = coherence_weights(n, held, prim.move.coherence_sigma * q_spacing / rest)
            x = project_lengths(base + w[:, None] * (grip - grip0)[None, :], fixed, rest)
            x[:, 2] = np.maximum(x[:, 2], zmin)
        else:
            adjust_key = None
            if held is not None and mode is GraspMode.SGM:
                # The held point moves in whole nodes; the allowance accrues
                # at slide_limit per step so coarse chains slide no faster.
                slide_credit = min(slide_credit + params.slide_limit, max(rest, params.slide_limit))
                while slide_credit >= rest - 1e-12 and held + hand_half + 1 < n and span_ratio(grip, yaw) > params.slack_ratio:
                    held += 1
                    slide_credit -= rest
            _, _, stretch = _relax_arrays(x, rest, pins_for(grip, yaw), bend, params, zmin, awake=awake)
            max_tension = max(max_tension, stretch)
        grip_prev, yaw_prev = grip, yaw
        if frames is not None and k % frame_every == 0:
            frames.append(x.copy())
    else:
        done = prims[last_seg]
        if isinstance(done, Insert) and outcomes[done.slot] is Outcome.NOT_REACHED:
            judge(len(trajectory) - 1, done.slot)
        if not stop and held is None:
            # Let the released cable come to rest in its slots; a soft cable
            # dropped from the jaws piles onto itself.
            steps = 0
            for steps in range(1, params.settle_steps + 1):
                before = x.copy()
                _relax_arrays(x, rest, dict(clamps), bend, params, zmin, awake=awake)
                if np.max(np.linalg.norm(x - before, axis=1)) < params.convergence_tol:
                    break
            if frames is not None:
                frames.append(x.copy())
            last = max((j for j, o in enumerate(outcomes) if o is Outcome.PASSED), default=None)
            folded = detect_fold(CableState(nodes=x.copy(), fixed_end=fixed), params)
            log_event(len(trajectory) - 1, "settle_check", steps=steps, folded=folded,
                      min_interior_deg=round(math.degrees(float(interior_angles(x).min())), 4))
            if folded and last is not None:
                outcomes[last] = Outcome.FOLDED

    return SimResult(
        outcomes=outcomes,
        final_state=CableState(nodes=x, fixed_end=fixed),
        max_tension=float(max_tension),
        events=events,
        frames=frames,
    )
