import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carobio.errors import DegenerateArc
from carobio.geometry import GraspMode, select_mode
from carobio.motion_plan import (
    Grasp,
    Guide,
    Insert,
    Plan,
    PlanConfig,
    SetMode,
    discretize,
    guide_points,
    horizontal_offset,
    insert_arc,
    routing_axes,
    vertical_offset,
)
from carobio.pipeline import PipelineConfig, plan_scenario
from carobio.scenarios import random_scenario
from carobio.scene import CableSpec, CableState, GripperSpec, Scene, Slot, SlotPose, SlotSpec
from oracles import polyline_length

FAST = PipelineConfig(perceive=False)


def _mm_slot(width=10.0, height=60.0):
    return Slot(SlotSpec(width=width, height=height, max_radius=width), SlotPose(center=[0, 0, 0], axis=[1, 0, 0]))


def _mm_gripper():
    return GripperSpec(body_width=30.0, fingernail_height=20.0, outer_profile_radius=60.0, stroke_range=(0.0, 140.0))


def test_horizontal_offset_example():
    d_h = horizontal_offset(_mm_slot(), _mm_gripper(), 5.0)
    assert d_h.tolist() == [25.0, 0.0, 0.0]
    assert horizontal_offset(_mm_slot(), _mm_gripper(), 0.0).tolist() == [20.0, 0.0, 0.0]


def test_vertical_offset_example():
    d_v = vertical_offset(_mm_slot(), _mm_gripper(), 5.0)
    assert d_v.tolist() == [0.0, 0.0, 45.0]
    assert vertical_offset(_mm_slot(), _mm_gripper(), 0.0).tolist() == [0.0, 0.0, 40.0]


def test_offsets_reject_negative_tolerance():
    with pytest.raises(ValueError):
        horizontal_offset(_mm_slot(), _mm_gripper(), -1.0)
    with pytest.raises(ValueError):
        vertical_offset(_mm_slot(), _mm_gripper(), -1.0)


def _guide_scene():
    spec = SlotSpec(width=0.01, height=0.06, max_radius=0.01)
    slots = (
        Slot(spec, SlotPose(center=[0.5, 0.0, 0.0], axis=[1, 0, 0])),
        Slot(spec, SlotPose(center=[0.5, 0.3, 0.0], axis=[1, 0, 0])),
    )
    nodes = np.column_stack([np.linspace(0, 1, 11), np.full(11, -0.2), np.zeros(11)])
    return Scene(slots=slots, cable=CableSpec(1.0, 0.004), state=CableState(nodes, [0, -0.2, 0]))


def test_guide_points_example():
    start, end = guide_points(1, _guide_scene(), 0.005)
    np.testing.assert_allclose(start, [0.525, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(end, [0.525, 0.3, 0.045], atol=1e-15)


def test_first_guide_needs_grasp_pose():
    with pytest.raises(ValueError):
        guide_points(0, _guide_scene(), 0.005)


def test_routing_axes_point_along_travel():
    scene = _guide_scene()
    flipped = Scene(slots=(Slot(scene.slots[0].spec, SlotPose(center=[0.5, 0, 0], axis=[-1, 0, 0])),),
                    cable=scene.cable, state=CableState(scene.state.nodes, [0, 0, 0]))
    np.testing.assert_allclose(routing_axes(flipped)[0], [1, 0, 0])


def _arc_scene():
    spec = SlotSpec(width=0.04, height=0.05, max_radius=0.0215)
    slot = Slot(spec, SlotPose(center=[0.3, 0.0, 0.025], axis=[1, 0, 0]))
    nodes = np.column_stack([np.linspace(0, 1, 11), np.full(11, 0.1), np.zeros(11)])
    return Scene(slots=(slot,), cable=CableSpec(1.0, 0.004), state=CableState(nodes, nodes[0]))


def test_insert_arc_example():
    ins = insert_arc(0, _arc_scene(), 0.01, [0, 0, 0], [0.3, 0, 0.045], depth=0.03)
    assert ins.radius == pytest.approx(math.hypot(0.3, 0.045), rel=1e-15)
    assert ins.radius == pytest.approx(0.30335, abs=1e-5)
    phis = np.linspace(0, ins.sweep, 200)
    pts = ins.point(phis)
    assert np.all(np.diff(pts[:, 2]) < 0)
    assert pts[-1, 2] == pytest.approx(0.02, abs=1e-12)
    np.testing.assert_allclose(np.linalg.norm(pts - ins.center, axis=1), ins.radius, atol=1e-12)


def test_insert_duration_is_length_over_rate():
    ins = insert_arc(0, _arc_scene(), 0.01, [0, 0, 0], [0.3, 0, 0.045], depth=0.03)
    scaled = Insert(slot=0, center=ins.center, start=ins.start, end=ins.end, rate=0.01, sweep=0.0314 / ins.radius, yaw=0.0)
    assert scaled.length / scaled.rate == pytest.approx(3.14, rel=1e-12)


def test_insert_arc_degenerate():
    with pytest.raises(DegenerateArc):
        insert_arc(0, _arc_scene(), 0.01, [0, 0, 0], [0.0005, 0, 0])
    with pytest.raises(DegenerateArc):
        insert_arc(0, _arc_scene(), 0.01, [0, 0, 0], [0, 0, 0.2])


def _guide_plan(length=0.3, dt=0.1, speed=0.1):
    grasp = Grasp(node=1, mode=GraspMode.SGM, position=np.zeros(3), yaw=0.0)
    guide = Guide(slot=0, start=np.zeros(3), end=np.array([length, 0, 0]), yaw_start=0.0, yaw_end=0.0, axis=np.array([1.0, 0, 0]))
    cfg = PlanConfig(dt=dt, guide_speed=speed, mode_switch_time=0.0)
    return Plan(primitives=[grasp, guide], slot_primitives={}, axes=[], grasp_node=1,
                strokes={"open": 0.1, "SGM": 0.006, "TGM": 0.003}, config=cfg)


def test_discretize_guide_example():
    traj = discretize(_guide_plan())
    seg = traj.segment == 1
    # 3 s at 0.1 s steps: the start waypoint plus 30 more.
    assert seg.sum() == 30
    times = traj.t[seg]
    assert times[-1] - traj.t[np.flatnonzero(seg)[0] - 1] == pytest.approx(3.0, abs=1e-12)
    np.testing.assert_allclose(traj.position[-1], [0.3, 0, 0], atol=1e-15)
    assert np.all(np.diff(traj.t) > 0)


def test_discretize_coarse_dt_keeps_endpoints():
    traj = discretize(_guide_plan(length=0.01, dt=5.0))
    seg = np.flatnonzero(traj.segment == 1)
    assert len(seg) >= 1
    np.testing.assert_allclose(traj.position[seg[-1]], [0.01, 0, 0])
    assert len(traj) >= 2


def test_discretize_rejects_bad_dt():
    with pytest.raises(ValueError):
        discretize(_guide_plan(), dt=0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_plan_shape(k):
    res = plan_scenario(random_scenario(5, n_slots=k), FAST)
    plan = res.plan
    assert plan.count("grasp") == 1
    assert plan.count("guide") == k and plan.count("insert") == k
    guides = [p.slot for p in plan.primitives if isinstance(p, Guide)]
    inserts = [p.slot for p in plan.primitives if isinstance(p, Insert)]
    assert guides == inserts == list(range(k))
    order = [(p.kind, getattr(p, "slot", None)) for p in plan.primitives]
    for j in range(k - 1):
        assert order.index(("insert", j)) < order.index(("guide", j + 1))
    assert plan.primitives[-1].kind == "release"


def _check_modes(plan, traj, diameter):
    mode = None
    for idx, p in enumerate(plan.primitives):
        if isinstance(p, Grasp):
            mode = p.mode
        elif isinstance(p, SetMode):
            mode = p.mode
            assert select_mode(p.stroke, diameter) is p.mode
        elif isinstance(p, Guide):
            assert mode is GraspMode.SGM
            assert np.all(traj.stroke[traj.segment == idx] == plan.strokes["SGM"])
        elif isinstance(p, Insert):
            assert mode is GraspMode.TGM
            assert isinstance(plan.primitives[idx - 1], SetMode) and plan.primitives[idx - 1].mode is GraspMode.TGM
            assert np.all(traj.stroke[traj.segment == idx] == plan.strokes["TGM"])


def _check_arcs(plan, traj):
    for idx, p in enumerate(plan.primitives):
        if isinstance(p, Insert):
            pts = traj.position[traj.segment == idx]
            assert np.max(np.abs(np.linalg.norm(pts - p.center, axis=1) - p.radius)) <= 1e-9


def _check_continuity(plan, traj):
    # Waypoint spacing never exceeds the fastest speed times dt.
    step = np.linalg.norm(np.diff(traj.position, axis=0), axis=1)
    v = max(plan.config.transit_speed, plan.config.guide_speed, plan.config.insert_rate)
    assert np.all(step <= v * np.diff(traj.t) + 1e-9)


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=5000), st.integers(min_value=1, max_value=3))
def test_plan_invariants(seed, k):
    sc = random_scenario(seed, n_slots=k)
    res = plan_scenario(sc, FAST)
    assert res.plan.count("grasp") == 1
    _check_modes(res.plan, res.trajectory, sc.scene.cable.diameter)
    _check_arcs(res.plan, res.trajectory)
    _check_continuity(res.plan, res.trajectory)


def test_plan_deterministic():
    a = plan_scenario(random_scenario(11, n_slots=3))
    b = plan_scenario(random_scenario(11, n_slots=3))
    assert a.plan.to_dict() == b.plan.to_dict()
    np.testing.assert_array_equal(a.trajectory.position, b.trajectory.position)
