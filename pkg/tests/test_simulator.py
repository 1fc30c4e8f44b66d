import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carobio.errors import CableNotNearSlot
from carobio.pipeline import PipelineConfig, plan_scenario, run_scenario
from carobio.scenarios import load_scenario
from carobio.scene import CableState, Slot, SlotPose, SlotSpec
from carobio.simulator import (
    Outcome,
    SimParams,
    check_slot_pass,
    detect_fold,
    detect_misalignment,
    execute,
    interior_angles,
    misalignment_angle,
    relax,
)
from conftest import SCENARIOS

PARAMS = SimParams()


def _state(points):
    pts = np.asarray(points, dtype=float)
    return CableState(pts, pts[0])


def _bent(angle_deg, arm=0.05):
    a = math.radians(angle_deg)
    return _state([[-arm, 0, 0], [0, 0, 0], [-arm * math.cos(a), arm * math.sin(a), 0]])


def test_fold_examples():
    assert not detect_fold(_state([[0, 0, 0], [0.1, 0, 0], [0.2, 0, 0]]), PARAMS)
    assert detect_fold(_bent(10), PARAMS)
    assert not detect_fold(_bent(90), PARAMS)


def test_interior_angle_of_straight_chain():
    np.testing.assert_allclose(interior_angles(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]])), [math.pi])


def _slot(axis=(1, 0, 0)):
    return Slot(SlotSpec(0.04, 0.05, 0.0215), SlotPose(center=[0, 0, 0.025], axis=axis))


def _through(angle_deg, z=0.02):
    a = math.radians(angle_deg)
    d = np.array([math.cos(a), math.sin(a), 0.0])
    return _state([p * d + [0, 0, z] for p in np.linspace(-0.1, 0.1, 21)])


def test_misalignment_threshold_is_exclusive():
    assert misalignment_angle(_through(44), _slot()) == pytest.approx(math.radians(44), abs=1e-12)
    assert not detect_misalignment(_through(44), _slot(), PARAMS)
    assert detect_misalignment(_through(46), _slot(), PARAMS)
    on_threshold = SimParams(misalign_threshold=misalignment_angle(_through(45), _slot()))
    assert not detect_misalignment(_through(45), _slot(), on_threshold)


def test_misalignment_is_sign_free():
    assert misalignment_angle(_through(180 - 30), _slot()) == pytest.approx(math.radians(30), abs=1e-12)


def test_cable_far_from_slot():
    with pytest.raises(CableNotNearSlot):
        misalignment_angle(_state([[1, 1, 0], [1.1, 1, 0], [1.2, 1, 0]]), _slot())


def test_slot_pass_window():
    assert check_slot_pass(_through(0), _slot(), 0.004)
    # above the slot top
    assert not check_slot_pass(_through(0, z=0.08), _slot(), 0.004)
    # running along the slot face, never through the opening
    assert not check_slot_pass(_through(90, z=0.02).with_nodes(_through(90).nodes + [0.05, 0, 0]), _slot(), 0.004)


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(fold_angle_threshold=0.0)
    with pytest.raises(ValueError):
        SimParams(projection_iterations=0)


@settings(max_examples=30)
@given(st.tuples(st.floats(-0.1, 0.1), st.floats(-0.1, 0.1), st.floats(0.0, 0.1)), st.sampled_from([0.0, 0.3, 0.8]))
def test_relax_pins_exactly_and_keeps_length(target, bend):
    n, rest = 21, 0.01
    state = _state(np.column_stack([np.arange(n) * rest, np.zeros(n), np.full(n, 0.002)]))
    grip = np.array([0.1, 0.0, 0.002]) + np.array(target)
    res = relax(state, [(0, state.nodes[0]), (10, grip)], PARAMS, rest, bend, cable_diameter=0.004, iterations=200)
    nodes = res.state.nodes
    assert np.linalg.norm(nodes[10] - grip) <= 1e-9
    np.testing.assert_array_equal(nodes[0], state.nodes[0])
    assert np.all(nodes[:, 2] >= 0.002 - 1e-12)
    seg = np.linalg.norm(np.diff(nodes[10:], axis=0), axis=1)
    np.testing.assert_allclose(seg, rest, rtol=PARAMS.stretch_tol + 1e-9)


def test_relax_rejects_bad_pins():
    state = _state([[0, 0, 0], [0.01, 0, 0], [0.02, 0, 0]])
    with pytest.raises(ValueError):
        relax(state, [(0, [0, 0, 0]), (1, [0, 0, 0]), (2, [0, 0, 0])], PARAMS, 0.01, 0.3)
    with pytest.raises(IndexError):
        relax(state, [(5, [0, 0, 0])], PARAMS, 0.01, 0.3)
    with pytest.raises(ValueError):
        relax(state, [(1, [np.nan, 0, 0])], PARAMS, 0.01, 0.3)


def test_free_cable_settles_on_table():
    state = _state(np.column_stack([np.arange(11) * 0.01, np.zeros(11), np.full(11, 0.05)]))
    res = relax(state, [(0, [0, 0, 0.002])], PARAMS, 0.01, 0.3, cable_diameter=0.004, iterations=2000)
    assert np.all(res.state.nodes[:, 2] >= 0.002 - 1e-12)
    assert res.state.nodes[-1, 2] < 0.01


def _example(name):
    return load_scenario(SCENARIOS / "examples" / f"{name}.json")


def test_easy_scenario_passes():
    res = run_scenario(_example("easy_k2_medium"))
    assert res.sim.outcomes == [Outcome.PASSED, Outcome.PASSED]


def test_low_rigidity_scenario_folds():
    res = run_scenario(_example("low_rigidity"))
    assert Outcome.FOLDED in res.sim.outcomes


def test_large_axis_change_misaligns():
    res = run_scenario(_example("large_axis_change"))
    assert res.sim.outcomes[-1] is Outcome.MISALIGNED
    assert Outcome.FOLDED not in res.sim.outcomes


def test_execute_deterministic_and_frames():
    sc = _example("easy_k2_medium")
    planned = plan_scenario(sc)
    a = execute(planned.trajectory, sc.scene, PARAMS, seed=sc.seed, dump_frames=True)
    b = execute(planned.trajectory, sc.scene, PARAMS, seed=sc.seed)
    assert a.to_dict() == b.to_dict()
    np.testing.assert_array_equal(a.final_state.nodes, b.final_state.nodes)
    assert b.frames is None and len(a.frames) >= len(planned.trajectory) // 25


def test_execute_stops_at_first_failure():
    res = run_scenario(_example("large_axis_change"))
    checks = [e for e in res.sim.events if e["event"] == "slot_check"]
    assert len(checks) == len(res.sim.outcomes)
    sc = load_scenario(SCENARIOS / "acceptance" / "stiff-nylon-rope-14mm-medium-s1018.json")
    res = run_scenario(sc)
    assert res.sim.outcomes == [Outcome.FOLDED, Outcome.NOT_REACHED]


def test_grasp_event_logged_once():
    res = run_scenario(_example("easy_k2_medium"), PipelineConfig())
    grasps = [e for e in res.sim.events if e["event"] == "grasp"]
    assert len(grasps) == 1
    assert grasps[0]["mode"] == "SGM"


def test_overstretched_pins_flag_tension():
    n, rest = 11, 0.01
    state = _state(np.column_stack([np.arange(n) * rest, np.zeros(n), np.full(n, 0.002)]))
    res = relax(state, [(0, state.nodes[0]), (10, [0.2, 0, 0.002])], PARAMS, rest, 0.3, cable_diameter=0.004)
    assert not res.converged
    assert res.tension > 1.0
