import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carobio.errors import DegenerateDirection, DegeneratePolyline
from carobio.scene import CableState, SlotPose, SlotSpec, grasp_direction, resample_polyline
from oracles import polyline_length


def test_grasp_direction_right_angle():
    state = CableState(nodes=[[0, 0, 0], [1, 0, 0], [1, 1, 0]], fixed_end=[0, 0, 0])
    v = grasp_direction(state, 1)
    np.testing.assert_allclose(v, np.array([1, 1, 0]) / math.sqrt(2), atol=1e-15)


def test_grasp_direction_one_sided_at_ends():
    state = CableState(nodes=[[0, 0, 0], [1, 0, 0], [1, 1, 0]], fixed_end=[0, 0, 0])
    np.testing.assert_allclose(grasp_direction(state, 0), [1, 0, 0])
    np.testing.assert_allclose(grasp_direction(state, 2), [0, 1, 0])


def test_grasp_direction_degenerate():
    state = CableState(nodes=[[0, 0, 0], [1, 0, 0], [0, 0, 0]], fixed_end=[0, 0, 0])
    with pytest.raises(DegenerateDirection):
        grasp_direction(state, 1)


def test_resample_straight_line():
    state = resample_polyline([[0, 0, 0], [1, 0, 0]], 5)
    np.testing.assert_allclose(state.nodes[:, 0], [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    np.testing.assert_allclose(state.fixed_end, [0, 0, 0])


def test_resample_rejects_degenerate():
    with pytest.raises(DegeneratePolyline):
        resample_polyline([[0, 0, 0]], 5)
    with pytest.raises(DegeneratePolyline):
        resample_polyline([[0, 0, 0], [0, 0, 0]], 5)


def test_slot_thickness_from_circumradius():
    spec = SlotSpec(width=0.04, height=0.05, max_radius=0.025)
    assert spec.thickness == pytest.approx(2 * math.sqrt(0.025**2 - 0.02**2), rel=1e-12)
    with pytest.raises(ValueError):
        SlotSpec(width=0.04, height=0.05, max_radius=0.01)


def test_slot_axis_normalised_and_horizontal():
    pose = SlotPose(center=[0, 0, 0], axis=[3, 4, 0])
    np.testing.assert_allclose(pose.axis, [0.6, 0.8, 0])
    with pytest.raises(ValueError):
        SlotPose(center=[0, 0, 0], axis=[0, 0, 1])


def test_cable_state_is_read_only():
    state = CableState(nodes=np.zeros((3, 3)) + np.arange(3)[:, None], fixed_end=[0, 0, 0])
    with pytest.raises(ValueError):
        state.nodes[0, 0] = 1.0


points = st.lists(
    st.tuples(*[st.floats(min_value=-1, max_value=1)] * 3), min_size=2, max_size=8
).filter(lambda p: polyline_length(p) > 1e-3)


@given(points, st.integers(min_value=3, max_value=40))
def test_resample_spacing_uniform_on_polyline(pts, count):
    state = resample_polyline(pts, count)
    np.testing.assert_allclose(state.nodes[0], pts[0], atol=1e-12)
    np.testing.assert_allclose(state.nodes[-1], pts[-1], atol=1e-12)
    # chords never exceed the arclength step, and together never exceed the length
    step = polyline_length(pts) / (count - 1)
    assert np.all(state.segment_lengths() <= step + 1e-12)
    assert state.arclength() <= polyline_length(pts) + 1e-12
