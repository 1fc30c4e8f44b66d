import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carobio.errors import NoCandidates
from carobio.grasp_select import (
    GraspCandidate,
    candidate_nodes,
    fold_torsion,
    node_arclength,
    normalize_factors,
    select_grasp,
    vote,
    weight_pairs,
)
from carobio.scenarios import random_scenario
from carobio.scene import CableSpec, CableState, Scene, Slot, SlotPose, SlotSpec
from oracles import brute_force_vote


def cand(index, dn, tn, distance=0.0, torsion=0.0):
    return GraspCandidate(index=index, position=(0.0, 0.0, 0.0), arclength=0.0, distance=distance,
                          torsion=torsion, distance_norm=dn, torsion_norm=tn)


def test_weight_pair_examples():
    pairs = weight_pairs()
    assert len(pairs) == 50
    assert pairs[0] == (1.0, 0.0)
    assert pairs[25] == (0.5, 0.5)
    assert pairs[49] == pytest.approx((0.02, 0.98), abs=1e-15)
    assert all(a + b == pytest.approx(1.0) for a, b in pairs)


def test_vote_pure_extremes():
    res = vote([cand(3, 1.0, 0.0), cand(5, 0.0, 1.0)])
    # 25 pairs favour each; the even pair goes to the lower index.
    assert res.frequency == {3: 26, 5: 24}
    assert res.final == 3 and not res.tie_break_used


def test_vote_tie_break_by_even_score():
    # 2 and 9 both win 17 pairs; 9 has the higher even-weight score.
    res = vote([cand(5, 0.0, 0.75), cand(9, 0.5, 0.5), cand(2, 0.75, 0.0)])
    assert res.frequency == {2: 17, 9: 17, 5: 16}
    assert res.tie_break_used
    assert res.final == 9


def test_vote_two_way_tie_goes_to_lower_index():
    res = vote([cand(5, 1.0, 0.0), cand(3, 0.0, 1.0)])
    assert res.frequency == {3: 25, 5: 25}
    assert res.tie_break_used and res.final == 3


def test_vote_empty():
    with pytest.raises(NoCandidates):
        vote([])


def test_fold_torsion():
    assert fold_torsion(0.0) == 0.0
    assert fold_torsion(math.pi) == 0.0
    assert fold_torsion(2.0) == pytest.approx(math.pi - 2.0)


def test_node_arclength_conventions():
    assert node_arclength(0, 21, 1.0) == 0.0
    assert node_arclength(20, 21, 1.0) == 1.0
    assert node_arclength(10, 20, 1.0, "nodes") == 0.5
    with pytest.raises(ValueError):
        node_arclength(1, 5, 1.0, "other")


def test_normalize_constant_distance():
    out = normalize_factors([cand(1, 0, 0, distance=0.2, torsion=0.0), cand(2, 0, 0, distance=0.2, torsion=math.pi / 2)])
    assert [c.distance_norm for c in out] == [1.0, 1.0]
    assert [c.torsion_norm for c in out] == [1.0, 0.0]


def _line_scene(count=11, slot_x=0.5, offset=0.1):
    nodes = np.column_stack([np.linspace(0, 1, count), np.full(count, offset), np.zeros(count)])
    slot = Slot(SlotSpec(0.04, 0.05, 0.0215), SlotPose(center=[slot_x, 0, 0.025], axis=[1, 0, 0]))
    return Scene(slots=(slot,), cable=CableSpec(1.0, 0.004), state=CableState(nodes, nodes[0]))


def test_candidate_nodes_limited_by_reach():
    scene = _line_scene()
    cands = candidate_nodes(scene)
    reach = np.linalg.norm(scene.state.fixed_end - scene.slots[0].center)
    assert [c.index for c in cands] == [i for i in range(1, 10) if i / 10 < reach]
    assert all(c.torsion == pytest.approx(0.0, abs=1e-12) for c in cands)


def test_candidate_nodes_none():
    scene = _line_scene(slot_x=0.02, offset=0.05)
    with pytest.raises(NoCandidates):
        candidate_nodes(scene)


def test_select_grasp_on_line_prefers_node_nearest_slot():
    res = select_grasp(_line_scene())
    assert res.final == 5


# -- properties ---------------------------------------------------------------------

grid = st.integers(min_value=0, max_value=4).map(lambda k: k / 4)
unit = st.one_of(grid, st.floats(min_value=0.0, max_value=1.0))
cand_sets = st.lists(st.tuples(unit, unit), min_size=1, max_size=12).flatmap(
    lambda vals: st.permutations(range(1, 40)).map(
        lambda perm: [cand(perm[i], dn, tn) for i, (dn, tn) in enumerate(vals)]
    )
)


@given(cand_sets)
def test_vote_matches_brute_force(cands):
    res = vote(cands)
    ref = brute_force_vote([(c.index, c.distance_norm, c.torsion_norm) for c in cands])
    assert list(res.winners) == ref["winners"]
    assert res.frequency == ref["frequency"]
    assert res.final == ref["final"]
    assert res.tie_break_used == ref["tie_break_used"]


@given(cand_sets)
def test_strictly_dominated_never_wins(cands):
    res = vote(cands)
    for a in cands:
        for b in cands:
            if b.distance_norm > a.distance_norm and b.torsion_norm > a.torsion_norm:
                assert a.index not in res.frequency


@given(st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0.0, math.pi)), min_size=2, max_size=12),
       st.integers(min_value=-6, max_value=6))
def test_scale_invariance(raw, power):
    base = [cand(i + 1, 0, 0, distance=d, torsion=t) for i, (d, t) in enumerate(raw)]
    scaled = [cand(c.index, 0, 0, distance=c.distance * 2.0**power, torsion=c.torsion) for c in base]
    a, b = vote(normalize_factors(base)), vote(normalize_factors(scaled))
    assert a.winners == b.winners and a.final == b.final


@given(st.integers(min_value=0, max_value=500))
def test_scene_vote_final_is_candidate(seed):
    sc = random_scenario(seed)
    res = select_grasp(sc.scene)
    assert res.final in {c.index for c in res.candidates}
    assert sum(res.frequency.values()) == 50


def _pointing_scene(total_length):
    # Straight cable from the fixed end toward a slot 1 m away, 9 nodes.
    nodes = np.column_stack([np.linspace(0, 0.8, 9), np.zeros(9), np.zeros(9)])
    slot = Slot(SlotSpec(0.04, 0.05, 0.0215), SlotPose(center=[1.0, 0, 0], axis=[1, 0, 0]))
    return Scene(slots=(slot,), cable=CableSpec(total_length, 0.004), state=CableState(nodes, nodes[0]))


def test_candidate_filter_examples():
    assert [c.index for c in candidate_nodes(_pointing_scene(0.8))] == list(range(1, 8))
    assert [c.index for c in candidate_nodes(_pointing_scene(2.0))] == [1, 2, 3]


def test_perpendicular_grasp_has_zero_torsion_score():
    (c,) = normalize_factors([cand(1, 0, 0, distance=0.1, torsion=math.pi / 2)])
    assert c.torsion_norm == 0.0
