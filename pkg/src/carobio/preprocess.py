"""Move the perceived cable clear of the slot exclusion zones before grasping."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import MaxIterationsExceeded, NoAnchorAvailable
from .scene import CableState, Scene

log = logging.getLogger(__name__)

CLEARANCE_SLACK = 1e-3
MAX_ITERATIONS = 50


@dataclass(frozen=True, eq=False)
class CollisionCircle:
    center: np.ndarray
    radius: float
    slot_index: int = 0

    def horizontal_distance(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.atleast_2d(points)[:, :2] - self.center[:2], axis=1)


@dataclass(frozen=True, eq=False)
class AdjustmentMove:
    anchor: int
    vector: np.ndarray
    iteration: int
    slot_index: int = 0
    coherence_sigma: float = 2.0

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "vector": [float(v) for v in self.vector],
            "iteration": self.iteration,
            "slot_index": self.slot_index,
            "coherence_sigma": self.coherence_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdjustmentMove":
        return cls(
            anchor=int(d["anchor"]),
            vector=np.asarray(d["vector"], dtype=float),
            iteration=int(d["iteration"]),
            slot_index=int(d.get("slot_index", 0)),
            coherence_sigma=float(d.get("coherence_sigma", 2.0)),
        )


@dataclass(frozen=True)
class Violation:
    circle: CollisionCircle
    node: int
    distance: float


def collision_circles(scene: Scene) -> list[CollisionCircle]:
    r_g = scene.gripper.outer_profile_radius
    circles = []
    for j, slot in enumerate(scene.slots):
        c = slot.center.copy()
        c[2] = scene.table_z
        circles.append(CollisionCircle(center=c, radius=slot.spec.max_radius + r_g, slot_index=j))
    return circles


def find_violation(state: CableState, circles, slack: float = 0.0) -> Violation | None:
    """Closest (circle, node) pair with the node inside ``radius - slack``."""
    best = None
    for circle in circles:
        d = circle.horizontal_distance(state.nodes)
        inside = np.flatnonzero(d < circle.radius - slack)
        if len(inside) == 0:
            continue
        i = int(inside[np.argmin(d[inside])])
        if best is None or d[i] < best.distance:
            best = Violation(circle=circle, node=i, distance=float(d[i]))
    return best


def plan_adjustment(
    state: CableState, violation: Violation, iteration: int = 0, coherence_sigma: float | None = None
) -> AdjustmentMove:
    circle = violation.circle
    i = violation.node
    d = circle.horizontal_distance(state.nodes)
    outside = np.flatnonzero(d >= circle.radius)
    if len(outside) == 0:
        raise NoAnchorAvailable(f"every node lies inside the zone of slot {circle.slot_index}")
    gap = np.abs(outside - i)
    nearest = outside[gap == gap.min()]
    anchor = int(nearest.max())  # ties go toward the loose end

    direction = state.nodes[i, :2] - circle.center[:2]
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        # Node sits on the slot centre: push along the local cable normal.
        lo, hi = max(i - 1, 0), min(i + 1, state.count - 1)
        t = state.nodes[hi, :2] - state.nodes[lo, :2]
        direction = np.array([-t[1], t[0]])
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            direction, norm = np.array([1.0, 0.0]), 1.0
    v = np.zeros(3)
    v[:2] = circle.radius * direction / norm
    sigma = state.count / 10 if coherence_sigma is None else coherence_sigma
    return AdjustmentMove(anchor=anchor, vector=v, iteration=iteration, slot_index=circle.slot_index, coherence_sigma=sigma)


def coherence_weights(count: int, anchor: float, sigma: float) -> np.ndarray:
    j = np.arange(count, dtype=float)
    if np.isinf(sigma):
        return np.ones(count)
    return np.exp(-((j - anchor) ** 2) / (2.0 * sigma**2))


def project_lengths(nodes: np.ndarray, fixed_end: np.ndarray, rest: float) -> np.ndarray:
    """Follow-the-leader pass from the fixed end restoring every segment to ``rest``."""
    out = nodes.copy()
    out[0] = fixed_end
    for j in range(1, len(out)):
        d = out[j] - out[j - 1]
        n = np.linalg.norm(d)
        if n < 1e-15:
            d = nodes[j] - nodes[j - 1]
            n = np.linalg.norm(d)
            if n < 1e-15:
                d, n = np.array([1.0, 0.0, 0.0]), 1.0
        out[j] = out[j - 1] + d * (rest / n)
    return out


def apply_adjustment(
    state: CableState,
    move: AdjustmentMove,
    rest_spacing: float,
    coherence_sigma: float | None = None,
) -> CableState:
    """Gaussian-weighted translation around the anchor, then length projection."""
    sigma = move.coherence_sigma if coherence_sigma is None else coherence_sigma
    w = coherence_weights(state.count, move.anchor, sigma)
    moved = state.nodes + w[:, None] * move.vector[None, :]
    return state.with_nodes(project_lengths(moved, state.fixed_end, rest_spacing))


def violation_depth(state: CableState, circles) -> float:
    total = 0.0
    for c in circles:
        total += float(np.maximum(0.0, c.radius - c.horizontal_distance(state.nodes)).sum())
    return total


def preprocess_cable(
    scene: Scene,
    max_iterations: int = MAX_ITERATIONS,
    slack: float = CLEARANCE_SLACK,
    coherence_sigma: float | None = None,
) -> tuple[CableState, list[AdjustmentMove]]:
    circles = collision_circles(scene)
    rest = scene.rest_spacing
    # Chords of a resampled chain are short at corners; start from rest spacing.
    state = scene.state.with_nodes(project_lengths(np.asarray(scene.state.nodes), scene.state.fixed_end, rest))
    moves: list[AdjustmentMove] = []
    for it in range(max_iterations + 1):
        violation = find_violation(state, circles, slack)
        if violation is None:
            return state, moves
        if it == max_iterations:
            break
        move = plan_adjustment(state, violation, it, coherence_sigma)
        state = apply_adjustment(state, move, rest)
        moves.append(move)
        log.debug("adjust %d: anchor %d, slot %d", it, move.anchor, move.slot_index)
    raise MaxIterationsExceeded(
        f"cable still inside an exclusion zone after {max_iterations} adjustments"
    )
