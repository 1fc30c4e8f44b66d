"""Grasp node selection by multi-weight frequency voting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoCandidates
from .scene import CableState, Scene, grasp_direction

N_WEIGHT_PAIRS = 50


@dataclass(frozen=True)
class GraspCandidate:
    index: int
    position: tuple[float, float, float]
    arclength: float
    distance: float
    torsion: float
    distance_norm: float = float("nan")
    torsion_norm: float = float("nan")


@dataclass(frozen=True)
class VoteResult:
    winners: tuple[int, ...]
    frequency: dict[int, int]
    final: int
    tie_break_used: bool
    candidates: tuple[GraspCandidate, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "final": self.final,
            "tie_break_used": self.tie_break_used,
            "winners": list(self.winners),
            "frequency": {str(k): v for k, v in sorted(self.frequency.items())},
            "candidates": [
                {
                    "index": c.index,
                    "arclength": c.arclength,
                    "distance": c.distance,
                    "torsion": c.torsion,
                    "distance_norm": c.distance_norm,
                    "torsion_norm": c.torsion_norm,
                }
                for c in self.candidates
            ],
        }


def node_arclength(i: int, count: int, total_length: float, convention: str = "segments") -> float:
    """Distance from the fixed end to node ``i`` (0 at the fixed end).

    ``segments`` divides the cable into ``count - 1`` equal pieces, which is the
    true arclength of a uniformly spaced chain.  ``nodes`` divides by the node
    count instead, i.e. the literal ``L_total / n * i`` with ``n = Q``.
    """
    if convention == "segments":
        return total_length * i / (count - 1)
    if convention == "nodes":
        return total_length * i / count
    raise ValueError(f"unknown convention {convention!r}")


def candidate_nodes(scene: Scene, state: CableState | None = None, convention: str = "segments") -> list[GraspCandidate]:
    state = scene.state if state is None else state
    s1 = scene.slots[0].center
    axis = scene.slots[0].axis
    reach = float(np.linalg.norm(state.fixed_end - s1))
    out = []
    for i in range(1, state.count - 1):
        length = node_arclength(i, state.count, scene.cable.total_length, convention)
        if not length < reach:
            continue
        p = state.nodes[i]
        v = grasp_direction(state, i)
        cos = float(np.clip(v @ axis, -1.0, 1.0))
        out.append(
            GraspCandidate(
                index=i,
                position=tuple(float(x) for x in p),
                arclength=length,
                distance=float(np.linalg.norm(p - s1)),
                torsion=math.acos(cos),
            )
        )
    if not out:
        raise NoCandidates(
            f"no interior node is closer (by arclength) to the fixed end than slot 1 ({reach:.4f} m)"
        )
    return out


def fold_torsion(theta: float) -> float:
    # The grasp direction is a line, not a ray.
    return min(theta, math.pi - theta)


def normalize_factors(candidates: list[GraspCandidate]) -> list[GraspCandidate]:
    if not candidates:
        raise NoCandidates("nothing to normalize")
    d = [c.distance for c in candidates]
    d_min, d_max = min(d), max(d)
    span = d_max - d_min
    out = []
    for c in candidates:
        d_norm = 1.0 if span == 0 else (d_max - c.distance) / span
        t_norm = 1.0 - fold_torsion(c.torsion) / (math.pi / 2)
        out.append(replace(c, distance_norm=d_norm, torsion_norm=t_norm))
    return out


def weight_pairs() -> list[tuple[float, float]]:
    """(w_D, w_theta) from (1, 0) down to (0.02, 0.98) in steps of 0.02."""
    return [((N_WEIGHT_PAIRS - k) / N_WEIGHT_PAIRS, k / N_WEIGHT_PAIRS) for k in range(N_WEIGHT_PAIRS)]


def vote(candidates: list[GraspCandidate]) -> VoteResult:
    if not candidates:
        raise NoCandidates("empty candidate list")
    order = sorted(candidates, key=lambda c: c.index)
    idx = np.array([c.index for c in order])
    dn = np.array([c.distance_norm for c in order])
    tn = np.array([c.torsion_norm for c in order])
    # Scores scaled by the pair count: integer weights keep exact ties exact.
    k = np.arange(N_WEIGHT_PAIRS, dtype=float)[:, None]
    scores = (N_WEIGHT_PAIRS - k) * dn[None, :] + k * tn[None, :]
    # argmax returns the first maximum, i.e. the lowest node index.
    winners = idx[np.argmax(scores, axis=1)]
    uniq, counts = np.unique(winners, return_counts=True)
    freq = {int(u): int(c) for u, c in zip(uniq, counts)}
    top = counts.max()
    tied = [int(u) for u, c in zip(uniq, counts) if c == top]
    tie_break_used = len(tied) > 1
    if tie_break_used:
        base = {c.index: 0.5 * c.distance_norm + 0.5 * c.torsion_norm for c in order}
        best = max(base[i] for i in tied)
        final = min(i for i in tied if base[i] == best)
    else:
        final = tied[0]
    return VoteResult(
        winners=tuple(int(w) for w in winners),
        frequency=freq,
        final=final,
        tie_break_used=tie_break_used,
        candidates=tuple(order),
    )


def select_grasp(scene: Scene, state: CableState | None = None, convention: str = "segments") -> VoteResult:
    return vote(normalize_factors(candidate_nodes(scene, state, convention)))
