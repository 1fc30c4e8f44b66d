"""Task configuration: slots, cable, gripper.

Node indices are 0-based; node 0 sits at the fixed end and node Q-1 is the
loose end.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateDirection, DegeneratePolyline
from .geometry import CableSection, FingernailProfile

DEFAULT_NODE_COUNT = 20


class Rigidity(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class SlotSpec:
    """Slot block: ``width`` is its extent along the slot axis, ``height`` the
    post height, ``max_radius`` the circumscribed footprint radius."""

    width: float
    height: float
    max_radius: float

    def __post_init__(self):
        if min(self.width, self.height, self.max_radius) <= 0:
            raise ValueError("slot dimensions must be positive")
        if self.max_radius < self.width / 2:
            raise ValueError("max_radius must be at least width/2")

    @property
    def thickness(self) -> float:
        """Footprint extent across the axis, implied by the circumscribed radius."""
        return 2.0 * math.sqrt(max(self.max_radius**2 - (self.width / 2) ** 2, 0.0))


@dataclass(frozen=True, eq=False)
class SlotPose:
    center: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        a = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if n == 0 or np.hypot(a[0], a[1]) < 1e-9:
            raise ValueError("slot axis needs a nonzero horizontal component")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axis", a / n)


@dataclass(frozen=True, eq=False)
class Slot:
    spec: SlotSpec
    pose: SlotPose

    @property
    def center(self) -> np.ndarray:
        return self.pose.center

    @property
    def axis(self) -> np.ndarray:
        return self.pose.axis

    @property
    def top_z(self) -> float:
        return float(self.pose.center[2] + self.spec.height / 2)


@dataclass(frozen=True)
class CableSpec:
    total_length: float
    diameter: float
    linear_density: float = 0.05
    rigidity: Rigidity = Rigidity.MEDIUM

    def __post_init__(self):
        if self.total_length <= 0 or self.diameter <= 0:
            raise ValueError("cable length and diameter must be positive")
        if self.linear_density <= 0:
            raise ValueError("linear density must be positive")
        object.__setattr__(self, "rigidity", Rigidity(self.rigidity))

    @property
    def section(self) -> CableSection:
        return CableSection(radius=self.diameter / 2, linear_density=self.linear_density)


@dataclass(frozen=True, eq=False)
class CableState:
    nodes: np.ndarray
    fixed_end: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3 or len(nodes) < 3:
            raise ValueError("cable state needs at least 3 nodes in R^3")
        nodes.setflags(write=False)
        fixed = np.array(self.fixed_end, dtype=float).reshape(3)
        fixed.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "fixed_end", fixed)

    @property
    def count(self) -> int:
        return len(self.nodes)

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.nodes, axis=0), axis=1)

    def arclength(self) -> float:
        return float(self.segment_lengths().sum())

    def with_nodes(self, nodes) -> "CableState":
        return CableState(nodes=nodes, fixed_end=self.fixed_end)


@dataclass(frozen=True)
class GripperSpec:
    body_width: float = 0.03
    fingernail_height: float = 0.02
    outer_profile_radius: float = 0.06
    stroke_range: tuple[float, float] = (0.0, 0.14)
    profile: FingernailProfile = field(
        default_factory=lambda: FingernailProfile(0.015, 0.03, 0.02)
    )

    def __post_init__(self):
        if min(self.body_width, self.fingernail_height, self.outer_profile_radius) <= 0:
            raise ValueError("gripper dimensions must be positive")
        lo, hi = self.stroke_range
        if not (0 <= lo < hi):
            raise ValueError("stroke_range must satisfy 0 <= lo < hi")


@dataclass(frozen=True, eq=False)
class Scene:
    slots: tuple[Slot, ...]
    cable: CableSpec
    state: CableState
    gripper: GripperSpec = field(default_factory=GripperSpec)
    table_z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if not self.slots:
            raise ValueError("scene needs at least one slot")

    @property
    def rest_spacing(self) -> float:
        return self.cable.total_length / (self.state.count - 1)

    def with_state(self, state: CableState) -> "Scene":
        return replace(self, state=state)


def grasp_direction(state: CableState, i: int) -> np.ndarray:
    """Unit tangent at node ``i``: central difference inside, one-sided at the ends."""
    n = state.count
    if not 0 <= i < n:
        raise IndexError(i)
    lo = max(i - 1, 0)
    hi = min(i + 1, n - 1)
    v = state.nodes[hi] - state.nodes[lo]
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise DegenerateDirection(f"nodes around {i} coincide")
    return v / norm


def resample_polyline(points, count: int = DEFAULT_NODE_COUNT, fixed_end=None) -> CableState:
    """Place ``count`` nodes at uniform arclength along a polyline."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
        raise DegeneratePolyline("need at least two 3-D points")
    if count < 3:
        raise ValueError("count must be at least 3")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] <= 0:
        raise DegeneratePolyline("polyline has zero length")
    targets = np.linspace(0.0, cum[-1], count)
    nodes = np.column_stack([np.interp(targets, cum, pts[:, k]) for k in range(3)])
    return CableState(nodes=nodes, fixed_end=pts[0] if fixed_end is None else fixed_end)
