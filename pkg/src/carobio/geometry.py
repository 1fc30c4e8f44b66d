"""Fingernail/cable contact model and grasp-mode selection.

Coordinates follow the planar cross-section picture: the origin sits where
the inner fingernail arc meets the jaw, x points across the jaw gap and y
points up.  The inner arc centre is at ``(R_f, 0)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import InfeasibleGeometry, StrokeOutOfDomain, ZeroFriction

GRAVITY = 9.81


@dataclass(frozen=True)
class FingernailProfile:
    inner_radius: float
    outer_radius: float
    tip_height: float

    def __post_init__(self):
        if not (self.outer_radius > self.inner_radius > 0):
            raise ValueError("need outer_radius > inner_radius > 0")
        if self.tip_height <= 0:
            raise ValueError("tip_height must be positive")

    @property
    def arc_center_x(self) -> float:
        # Forced by the (R_f - d/2)^2 term of the force-stroke law.
        return self.inner_radius


@dataclass(frozen=True)
class CableSection:
    radius: float
    linear_density: float

    def __post_init__(self):
        if self.radius <= 0 or self.linear_density <= 0:
            raise ValueError("cable radius and linear density must be positive")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class GraspContactSolution:
    """Tangent contact between the inner arc and the cable cross-section."""

    stroke: float
    contact_point: tuple[float, float]
    cable_center: tuple[float, float]
    contact_angle: float
    contact_force: float
    lifted_weight: float


class GraspMode(str, enum.Enum):
    SGM = "SGM"
    TGM = "TGM"


@dataclass(frozen=True)
class ForceStrokeCurve:
    points: list[tuple[float, float]] = field(default_factory=list)
    rejected: list[float] = field(default_factory=list)


def valid_stroke_domain(profile: FingernailProfile, cable: CableSection) -> tuple[float, float]:
    """Open interval of strokes for which a tangent contact with y_Oc > 0 exists.

    ``|R_f - d/2| < R_f - R_cab``  gives  ``2 R_cab < d < 4 R_f - 2 R_cab``.
    """
    r_f, r_c = profile.inner_radius, cable.radius
    if r_f <= r_c:
        raise InfeasibleGeometry(
            f"inner radius {r_f} must exceed cable radius {r_c}"
        )
    return 2.0 * r_c, 4.0 * r_f - 2.0 * r_c


def _check_stroke(profile, cable, stroke):
    lo, hi = valid_stroke_domain(profile, cable)
    if not (lo < stroke < hi):
        raise StrokeOutOfDomain(f"stroke {stroke} outside ({lo}, {hi})")


def solve_contact(
    profile: FingernailProfile,
    cable: CableSection,
    stroke: float,
    lifted_length: float,
    gravity: float = GRAVITY,
) -> GraspContactSolution:
    """Closed-form contact point, contact angle and contact force for a stroke.

    Static friction at the fingernail is neglected, so the two symmetric
    contact forces carry the lifted weight through their vertical components.
    """
    _check_stroke(profile, cable, stroke)
    if lifted_length <= 0:
        raise ValueError("lifted_length must be positive")
    r_f, r_c = profile.inner_radius, cable.radius
    x_of = profile.arc_center_x
    gap = r_f - r_c
    x_oc = stroke / 2.0
    dx = x_oc - x_of
    y_oc = math.sqrt((gap - dx) * (gap + dx))
    # A lies on the ray from O_f through O_c, at distance R_f.
    scale = r_f / gap
    x_a = x_of + scale * dx
    y_a = scale * y_oc
    sin_theta = y_oc / gap
    theta = math.asin(min(sin_theta, 1.0))
    weight = cable.linear_density * lifted_length * gravity
    force = weight * gap / (2.0 * y_oc)
    return GraspContactSolution(
        stroke=stroke,
        contact_point=(x_a, y_a),
        cable_center=(x_oc, y_oc),
        contact_angle=theta,
        contact_force=force,
        lifted_weight=weight,
    )


def contact_force(
    profile: FingernailProfile,
    cable: CableSection,
    stroke: float,
    lifted_length: float,
    gravity: float = GRAVITY,
) -> float:
    return solve_contact(profile, cable, stroke, lifted_length, gravity).contact_force


def force_stroke_curve(
    profile: FingernailProfile,
    cable: CableSection,
    lifted_length: float,
    strokes,
    gravity: float = GRAVITY,
) -> ForceStrokeCurve:
    """Evaluate the force-stroke coupling at each stroke; invalid strokes are
    skipped and listed in ``rejected``."""
    points, rejected = [], []
    for d in strokes:
        try:
            sol = solve_contact(profile, cable, float(d), lifted_length, gravity)
        except StrokeOutOfDomain:
            rejected.append(float(d))
            continue
        points.append((float(d), sol.contact_force))
    return ForceStrokeCurve(points=points, rejected=rejected)


def parallel_gripper_min_force(mass: float, friction: float, gravity: float = GRAVITY) -> float:
    """Smallest squeeze force that holds ``mass`` between two flat pads."""
    if friction <= 0:
        raise ZeroFriction("friction coefficient must be positive")
    return mass * gravity / (2.0 * friction)


def fingernail_advantage(solution: GraspContactSolution, friction: float) -> bool:
    """True when the fingernail holds the same load with less force than a
    friction-only parallel grasp (``sin(theta) > mu``)."""
    advantage = math.sin(solution.contact_angle) > friction
    if advantage:
        n_p = solution.lifted_weight / (2.0 * friction)
        assert solution.contact_force < n_p
    return advantage


def select_mode(stroke: float, cable_diameter: float) -> GraspMode:
    if stroke < 0:
        raise ValueError("stroke must be non-negative")
    return GraspMode.SGM if stroke > cable_diameter else GraspMode.TGM
