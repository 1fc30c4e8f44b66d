import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def scenario_root() -> Path:
    return SCENARIOS


def bundled_scenario_files() -> list[Path]:
    return sorted(SCENARIOS.glob("*/*.json"))


def compact_scene(seed: int, n_slots: int):
    """Up to three desk slots in a 0.2 m box, with a short straight cable
    running below them.  Small enough to render at sub-millimetre pitch."""
    import numpy as np

    from carobio.scenarios import DESK_SLOT
    from carobio.scene import CableSpec, Scene, Slot, SlotPose, resample_polyline

    rng = np.random.default_rng(seed)
    centers = []
    while len(centers) < n_slots:
        c = rng.uniform([0.02, 0.03], [0.18, 0.18])
        if all(np.linalg.norm(c - p) > 0.06 for p in centers):
            centers.append(c)
    slots = tuple(
        Slot(DESK_SLOT, SlotPose(center=[c[0], c[1], DESK_SLOT.height / 2],
                                 axis=[np.cos(a), np.sin(a), 0.0]))
        for c, a in zip(centers, rng.uniform(-np.pi, np.pi, n_slots))
    )
    z = 0.002
    state = resample_polyline([[0.0, -0.03, z], [0.2, -0.03, z]], 20)
    return Scene(slots=slots, cable=CableSpec(0.2, 0.004), state=state)


def line_angle(a, b) -> float:
    """Angle between two undirected lines, accurate near zero."""
    import numpy as np

    a = np.asarray(a, float) / np.linalg.norm(a)
    b = np.asarray(b, float) / np.linalg.norm(b)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), abs(a @ b)))


def noisy_slot_points(slot, count: int, sigma: float, rng):
    """About ``count`` points on a pixel-like grid over the slot's top
    rectangle, plus isotropic Gaussian noise."""
    import numpy as np

    w, t = slot.spec.width, slot.spec.thickness
    n_v = max(1, round((count * t / w) ** 0.5))
    n_u = count // n_v
    a = (np.arange(n_u) + 0.5) / n_u - 0.5
    b = (np.arange(n_v) + 0.5) / n_v - 0.5
    aa, bb = np.meshgrid(a * w, b * t)
    u = slot.axis
    v = np.array([-u[1], u[0], 0.0])
    pts = slot.center + aa.reshape(-1, 1) * u + bb.reshape(-1, 1) * v
    return pts + rng.normal(0.0, sigma, size=pts.shape)


# One line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
