"""Synthetic top-down depth sensing and geometric scene recovery.

The renderer is an orthographic camera looking straight down.  Pixel (r, c)
has its centre at ``origin + (c, r) * pitch`` in world x/y.  Depth values are
box-filtered over each pixel footprint, so pixels straddling a slot edge read
an intermediate depth, as a real time-of-flight sensor would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .errors import (
    AllPointsDiscarded,
    AmbiguousTopology,
    DegenerateCovariance,
    NoRegionFound,
)
from .scene import CableState, Scene, Slot, SlotPose, resample_polyline

CAMERA_HEIGHT = 1.0


@dataclass
class DepthGrid:
    depth: np.ndarray
    pitch: float
    origin: tuple[float, float]
    camera_z: float
    table_z: float = 0.0
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        if self.mask is None:
            self.mask = np.zeros(self.depth.shape, dtype=bool)
        if self.mask.shape != self.depth.shape:
            raise ValueError("mask must match depth dimensions")

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @property
    def table_depth(self) -> float:
        return self.camera_z - self.table_z

    def pixel_xy(self) -> tuple[np.ndarray, np.ndarray]:
        h, w = self.depth.shape
        xs = self.origin[0] + np.arange(w) * self.pitch
        ys = self.origin[1] + np.arange(h) * self.pitch
        return np.meshgrid(xs, ys)


@dataclass
class PointCloud:
    points: np.ndarray
    label: str = "cable"
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if len(self.weights) != len(self.points):
                raise ValueError("weights must match points")

    def __len__(self):
        return len(self.points)


@dataclass
class PerceivedScene:
    slot_poses: list[SlotPose]
    state: CableState
    grid: DepthGrid = field(repr=False)

    def apply_to(self, scene: Scene) -> Scene:
        """Scene with slot poses and cable state replaced by the perceived ones."""
        slots = tuple(Slot(s.spec, p) for s, p in zip(scene.slots, self.slot_poses))
        return Scene(
            slots=slots,
            cable=scene.cable,
            state=self.state,
            gripper=scene.gripper,
            table_z=scene.table_z,
        )


# -- rendering -------------------------------------------------------------


def _slot_polygon(slot: Slot) -> shapely.Polygon:
    c = slot.center[:2]
    u = slot.axis[:2] / np.linalg.norm(slot.axis[:2])
    v = np.array([-u[1], u[0]])
    hl, ht = slot.spec.width / 2, slot.spec.thickness / 2
    corners = [c + a * hl * u + b * ht * v for a, b in ((1, 1), (-1, 1), (-1, -1), (1, -1))]
    return shapely.Polygon(corners)


def _scene_bounds(scene: Scene, margin: float):
    pts = [scene.state.nodes[:, :2], scene.state.fixed_end[None, :2]]
    for slot in scene.slots:
        pts.append(np.asarray(_slot_polygon(slot).exterior.coords))
    allp = np.vstack(pts)
    return allp.min(axis=0) - margin, allp.max(axis=0) + margin


def render_depth(
    scene: Scene,
    noise_sigma: float = 0.0,
    seed: int | None = 0,
    pitch: float = 0.001,
    margin: float = 0.03,
    camera_height: float = CAMERA_HEIGHT,
    cable_nodes: np.ndarray | None = None,
) -> DepthGrid:
    """Render slots as raised prisms and the cable as a tube lying on the table."""
    lo, hi = _scene_bounds(scene, margin)
    x0 = math.floor(lo[0] / pitch) * pitch
    y0 = math.floor(lo[1] / pitch) * pitch
    w = int(math.ceil((hi[0] - x0) / pitch)) + 1
    h = int(math.ceil((hi[1] - y0) / pitch)) + 1
    z0 = scene.table_z
    height = np.full((h, w), z0)

    for slot in scene.slots:
        poly = _slot_polygon(slot)
        bx0, by0, bx1, by1 = poly.bounds
        c_lo = max(int(math.floor((bx0 - x0) / pitch)) - 1, 0)
        c_hi = min(int(math.ceil((bx1 - x0) / pitch)) + 1, w - 1)
        r_lo = max(int(math.floor((by0 - y0) / pitch)) - 1, 0)
        r_hi = min(int(math.ceil((by1 - y0) / pitch)) + 1, h - 1)
        cols = np.arange(c_lo, c_hi + 1)
        rows = np.arange(r_lo, r_hi + 1)
        cx, cy = np.meshgrid(x0 + cols * pitch, y0 + rows * pitch)
        half = pitch / 2
        boxes = shapely.box(cx - half, cy - half, cx + half, cy + half)
        coverage = shapely.area(shapely.intersection(poly, boxes)) / pitch**2
        top = z0 + slot.spec.height
        sub = height[r_lo : r_hi + 1, c_lo : c_hi + 1]
        np.maximum(sub, z0 + np.clip(coverage, 0.0, 1.0) * (top - z0), out=sub)

    nodes = scene.state.nodes if cable_nodes is None else np.asarray(cable_nodes)
    radius = scene.cable.diameter / 2
    cable_top = np.full((h, w), -np.inf)
    for a, b in zip(nodes[:-1], nodes[1:]):
        bx0, by0 = np.minimum(a[:2], b[:2]) - radius
        bx1, by1 = np.maximum(a[:2], b[:2]) + radius
        c_lo = max(int(math.floor((bx0 - x0) / pitch)), 0)
        c_hi = min(int(math.ceil((bx1 - x0) / pitch)), w - 1)
        r_lo = max(int(math.floor((by0 - y0) / pitch)), 0)
        r_hi = min(int(math.ceil((by1 - y0) / pitch)), h - 1)
        if c_lo > c_hi or r_lo > r_hi:
            continue
        cx, cy = np.meshgrid(x0 + np.arange(c_lo, c_hi + 1) * pitch, y0 + np.arange(r_lo, r_hi + 1) * pitch)
        ab = b[:2] - a[:2]
        denom = float(ab @ ab)
        t = np.zeros_like(cx) if denom == 0 else np.clip(((cx - a[0]) * ab[0] + (cy - a[1]) * ab[1]) / denom, 0, 1)
        dx = cx - (a[0] + t * ab[0])
        dy = cy - (a[1] + t * ab[1])
        r2 = dx * dx + dy * dy
        zc = a[2] + t * (b[2] - a[2])
        surf = np.where(r2 < radius**2, zc + np.sqrt(np.maximum(radius**2 - r2, 0.0)), -np.inf)
        sub = cable_top[r_lo : r_hi + 1, c_lo : c_hi + 1]
        np.maximum(sub, surf, out=sub)

    mask = cable_top > height
    height = np.where(mask, cable_top, height)
    camera_z = z0 + camera_height
    depth = camera_z - height
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        depth = depth + rng.normal(0.0, noise_sigma, size=depth.shape)
    return DepthGrid(depth=depth, pitch=pitch, origin=(x0, y0), camera_z=camera_z, table_z=z0, mask=mask)


def smooth_depth(grid: DepthGrid, kernel_sigma: float) -> DepthGrid:
    if kernel_sigma < 0:
        raise ValueError("kernel_sigma must be non-negative")
    depth = grid.depth.copy() if kernel_sigma == 0 else ndimage.gaussian_filter(grid.depth, kernel_sigma, mode="nearest")
    return DepthGrid(depth=depth, pitch=grid.pitch, origin=grid.origin, camera_z=grid.camera_z, table_z=grid.table_z, mask=grid.mask.copy())


# -- slots -------------------------------------------------------------------


def slot_regions(grid: DepthGrid, depth_threshold: float, min_pixels: int = 4) -> list[PointCloud]:
    """Connected regions shallower than ``depth_threshold``, one cloud per slot.

    Each region is grown by one pixel so that partially covered boundary
    pixels contribute, weighted by their height fraction.  Points are placed
    on the estimated top surface of the region.
    """
    raised = (grid.depth < depth_threshold) & ~grid.mask
    labels, n = ndimage.label(raised, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        raise NoRegionFound(f"no pixel shallower than {depth_threshold}")
    X, Y = grid.pixel_xy()
    heights = grid.table_depth - grid.depth
    clouds = []
    for k in range(1, n + 1):
        core = labels == k
        if core.sum() < min_pixels:
            continue
        h_est = float(np.median(heights[core]))
        grown = ndimage.binary_dilation(core, structure=np.ones((3, 3), dtype=bool)) & ~grid.mask
        weights = np.clip(heights[grown] / h_est, 0.0, 1.0)
        keep = weights > 0
        pts = np.column_stack([X[grown][keep], Y[grown][keep], np.full(int(keep.sum()), grid.table_z + h_est)])
        clouds.append(PointCloud(points=pts, label=f"slot_{len(clouds)}", weights=weights[keep]))
    if not clouds:
        raise NoRegionFound("all raised regions were too small")
    return clouds


def estimate_slot_pose(cloud: PointCloud) -> SlotPose:
    """Centroid plus principal covariance eigenvector, sign-normalised."""
    pts = cloud.points
    if len(pts) < 3:
        raise DegenerateCovariance("need at least three points")
    w = np.ones(len(pts)) if cloud.weights is None else cloud.weights
    w = w / w.sum()
    center = w @ pts
    d = pts - center
    cov = (d * w[:, None]).T @ d
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 1e-18:
        raise DegenerateCovariance("points are coincident")
    axis = evecs[:, -1]
    axis = _sign_normalise(axis)
    return SlotPose(center=center, axis=axis)


def _sign_normalise(axis: np.ndarray) -> np.ndarray:
    if axis[0] < -1e-12 or (abs(axis[0]) <= 1e-12 and axis[1] < 0):
        return -axis
    return axis


def perceive_slots(grid: DepthGrid, scene: Scene) -> list[SlotPose]:
    """Slot poses in routing order, matched to the nominal slots of ``scene``.

    The slot count comes from the scenario; the depth threshold sits halfway
    up the shortest slot.
    """
    h_min = min(s.spec.height for s in scene.slots)
    clouds = slot_regions(grid, grid.table_depth - h_min / 2)
    poses = []
    for cloud in clouds:
        pose = estimate_slot_pose(cloud)
        h_est = pose.center[2] - grid.table_z
        poses.append(SlotPose(center=pose.center - np.array([0, 0, h_est / 2]), axis=pose.axis))
    matched = []
    free = list(range(len(poses)))
    for slot in scene.slots:
        if not free:
            raise NoRegionFound("fewer slot regions than slots in the scenario")
        best = min(free, key=lambda i: np.linalg.norm(poses[i].center[:2] - slot.center[:2]))
        free.remove(best)
        matched.append(poses[best])
    return matched


# -- cable -------------------------------------------------------------------


def cable_cloud(grid: DepthGrid) -> PointCloud:
    X, Y = grid.pixel_xy()
    m = grid.mask
    z = grid.camera_z - grid.depth[m]
    return PointCloud(points=np.column_stack([X[m], Y[m], z]), label="cable")


def voxel_downsample(cloud: PointCloud, voxel: float) -> PointCloud:
    """Replace the points in each occupied voxel by their mean."""
    keys = np.floor(cloud.points / voxel).astype(np.int64)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inverse, cloud.points)
    return PointCloud(points=sums / counts[:, None], label=cloud.label)


def _radius_graph(points: np.ndarray, radius: float):
    tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    n = len(points)
    if len(pairs) == 0:
        return coo_matrix((n, n)).tocsr()
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    d = np.maximum(d, 1e-12)
    g = coo_matrix((d, (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return (g + g.T).tocsr()


def cluster_points(cloud: PointCloud, link_radius: float, min_cluster: int = 5) -> list[PointCloud]:
    """Single-linkage components at ``link_radius``; small components dropped.

    Clusters are returned largest first, ties ordered by their lexicographically
    smallest point so the output does not depend on input order.
    """
    if link_radius <= 0:
        raise ValueError("link_radius must be positive")
    pts = cloud.points
    if len(pts) == 0:
        raise AllPointsDiscarded("empty cloud")
    n_comp, labels = connected_components(_radius_graph(pts, link_radius), directed=False)
    clusters = []
    for k in range(n_comp):
        idx = np.flatnonzero(labels == k)
        if len(idx) < min_cluster:
            continue
        sub = pts[idx]
        w = None if cloud.weights is None else cloud.weights[idx]
        clusters.append(PointCloud(points=sub, label=cloud.label, weights=w))
    if not clusters:
        raise AllPointsDiscarded(f"no cluster reaches {min_cluster} points")
    clusters.sort(key=lambda c: (-len(c), tuple(min(map(tuple, c.points)))))
    return clusters


def _point_polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    best = np.full(len(points), np.inf)
    for a, b in zip(poly[:-1], poly[1:]):
        ab = b - a
        denom = float(ab @ ab)
        t = np.zeros(len(points)) if denom == 0 else np.clip((points - a) @ ab / denom, 0, 1)
        d = np.linalg.norm(points - (a + t[:, None] * ab), axis=1)
        np.minimum(best, d, out=best)
    return best


def extract_node_chain(
    cable_cloud: PointCloud,
    count: int,
    fixed_end,
    diameter: float,
) -> CableState:
    """Ordered backbone of an unbranched cable cloud.

    Starting from the extremity nearest the fixed end, repeatedly step to the
    centroid of the not-yet-visited points within ``1.5 * diameter``, then
    resample the walk to ``count`` uniform-arclength nodes.
    """
    pts = cable_cloud.points
    fixed_end = np.asarray(fixed_end, dtype=float)
    radius = 1.5 * diameter
    graph = _radius_graph(pts, radius)
    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        main = np.argmax(np.bincount(labels))
        keep = labels == main
        pts = pts[keep]
        graph = _radius_graph(pts, radius)
    seed = int(np.argmin(np.linalg.norm(pts - fixed_end, axis=1)))
    far_a = int(np.argmax(dijkstra(graph, indices=seed)))
    dist_a = dijkstra(graph, indices=far_a)
    far_b = int(np.argmax(dist_a))
    ends = (far_a, far_b)
    start = min(ends, key=lambda i: np.linalg.norm(pts[i] - fixed_end))
    stop = far_b if start == far_a else far_a
    if np.linalg.norm(pts[start] - fixed_end) > 2 * radius:
        raise ValueError("fixed end is not near either cable extremity")

    tree = cKDTree(pts)
    visited = np.zeros(len(pts), dtype=bool)
    current = pts[start].copy()
    path = [current.copy()]
    while True:
        near = np.array(tree.query_ball_point(current, radius), dtype=int)
        near = near[~visited[near]] if len(near) else near
        if len(near) == 0:
            break
        visited[near] = True
        current = pts[near].mean(axis=0)
        path.append(current.copy())
    if np.linalg.norm(path[-1] - pts[stop]) <= radius:
        path.append(pts[stop].copy())
    path = np.array(path)
    if len(path) < 2:
        raise AmbiguousTopology("walk did not leave the start point")
    gap = _point_polyline_distance(pts, path)
    if gap.max() > 2 * diameter:
        raise AmbiguousTopology(
            f"{int((gap > 2 * diameter).sum())} points lie off the backbone; cable looks branched"
        )
    return resample_polyline(path, count, fixed_end=fixed_end)


def perceive_cable(
    grid: DepthGrid,
    scene: Scene,
    count: int | None = None,
    smoothing_sigma: float = 1.0,
    min_cluster: int = 5,
) -> CableState:
    d_c = scene.cable.diameter
    smoothed = smooth_depth(grid, smoothing_sigma)
    cloud = cable_cloud(smoothed)
    if grid.pitch < d_c / 4:
        cloud = voxel_downsample(cloud, d_c / 4)
    clusters = cluster_points(cloud, 1.5 * d_c, min_cluster)
    merged = PointCloud(points=np.vstack([c.points for c in clusters]), label="cable")
    n = scene.state.count if count is None else count
    state = extract_node_chain(merged, n, scene.state.fixed_end, d_c)
    # Top-down points sample the upper half of the tube; drop to the centreline.
    nodes = state.nodes.copy()
    nodes[:, 2] = np.maximum(nodes[:, 2] - math.pi * d_c / 8, scene.table_z + d_c / 2)
    return state.with_nodes(nodes)


def perceive(
    scene: Scene,
    noise_sigma: float = 0.0,
    seed: int | None = 0,
    pitch: float = 0.001,
    smoothing_sigma: float = 1.0,
) -> PerceivedScene:
    grid = render_depth(scene, noise_sigma=noise_sigma, seed=seed, pitch=pitch)
    poses = perceive_slots(grid, scene)
    state = perceive_cable(grid, scene, smoothing_sigma=smoothing_sigma)
    return PerceivedScene(slot_poses=poses, state=state, grid=grid)


# -- serialisation -----------------------------------------------------------

_DEPTH_SCALE = 2e-5


def save_depth_pgm(grid: DepthGrid, path) -> None:
    """16-bit binary PGM; pitch/origin/camera live in header comments."""
    path = Path(path)
    q = np.clip(np.round(grid.depth / _DEPTH_SCALE), 0, 65535).astype(">u2")
    h, w = grid.shape
    header = (
        "P5\n"
        f"# pitch={grid.pitch!r}\n"
        f"# origin_x={grid.origin[0]!r}\n"
        f"# origin_y={grid.origin[1]!r}\n"
        f"# camera_z={grid.camera_z!r}\n"
        f"# table_z={grid.table_z!r}\n"
        f"# depth_scale={_DEPTH_SCALE!r}\n"
        f"{w} {h}\n65535\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(q.tobytes())
    mask = (grid.mask.astype(np.uint8) * 255).tobytes()
    with open(path.with_suffix(".mask.pgm"), "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(mask)


def _read_pgm(path):
    data = Path(path).read_bytes()
    meta, fields, pos = {}, [], 0
    while len(fields) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end].decode("ascii").strip()
        pos = end + 1
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = float(val)
            continue
        fields.extend(line.split())
    _, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else np.uint8
    arr = np.frombuffer(data[pos:], dtype=dtype, count=w * h).reshape(h, w)
    return arr, meta


def load_depth_pgm(path) -> DepthGrid:
    path = Path(path)
    raw, meta = _read_pgm(path)
    depth = raw.astype(float) * meta["depth_scale"]
    mask_path = path.with_suffix(".mask.pgm")
    mask = _read_pgm(mask_path)[0] > 0 if mask_path.exists() else None
    return DepthGrid(
        depth=depth,
        pitch=meta["pitch"],
        origin=(meta["origin_x"], meta["origin_y"]),
        camera_z=meta["camera_z"],
        table_z=meta["table_z"],
        mask=mask,
    )


def save_cloud_csv(clouds, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,z,label\n")
        for cloud in clouds:
            for p in cloud.points:
                fh.write(f"{float(p[0])!r},{float(p[1])!r},{float(p[2])!r},{cloud.label}\n")


def load_cloud_csv(path) -> list[PointCloud]:
    rows: dict[str, list] = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            x, y, z, label = line.strip().split(",")
            rows.setdefault(label, []).append((float(x), float(y), float(z)))
    return [PointCloud(points=np.array(v), label=k) for k, v in rows.items()]
