"""Reduce local clusters to boundary contours plus internal representatives.

For every cluster point the displacement sum over its eps-neighbourhood
yields a balance vector aiming at the sparse side; a point is boundary
when the cone around that vector holds no neighbour. Boundary points are
chained into a simple polygon, which is what nodes exchange.
"""

import math
import random
from dataclasses import dataclass

from ddclust.geometry import (
    GridIndex,
    Point2,
    Polygon,
    Segment,
    Vector2,
    GeometryError,
    bounding_triangle,
    build_index,
    convex_hull,
    distance,
    inflate_polygon,
    point_polygon_distance,
    polygon_area,
    segments_intersect,
    simplify_ring,
)
from ddclust.local_clustering import NOISE, ClusteringResult, DatasetFragment

_ZERO_NORM = 1e-12

# Packaging constants used by build_local_model, both relative to eps:
# decimation keeps skipped points within the eps containment envelope and
# the outward offset makes contours of adjacent fragments of one cluster
# overlap instead of merely touching.
SIMPLIFY_FACTOR = 0.5
INFLATE_FACTOR = 0.5


class DegenerateContourError(Exception):
    """Fewer than three usable boundary points, or chaining collapsed."""


@dataclass(frozen=True)
class BoundaryConfig:
    """Neighbourhood radius, cone half-angle and the interior fallback count."""

    eps: float
    aperture: float = math.pi / 2
    min_neighbours: int = 4

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 < self.aperture < math.pi:
            raise ValueError(f"aperture must be in (0, pi), got {self.aperture}")
        if self.min_neighbours < 1:
            raise ValueError("min_neighbours must be >= 1")


@dataclass(frozen=True)
class Contour:
    """Boundary polygon of one local cluster plus its density metadata."""

    polygon: Polygon
    point_count: int
    density: float
    source_node: int
    source_cluster: int

    def __post_init__(self):
        if self.point_count < 0:
            raise ValueError("contour point count cannot be negative")
        if self.point_count > 0 and self.density <= 0:
            raise ValueError("contour density must be positive")


@dataclass(frozen=True)
class LocalModel:
    """A node's exchangeable summary: contours plus sampled interior points."""

    node_id: int
    contours: list[Contour]
    internal_reps: list[Point2]

    def representative_count(self) -> int:
        return sum(len(c.polygon.vertices) for c in self.contours) + len(self.internal_reps)


def _coverage_gap(members: list[Point2], polygon: Polygon) -> float:
    return max(point_polygon_distance(p, polygon) for p in members)


def grid_outline(members: list[Point2], eps: float) -> Polygon | None:
    """Outer outline of the occupied-cell region around the given points.

    Cells of size 0.6*eps are marked, dilated by one cell and traced along
    their boundary. Dilation closes sampling gaps up to eps and removes
    marching-square saddle ambiguities, so the trace is a set of simple,
    disjoint lattice loops; the positive (outer) loop of largest area is
    returned. Returns None when the occupied region is disconnected and
    the largest loop misses some of the points.
    """
    if not members:
        return None
    h = 0.6 * eps
    seeds = {(math.floor(p.x / h), math.floor(p.y / h)) for p in members}
    cells = set()
    for i, j in seeds:
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                cells.add((i + di, j + dj))

    # directed boundary edges, region interior on the left (outer loop CCW)
    succ: dict[tuple[int, int], tuple[int, int]] = {}
    for i, j in cells:
        if (i, j - 1) not in cells:
            succ[(i, j)] = (i + 1, j)
        if (i + 1, j) not in cells:
            succ[(i + 1, j)] = (i + 1, j + 1)
        if (i, j + 1) not in cells:
            succ[(i + 1, j + 1)] = (i, j + 1)
        if (i - 1, j) not in cells:
            succ[(i, j + 1)] = (i, j)

    loops = []
    unused = set(succ)
    while unused:
        node = start = min(unused)
        ring = []
        while True:
            unused.discard(node)
            ring.append(node)
            node = succ[node]
            if node == start:
                break
        area2 = 0
        for k in range(len(ring)):
            a, b = ring[k], ring[(k + 1) % len(ring)]
            area2 += a[0] * b[1] - b[0] * a[1]
        if area2 > 0:
            loops.append((area2, ring))
    if not loops:
        return None
    _, ring = max(loops, key=lambda t: t[0])
    # collapse collinear lattice runs before building the polygon
    verts = []
    for k, (i, j) in enumerate(ring):
        pi, pj = ring[k - 1]
        ni, nj = ring[(k + 1) % len(ring)]
        if (i - pi, j - pj) != (ni - i, nj - j):
            verts.append(Point2(i * h, j * h))
    try:
        return Polygon(tuple(verts))
    except GeometryError:
        return None


def displacement_vector(p: Point2, neighbours: list[Point2]) -> Vector2:
    """Sum of (p - p_i) over the neighbourhood; aims at the sparse side."""
    dx = sum(p.x - q.x for q in neighbours)
    dy = sum(p.y - q.y for q in neighbours)
    return Vector2(dx, dy)


def balance_vector(v: Vector2) -> Vector2:
    """Unit vector along v, or the zero vector for a (near) zero input."""
    n = v.norm()
    if n <= _ZERO_NORM:
        return Vector2(0.0, 0.0)
    return Vector2(v.dx / n, v.dy / n)


def is_boundary(p: Point2, neighbours: list[Point2], b: Vector2, config: BoundaryConfig) -> bool:
    """The cone of the given half-angle around b holds no neighbour of p.

    A zero balance vector means a symmetric neighbourhood: dense symmetric
    points are interior, sparse ones (fewer than min_neighbours besides p)
    are boundary.
    """
    others = [q for q in neighbours if q != p]
    if b.norm() <= _ZERO_NORM:
        return len(others) < config.min_neighbours
    cos_ap = math.cos(config.aperture)
    for q in others:
        ux, uy = q.x - p.x, q.y - p.y
        d = math.hypot(ux, uy)
        if d <= _ZERO_NORM:
            continue
        if (ux * b.dx + uy * b.dy) / d >= cos_ap:
            return False
    return True


def extract_boundary(cluster: list[Point2], config: BoundaryConfig) -> list[Point2]:
    """The subset of cluster points whose balance-vector cone is empty."""
    if not cluster:
        return []
    index = build_index(cluster, config.eps)
    out = []
    cos_ap = math.cos(config.aperture)
    for p in cluster:
        neigh = [q for _, q in index.query(p, config.eps)]
        b = balance_vector(displacement_vector(p, neigh))
        if b.norm() <= _ZERO_NORM:
            if sum(1 for q in neigh if q != p) < config.min_neighbours:
                out.append(p)
            continue
        keep = True
        for q in neigh:
            if q == p:
                continue
            ux, uy = q.x - p.x, q.y - p.y
            d = math.hypot(ux, uy)
            if d <= _ZERO_NORM:
                continue
            if (ux * b.dx + uy * b.dy) / d >= cos_ap:
                keep = False
                break
        if keep:
            out.append(p)
    return out


def _segment_clear(seg_a: Point2, seg_b: Point2, edges, allowed: set[Point2]) -> bool:
    try:
        cand = Segment(seg_a, seg_b)
    except GeometryError:
        return False
    for a, b in edges:
        hit = segments_intersect(Segment(a, b), cand)
        if hit is None:
            continue
        if any(distance(hit, ok) <= 1e-9 for ok in allowed):
            continue
        return False
    return True


def _greedy_chain(points: list[Point2], eps: float) -> Polygon | None:
    index = build_index(points, eps)
    start = min(points, key=lambda p: (p.y, p.x))
    key = lambda p: (p.x, p.y)
    chain = [start]
    edges: list[tuple[Point2, Point2]] = []
    used = {key(start)}
    banned: set[tuple] = set()
    # the ring may close early only once most points are on the chain,
    # otherwise a tight zigzag near the start would self-close immediately
    may_close_at = max(4, len(points) // 2)
    budget = 8 * len(points)

    while budget > 0:
        budget -= 1
        cur = chain[-1]
        if len(edges) == 0:
            din = None
        else:
            prev = edges[-1][0]
            din = math.atan2(cur.y - prev.y, cur.x - prev.x)

        def rank(q):
            d = distance(cur, q)
            if din is None:
                return (d, q.x, q.y)
            ang = math.atan2(q.y - cur.y, q.x - cur.x) - din
            turn = abs(math.atan2(math.sin(ang), math.cos(ang)))
            return (turn, d, q.x, q.y)

        nxt = None
        nearest = math.inf
        for hop in (2 * eps, 3 * eps, 4 * eps):
            cands = [
                c
                for _, c in index.query(cur, hop)
                if key(c) not in used and (key(cur), key(c)) not in banned
            ]
            if not cands:
                continue
            nearest = min(nearest, min(distance(cur, c) for c in cands))
            # continue as straight as possible: rim gaps get bridged while
            # shortcuts across a band would need a sharp turn
            for q in sorted(cands, key=rank):
                if _segment_clear(cur, q, edges, {cur}):
                    nxt = q
                    break
            if nxt is not None:
                break

        if len(chain) >= min(len(points), may_close_at):
            d_home = distance(cur, start)
            # the closing edge must be an ordinary short hop; a long close
            # would cut across the shape instead of following the rim
            if d_home <= 4 * eps and d_home <= nearest and _segment_clear(
                cur, start, edges, {start, cur}
            ):
                try:
                    return Polygon(tuple(chain))
                except GeometryError:
                    pass

        if nxt is None:
            if len(chain) == 1:
                return None
            bad = chain.pop()
            edges.pop()
            used.discard(key(bad))
            banned.add((key(chain[-1]), key(bad)))
            continue
        edges.append((cur, nxt))
        chain.append(nxt)
        used.add(key(nxt))
    return None


def _angular_ring(points: list[Point2]) -> Polygon | None:
    cx = sum(p.x for p in points) / len(points)
    cy = sum(p.y for p in points) / len(points)
    ring = sorted(
        points, key=lambda p: (math.atan2(p.y - cy, p.x - cx), distance(p, Point2(cx, cy)))
    )
    try:
        return Polygon(tuple(ring))
    except GeometryError:
        return None


def chain_contour(boundary_points: list[Point2], config: BoundaryConfig) -> Polygon:
    """Order boundary points into a simple polygon.

    Greedy nearest-neighbour chaining from the lowest point, restricted to
    2*eps hops (widened only when the chain would otherwise stall) and
    rejecting self-crossing steps. Falls back to an angular sort around the
    centroid, then to the convex hull.
    """
    unique: list[Point2] = []
    seen = set()
    for p in boundary_points:
        key = (p.x, p.y)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    if len(unique) < 3:
        raise DegenerateContourError(f"{len(unique)} usable boundary points")

    poly = _greedy_chain(unique, config.eps)
    if poly is not None:
        return poly
    poly = _angular_ring(unique)
    if poly is not None:
        return poly
    hull = convex_hull(unique)
    if len(hull) >= 3:
        try:
            return Polygon(tuple(hull))
        except GeometryError:
            pass
    raise DegenerateContourError("could not build a simple contour ring")


def build_local_model(
    fragment: DatasetFragment,
    result: ClusteringResult,
    config: BoundaryConfig,
    sample_rate: float = 0.0,
    seed: int = 0,
) -> LocalModel:
    """One contour per local cluster plus a seeded sample of interior points.

    Noise points are excluded entirely. Contour rings are decimated and
    offset outward by half the neighbourhood radius before shipping, so the
    polygon stays within the eps containment envelope of the chain.
    """
    if not 0 <= sample_rate <= 1:
        raise ValueError(f"sample_rate must be in [0, 1], got {sample_rate}")
    points = fragment.points
    contours = []
    boundary_keys: set[tuple[float, float]] = set()
    for cid in range(result.cluster_count):
        members = [points[i] for i in range(len(points)) if result.labels[i] == cid]
        if not members:
            continue
        boundary = extract_boundary(members, config)
        boundary_keys.update((p.x, p.y) for p in boundary)
        polygon = grid_outline(members, config.eps)
        if polygon is not None and _coverage_gap(members, polygon) > config.eps:
            # disconnected occupancy region (scatter claimed by one cluster);
            # a convex hull of the members always covers them
            polygon = None
        if polygon is None and len(members) >= 3:
            hull = convex_hull(members)
            if len(hull) >= 3:
                try:
                    polygon = inflate_polygon(
                        Polygon(tuple(hull)), INFLATE_FACTOR * config.eps
                    )
                except GeometryError:
                    polygon = None
        if polygon is None:
            polygon = bounding_triangle(members, config.eps)
        else:
            polygon = simplify_ring(polygon, SIMPLIFY_FACTOR * config.eps)
        contours.append(
            Contour(
                polygon=polygon,
                point_count=len(members),
                density=len(members) / polygon_area(polygon),
                source_node=fragment.node_id,
                source_cluster=cid,
            )
        )

    interior = [
        p
        for i, p in enumerate(points)
        if result.labels[i] != NOISE and (p.x, p.y) not in boundary_keys
    ]
    want = round(sample_rate * len(interior))
    reps = random.Random(seed).sample(interior, want) if want else []
    return LocalModel(node_id=fragment.node_id, contours=contours, internal_reps=reps)


def reduction_ratio(model: LocalModel, fragment: DatasetFragment) -> float:
    """Representatives shipped divided by fragment size, in [0, 1]."""
    n = len(fragment.points)
    if n == 0:
        raise ValueError("empty fragment")
    return min(1.0, model.representative_count() / n)
