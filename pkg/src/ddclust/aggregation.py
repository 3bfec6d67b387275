"""Phase-two merging: overlapping contours from different nodes become one cluster."""

import random
from dataclasses import dataclass

from ddclust.boundary import Contour, LocalModel
from ddclust.geometry import (
    GeometryError,
    Point2,
    Polygon,
    Segment,
    inflate_polygon,
    interior_point,
    point_in_polygon,
    polygon_area,
    polygon_union,
    sweep_intersections,
)


@dataclass(frozen=True)
class MergeGroup:
    """Contour indices forming one connected component of the overlap graph."""

    members: tuple[int, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("merge group cannot be empty")


@dataclass(frozen=True)
class GlobalModel:
    """Merged clusters plus provenance and pass-through representatives."""

    clusters: list[Contour]
    total_point_count: int
    provenance: list[tuple[tuple[int, int], ...]]
    internal_reps: list[Point2]

    def cluster_count(self) -> int:
        return len(self.clusters)


def contours_overlap(c1: Contour, c2: Contour) -> bool:
    """True when boundaries intersect or one contour lies inside the other."""
    a, b = c1.polygon, c2.polygon
    axmin, aymin, axmax, aymax = a.bbox()
    bxmin, bymin, bxmax, bymax = b.bbox()
    if axmax < bxmin or bxmax < axmin or aymax < bymin or bymax < aymin:
        return False
    edges = a.edges() + b.edges()
    na = len(a.vertices)
    for (i, j), _ in sweep_intersections(edges):
        if i < na <= j:
            return True
    return point_in_polygon(a.vertices[0], b) or point_in_polygon(b.vertices[0], a)


def find_merge_groups(contours: list[Contour], dilation: float = 0.0) -> list[MergeGroup]:
    """Connected components of the pairwise overlap graph (union-find).

    A positive dilation inflates every contour before testing, an
    experimentation knob for merging nearby-but-disjoint contours.
    """
    tested = contours
    if dilation > 0:
        tested = [_dilated(c, dilation) for c in contours]
    parent = list(range(len(tested)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(tested)):
        for j in range(i + 1, len(tested)):
            if find(i) != find(j) and contours_overlap(tested[i], tested[j]):
                parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    for i in range(len(tested)):
        groups.setdefault(find(i), []).append(i)
    return [MergeGroup(tuple(sorted(g))) for g in sorted(groups.values(), key=lambda g: g[0])]


def _dilated(c: Contour, delta: float) -> Contour:
    return Contour(
        polygon=inflate_polygon(c.polygon, delta),
        point_count=c.point_count,
        density=c.density,
        source_node=c.source_node,
        source_cluster=c.source_cluster,
    )


def merge_group(group: MergeGroup, contours: list[Contour], dilation: float = 0.0) -> Contour:
    """Fold the group's contours into one via region union.

    Members are united in id order; a member disjoint from the running
    union is parked until a later member bridges it. The density of the
    merged contour is recomputed from the summed counts and the union area.
    """
    members = [contours[i] for i in group.members]
    if dilation > 0:
        members = [_dilated(c, dilation) for c in members]
    if len(members) == 1:
        merged_poly = members[0].polygon
    else:
        pieces: list[Polygon] = []
        for c in members:
            acc = c.polygon
            remaining = []
            for q in pieces:
                res = polygon_union(acc, q)
                if len(res) == 1:
                    acc = res[0]
                else:
                    remaining.append(q)
            # a new merge can bridge pieces that were disjoint before
            changed = True
            while changed:
                changed = False
                for q in list(remaining):
                    res = polygon_union(acc, q)
                    if len(res) == 1:
                        acc = res[0]
                        remaining.remove(q)
                        changed = True
            pieces = remaining + [acc]
        if len(pieces) != 1:
            raise GeometryError(
                f"group {group.members} united into {len(pieces)} disjoint rings"
            )
        merged_poly = pieces[0]

    count = sum(c.point_count for c in members)
    first = members[0]
    return Contour(
        polygon=merged_poly,
        point_count=count,
        density=count / polygon_area(merged_poly),
        source_node=first.source_node,
        source_cluster=first.source_cluster,
    )


def aggregate(models: list[LocalModel], dilation: float = 0.0) -> GlobalModel:
    """Merge the contours of all models into disjoint global clusters.

    The output is independent of model arrival order: contours are sorted
    by (source node, source cluster) before grouping.
    """
    if not models:
        raise ValueError("aggregate needs at least one model")
    contours = sorted(
        (c for m in models for c in m.contours),
        key=lambda c: (c.source_node, c.source_cluster),
    )
    reps = [p for m in sorted(models, key=lambda m: m.node_id) for p in m.internal_reps]
    if not contours:
        return GlobalModel(clusters=[], total_point_count=0, provenance=[], internal_reps=reps)

    groups = find_merge_groups(contours, dilation)
    clusters = []
    provenance = []
    for g in groups:
        clusters.append(merge_group(g, contours, dilation))
        provenance.append(
            tuple(sorted((contours[i].source_node, contours[i].source_cluster) for i in g.members))
        )
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            if contours_overlap(clusters[i], clusters[j]):
                raise GeometryError("merged global contours overlap")
    return GlobalModel(
        clusters=clusters,
        total_point_count=sum(c.point_count for c in clusters),
        provenance=provenance,
        internal_reps=reps,
    )


def regenerate(contour: Contour, seed: int = 0) -> list[Point2]:
    """Sample point_count points uniformly inside the contour polygon.

    Rejection sampling against the bounding box; a polygon filling less
    than 1% of its box after a million draws is reported as degenerate.
    """
    if contour.point_count == 0:
        return []
    rng = random.Random(seed)
    minx, miny, maxx, maxy = contour.polygon.bbox()
    out: list[Point2] = []
    drawn = 0
    while len(out) < contour.point_count:
        drawn += 1
        p = Point2(rng.uniform(minx, maxx), rng.uniform(miny, maxy))
        if point_in_polygon(p, contour.polygon):
            out.append(p)
        if drawn >= 10**6 and len(out) < drawn / 100:
            raise GeometryError("rejection sampling acceptance below 1%")
    return out