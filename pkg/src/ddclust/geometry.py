"""Planar geometry primitives: points, segments, polygons, grid index, overlay union.

All incidence tests use an absolute tolerance of 1e-9 in dataset units;
datasets handled by this package are O(1)-O(1e3) in extent, so double
precision leaves ample headroom.
"""

import math
from dataclasses import dataclass, field

TOL = 1e-9


class GeometryError(Exception):
    """Raised for invalid geometric input or an inconsistent overlay state."""


@dataclass(frozen=True)
class Point2:
    """A point in the plane. Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class Vector2:
    """A displacement in the plane."""

    dx: float
    dy: float

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise GeometryError(f"non-finite vector ({self.dx}, {self.dy})")

    def norm(self) -> float:
        return math.hypot(self.dx, self.dy)

    def dot(self, other: "Vector2") -> float:
        return self.dx * other.dx + self.dy * other.dy


@dataclass(frozen=True)
class Segment:
    """A line segment with distinct endpoints."""

    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a == self.b:
            raise GeometryError(f"degenerate segment at {self.a}")


def distance(p: Point2, q: Point2) -> float:
    """Euclidean distance between two points."""
    return math.hypot(p.x - q.x, p.y - q.y)


# ---------------------------------------------------------------------------
# Grid index for fixed-radius neighbourhood queries


class GridIndex:
    """Uniform grid over points, sized for fixed-radius queries.

    The cell size equals the query radius the index was built for, so a
    radius-eps ball is always covered by the 3x3 block of cells around the
    probe. Query results are filtered to exact Euclidean distance and
    returned in deterministic (x, y, insertion rank) order.
    """

    def __init__(self, points: list[Point2], cell_size: float):
        if cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        self.cell_size = cell_size
        self.buckets: dict[tuple[int, int], list[tuple[Point2, int]]] = {}
        self._count = 0
        for rank, p in enumerate(points):
            self.buckets.setdefault(self._cell(p), []).append((p, rank))
            self._count += 1

    def _cell(self, p: Point2) -> tuple[int, int]:
        return (math.floor(p.x / self.cell_size), math.floor(p.y / self.cell_size))

    def __len__(self) -> int:
        return self._count

    def query(self, p: Point2, eps: float) -> list[tuple[int, Point2]]:
        """All (rank, point) pairs within distance eps of p, sorted by (x, y, rank)."""
        reach = max(1, math.ceil(eps / self.cell_size))
        cx, cy = self._cell(p)
        hits = []
        for ix in range(cx - reach, cx + reach + 1):
            for iy in range(cy - reach, cy + reach + 1):
                for q, rank in self.buckets.get((ix, iy), ()):
                    if math.hypot(p.x - q.x, p.y - q.y) <= eps:
                        hits.append((rank, q))
        hits.sort(key=lambda h: (h[1].x, h[1].y, h[0]))
        return hits


def build_index(points: list[Point2], eps: float) -> GridIndex:
    """Index points for radius-eps neighbourhood queries. Duplicates are kept."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return GridIndex(points, eps)


def neighbourhood(index: GridIndex, p: Point2, eps: float) -> list[Point2]:
    """Exactly the indexed points within distance eps of p (p included if indexed)."""
    return [q for _, q in index.query(p, eps)]


# ---------------------------------------------------------------------------
# Segment intersection


def _orient(a: Point2, b: Point2, c: Point2) -> int:
    """Sign of the turn a->b->c: +1 left, -1 right, 0 within tolerance of collinear."""
    cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    # compare perpendicular distance of c from line ab against the tolerance
    base = math.hypot(b.x - a.x, b.y - a.y)
    if abs(cross) <= TOL * base:
        return 0
    return 1 if cross > 0 else -1


def _on_segment(a: Point2, b: Point2, c: Point2) -> bool:
    """Whether collinear point c lies within the bounding box of segment ab."""
    return (
        min(a.x, b.x) - TOL <= c.x <= max(a.x, b.x) + TOL
        and min(a.y, b.y) - TOL <= c.y <= max(a.y, b.y) + TOL
    )


def _line_cross(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> Point2:
    d1x, d1y = p2.x - p1.x, p2.y - p1.y
    d2x, d2y = p4.x - p3.x, p4.y - p3.y
    denom = d1x * d2y - d1y * d2x
    t = ((p3.x - p1.x) * d2y - (p3.y - p1.y) * d2x) / denom
    return Point2(p1.x + t * d1x, p1.y + t * d1y)


def segments_intersect(s1: Segment, s2: Segment) -> Point2 | None:
    """Intersection point of two segments, or None.

    Touching counts as intersecting; collinear overlap is reported at the
    midpoint of the shared stretch.
    """
    p1, p2, p3, p4 = s1.a, s1.b, s2.a, s2.b
    o1 = _orient(p1, p2, p3)
    o2 = _orient(p1, p2, p4)
    o3 = _orient(p3, p4, p1)
    o4 = _orient(p3, p4, p2)

    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return _line_cross(p1, p2, p3, p4)

    if o1 == 0 and o2 == 0:
        # collinear: project on the segment's major axis and intersect intervals
        if abs(p2.x - p1.x) >= abs(p2.y - p1.y):
            key = lambda p: p.x
        else:
            key = lambda p: p.y
        lo1, hi1 = sorted((p1, p2), key=key)
        lo2, hi2 = sorted((p3, p4), key=key)
        lo = lo1 if key(lo1) >= key(lo2) else lo2
        hi = hi1 if key(hi1) <= key(hi2) else hi2
        if key(lo) > key(hi) + TOL:
            return None
        return Point2((lo.x + hi.x) / 2, (lo.y + hi.y) / 2)

    # endpoint touching the other segment
    if o1 == 0 and _on_segment(p1, p2, p3):
        return p3
    if o2 == 0 and _on_segment(p1, p2, p4):
        return p4
    if o3 == 0 and _on_segment(p3, p4, p1):
        return p1
    if o4 == 0 and _on_segment(p3, p4, p2):
        return p2
    return None


def sweep_intersections(segments: list[Segment]) -> list[tuple[tuple[int, int], Point2]]:
    """All intersecting segment pairs, each reported once, swept along x.

    Segments enter the active set in min-x order and leave once the sweep
    passes their max-x, so only x-overlapping pairs reach the exact test.
    """
    order = sorted(range(len(segments)), key=lambda i: min(segments[i].a.x, segments[i].b.x))
    active: list[tuple[float, int]] = []  # (max_x, index)
    out = []
    for i in order:
        s = segments[i]
        lo_x = min(s.a.x, s.b.x)
        active = [(mx, j) for mx, j in active if mx >= lo_x - TOL]
        ymin, ymax = min(s.a.y, s.b.y), max(s.a.y, s.b.y)
        for _, j in active:
            t = segments[j]
            if min(t.a.y, t.b.y) > ymax + TOL or max(t.a.y, t.b.y) < ymin - TOL:
                continue
            p = segments_intersect(s, t)
            if p is not None:
                out.append(((min(i, j), max(i, j)), p))
        active.append((max(s.a.x, s.b.x), i))
    out.sort(key=lambda e: e[0])
    return out


# ---------------------------------------------------------------------------
# Polygons


def _signed_area(vertices: list[Point2]) -> float:
    s = 0.0
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        s += a.x * b.y - b.x * a.y
    return s / 2


def _ring_is_simple(vertices: list[Point2]) -> bool:
    n = len(vertices)
    edges = [Segment(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for (i, j), p in sweep_intersections(edges):
        if j == i + 1 or (i == 0 and j == n - 1):
            shared = vertices[j] if j == i + 1 else vertices[0]
            if distance(p, shared) > TOL:
                return False  # adjacent edges overlap beyond their shared vertex
        else:
            return False
    return True


@dataclass(frozen=True)
class Polygon:
    """A simple polygon stored as a counter-clockwise ring (implicitly closed)."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = [v for i, v in enumerate(self.vertices) if v != self.vertices[i - 1]]
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 distinct vertices, got {len(verts)}")
        area = _signed_area(verts)
        if abs(area) <= TOL:
            raise GeometryError("degenerate polygon (zero area)")
        if area < 0:
            verts.reverse()
        if not _ring_is_simple(verts):
            raise GeometryError("polygon ring is self-intersecting")
        object.__setattr__(self, "vertices", tuple(verts))

    def edges(self) -> list[Segment]:
        n = len(self.vertices)
        return [Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)


def polygon_area(poly: Polygon) -> float:
    """Positive shoelace area."""
    return _signed_area(list(poly.vertices))


def _point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    abx, aby = b.x - a.x, b.y - a.y
    apx, apy = p.x - a.x, p.y - a.y
    denom = abx * abx + aby * aby
    t = 0.0 if denom == 0 else max(0.0, min(1.0, (apx * abx + apy * aby) / denom))
    return math.hypot(apx - t * abx, apy - t * aby)


def point_in_polygon(p: Point2, poly: Polygon) -> bool:
    """True if p is inside the polygon or within tolerance of its boundary."""
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        if _point_segment_distance(p, verts[i], verts[(i + 1) % n]) <= TOL:
            return True
    return _crossings_odd(p, verts)


def _crossings_odd(p: Point2, verts: tuple[Point2, ...]) -> bool:
    inside = False
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if x_cross > p.x:
                inside = not inside
    return inside


def point_polygon_distance(p: Point2, poly: Polygon) -> float:
    """Distance from p to the polygon region: 0 inside, else distance to boundary."""
    verts = poly.vertices
    n = len(verts)
    d = min(_point_segment_distance(p, verts[i], verts[(i + 1) % n]) for i in range(n))
    if d <= TOL or _crossings_odd(p, verts):
        return 0.0
    return d


def _strictly_inside(p: Point2, poly: Polygon) -> bool:
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        if _point_segment_distance(p, verts[i], verts[(i + 1) % n]) <= TOL:
            return False
    return _crossings_odd(p, verts)


def interior_point(poly: Polygon) -> Point2:
    """A point strictly inside the polygon (diagonal-midpoint probing)."""
    verts = poly.vertices
    cx = sum(v.x for v in verts) / len(verts)
    cy = sum(v.y for v in verts) / len(verts)
    c = Point2(cx, cy)
    if _strictly_inside(c, poly):
        return c
    n = len(verts)
    for i in range(n):
        a, b, d = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
        probe = Point2((a.x + b.x + d.x) / 3, (a.y + b.y + d.y) / 3)
        if _strictly_inside(probe, poly):
            return probe
    raise GeometryError("could not locate an interior point")


def convex_hull(points: list[Point2]) -> list[Point2]:
    """Convex hull in counter-clockwise order (monotone chain, strict turns)."""
    pts = sorted(set((p.x, p.y) for p in points))
    if len(pts) <= 2:
        return [Point2(x, y) for x, y in pts]

    def half(seq):
        out: list[tuple[float, float]] = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    ring = lower[:-1] + upper[:-1]
    return [Point2(x, y) for x, y in ring]


# ---------------------------------------------------------------------------
# Overlay union


def _node_key(p: Point2) -> tuple[int, int]:
    return (round(p.x / TOL), round(p.y / TOL))


def _split_edges(poly: Polygon, cuts: dict[int, list[Point2]]) -> list[tuple[Point2, Point2]]:
    out = []
    for i, edge in enumerate(poly.edges()):
        pts = cuts.get(i, [])
        ax, ay = edge.a.x, edge.a.y
        dx, dy = edge.b.x - ax, edge.b.y - ay
        denom = dx * dx + dy * dy
        ts = sorted({max(0.0, min(1.0, ((p.x - ax) * dx + (p.y - ay) * dy) / denom)) for p in pts})
        chain = [edge.a]
        for t in ts:
            q = Point2(ax + t * dx, ay + t * dy)
            if distance(q, chain[-1]) > TOL and distance(q, edge.b) > TOL:
                chain.append(q)
        chain.append(edge.b)
        for a, b in zip(chain, chain[1:]):
            out.append((a, b))
    return out


def _union_once(a: Polygon, b: Polygon) -> list[Polygon]:
    cuts_a: dict[int, list[Point2]] = {}
    cuts_b: dict[int, list[Point2]] = {}
    edges_a, edges_b = a.edges(), b.edges()
    crossing = False
    for i, ea in enumerate(edges_a):
        for j, eb in enumerate(edges_b):
            p = segments_intersect(ea, eb)
            if p is not None:
                crossing = True
                cuts_a.setdefault(i, []).append(p)
                cuts_b.setdefault(j, []).append(p)

    if not crossing:
        # boundaries never cross, so the regions are nested or disjoint
        b_probe_in_a = point_in_polygon(interior_point(b), a)
        a_probe_in_b = point_in_polygon(interior_point(a), b)
        if not b_probe_in_a and not a_probe_in_b:
            return [a, b]
        if b_probe_in_a and a_probe_in_b:
            # nested with both probes in the overlap: the container is larger
            return [a] if polygon_area(a) >= polygon_area(b) else [b]
        return [a] if b_probe_in_a else [b]

    kept: dict[tuple, tuple[Point2, Point2]] = {}
    dropped_reverse = set()
    for sub, other in ((_split_edges(a, cuts_a), b), (_split_edges(b, cuts_b), a)):
        for p, q in sub:
            mid = Point2((p.x + q.x) / 2, (p.y + q.y) / 2)
            if _strictly_inside(mid, other):
                continue
            key = (_node_key(p), _node_key(q))
            rev = (key[1], key[0])
            if rev in kept:
                # coincident boundary walked in opposite directions separates
                # two interiors; it is internal to the union
                del kept[rev]
                dropped_reverse.add(key)
                continue
            if key in dropped_reverse or key[0] == key[1]:
                continue
            kept.setdefault(key, (p, q))

    succ: dict[tuple, list[tuple]] = {}
    for (kf, kt) in kept:
        succ.setdefault(kf, []).append(kt)

    loops = []
    unused = set(kept)
    while unused:
        start = min(unused)
        unused.discard(start)
        ring = [kept[start][0]]
        node = start
        closed = False
        for _ in range(len(kept) + 1):
            if node[1] == start[0]:
                closed = True
                break
            ring.append(kept[node][1])
            options = [kt for kt in succ.get(node[1], []) if (node[1], kt) in unused]
            if not options:
                raise GeometryError("overlay trace dead end")
            if len(options) == 1:
                nxt = options[0]
            else:
                # at a degenerate junction take the sharpest left turn, which
                # peels touching loops apart instead of pinching them
                pin, pcur = kept[node]
                din = math.atan2(pcur.y - pin.y, pcur.x - pin.x)

                def turn(kt):
                    q = kept[(node[1], kt)][1]
                    ang = math.atan2(q.y - pcur.y, q.x - pcur.x) - din
                    return math.atan2(math.sin(ang), math.cos(ang))

                nxt = max(options, key=lambda kt: (turn(kt), kt))
            node = (node[1], nxt)
            unused.discard(node)
        if not closed:
            raise GeometryError("overlay trace did not close")
        if len(ring) >= 3 and abs(_signed_area(ring)) > TOL:
            loops.append(ring)

    outers = [ring for ring in loops if _signed_area(ring) > 0]
    if not outers:
        raise GeometryError("overlay produced no outer ring")
    polys = [Polygon(tuple(ring)) for ring in outers]
    # inner counter-rings (holes) are dropped; contours are outer boundaries only
    keep = []
    for i, p in enumerate(polys):
        nested = any(
            j != i and point_in_polygon(interior_point(p), q) for j, q in enumerate(polys)
        )
        if not nested:
            keep.append(p)
    return keep


def _rounded(poly: Polygon, grid: float) -> Polygon:
    verts = [Point2(round(v.x / grid) * grid, round(v.y / grid) * grid) for v in poly.vertices]
    return Polygon(tuple(verts))


def polygon_union(a: Polygon, b: Polygon) -> list[Polygon]:
    """Region union of two simple polygons as a list of disjoint outer rings.

    Overlapping or touching inputs produce a single polygon; disjoint inputs
    are returned unchanged. Holes created by the union are discarded.
    """
    if list(a.vertices) == list(b.vertices):
        return [a]
    axmin, aymin, axmax, aymax = a.bbox()
    bxmin, bymin, bxmax, bymax = b.bbox()
    if axmax < bxmin - TOL or bxmax < axmin - TOL or aymax < bymin - TOL or bymax < aymin - TOL:
        return [a, b]
    try:
        return _union_once(a, b)
    except GeometryError:
        pass
    # near-degenerate inputs: retry on progressively coarser snapped copies
    for grid in (1e-7, 1e-5):
        try:
            return _union_once(_rounded(a, grid), _rounded(b, grid))
        except GeometryError:
            continue
    raise GeometryError("polygon union failed after snap-rounding retries")


# ---------------------------------------------------------------------------
# Ring post-processing used when packaging contours


def inflate_polygon(poly: Polygon, delta: float) -> Polygon:
    """Offset a polygon outward by delta along vertex normals (best effort).

    Falls back to the input when the offset ring self-intersects, which can
    happen at sharp reflex vertices.
    """
    if delta <= 0:
        return poly
    verts = poly.vertices
    n = len(verts)
    moved = []
    for i in range(n):
        prev, cur, nxt = verts[i - 1], verts[i], verts[(i + 1) % n]
        d1x, d1y = cur.x - prev.x, cur.y - prev.y
        d2x, d2y = nxt.x - cur.x, nxt.y - cur.y
        l1, l2 = math.hypot(d1x, d1y), math.hypot(d2x, d2y)
        # outward normals of a CCW ring point right of the travel direction
        n1x, n1y = d1y / l1, -d1x / l1
        n2x, n2y = d2y / l2, -d2x / l2
        bx, by = n1x + n2x, n1y + n2y
        bl = math.hypot(bx, by)
        if bl < 1e-12:
            bx, by, bl = n1x, n1y, 1.0
        # true offset distance is delta / cos(half-angle); miter-limit at 3x
        miter = min(2.0 / bl, 3.0)
        scale = delta * miter / bl
        moved.append(Point2(cur.x + bx * scale, cur.y + by * scale))
    try:
        return Polygon(tuple(moved))
    except GeometryError:
        return poly


def simplify_ring(poly: Polygon, tolerance: float) -> Polygon:
    """Decimate ring vertices, keeping the shape within the given tolerance.

    The four axis-extreme vertices are always retained; each arc between
    them is thinned with Douglas-Peucker. Falls back to finer tolerances if
    the decimated ring self-intersects.
    """
    if tolerance <= 0:
        return poly
    verts = list(poly.vertices)
    n = len(verts)
    anchors = sorted(
        {
            min(range(n), key=lambda i: (verts[i].x, verts[i].y)),
            max(range(n), key=lambda i: (verts[i].x, verts[i].y)),
            min(range(n), key=lambda i: (verts[i].y, verts[i].x)),
            max(range(n), key=lambda i: (verts[i].y, verts[i].x)),
        }
    )

    def dp(chain: list[Point2], tol: float) -> list[Point2]:
        if len(chain) <= 2:
            return chain
        a, b = chain[0], chain[-1]
        idx, worst = 0, -1.0
        for i in range(1, len(chain) - 1):
            d = _point_segment_distance(chain[i], a, b)
            if d > worst:
                idx, worst = i, d
        if worst <= tol:
            return [a, b]
        left = dp(chain[: idx + 1], tol)
        right = dp(chain[idx:], tol)
        return left[:-1] + right

    tol = tolerance
    for _ in range(4):
        ring: list[Point2] = []
        for k in range(len(anchors)):
            i, j = anchors[k], anchors[(k + 1) % len(anchors)]
            arc = verts[i:j + 1] if i < j else verts[i:] + verts[: j + 1]
            ring.extend(dp(arc, tol)[:-1])
        try:
            if len(ring) >= 3:
                return Polygon(tuple(ring))
        except GeometryError:
            pass
        tol /= 2
    return poly


def bounding_triangle(points: list[Point2], pad: float) -> Polygon:
    """A triangle containing all points with at least `pad` clearance."""
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    minx, maxx, miny, maxy = min(xs), max(xs), min(ys), max(ys)
    pad = max(pad, TOL * 10)
    for _ in range(40):
        w = maxx - minx + 2 * pad
        h = maxy - miny + 2 * pad
        a = Point2(minx - pad - h, miny - pad)
        b = Point2(maxx + pad + h, miny - pad)
        c = Point2((minx + maxx) / 2, maxy + pad + (b.x - a.x) / 2)
        tri = Polygon((a, b, c))
        if all(point_in_polygon(p, tri) for p in points):
            return tri
        pad *= 2
    raise GeometryError("could not bound points with a triangle")
