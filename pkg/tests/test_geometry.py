import math
import random

import pytest

from ddclust.geometry import (
    GeometryError,
    Point2,
    Polygon,
    Segment,
    Vector2,
    bounding_triangle,
    build_index,
    convex_hull,
    distance,
    inflate_polygon,
    neighbourhood,
    point_in_polygon,
    point_polygon_distance,
    polygon_area,
    polygon_union,
    segments_intersect,
    simplify_ring,
    sweep_intersections,
)

UNIT_SQUARE = Polygon((Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)))


def random_points(rng, n, lo=0.0, hi=1.0):
    return [Point2(rng.uniform(lo, hi), rng.uniform(lo, hi)) for _ in range(n)]


class TestDistance:
    def test_345(self):
        assert distance(Point2(0, 0), Point2(3, 4)) == 5.0

    def test_identity(self):
        assert distance(Point2(1, 1), Point2(1, 1)) == 0.0

    def test_sqrt2(self):
        assert distance(Point2(0, 0), Point2(1, 1)) == pytest.approx(math.sqrt(2), abs=1e-9)

    def test_triangle_inequality(self):
        rng = random.Random(1)
        for _ in range(200):
            a, b, c = random_points(rng, 3, -10, 10)
            assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12

    def test_rejects_nan(self):
        with pytest.raises(GeometryError):
            Point2(float("nan"), 0.0)


class TestGridIndex:
    def test_empty(self):
        idx = build_index([], 1.0)
        assert neighbourhood(idx, Point2(0, 0), 1.0) == []

    def test_two_points(self):
        idx = build_index([Point2(0, 0), Point2(0.5, 0)], 1.0)
        assert neighbourhood(idx, Point2(0, 0), 1.0) == [Point2(0, 0), Point2(0.5, 0)]

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            build_index([Point2(0, 0)], 0.0)

    def test_keeps_duplicates(self):
        idx = build_index([Point2(0, 0)] * 3, 1.0)
        assert len(neighbourhood(idx, Point2(0, 0), 1.0)) == 3

    def test_excludes_far_point(self):
        idx = build_index([Point2(0, 0), Point2(2, 0)], 1.0)
        assert neighbourhood(idx, Point2(0, 0), 1.0) == [Point2(0, 0)]

    def test_boundary_inclusive_compass(self):
        pts = [
            Point2(math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)) for k in range(8)
        ]
        idx = build_index(pts, 1.0)
        assert len(neighbourhood(idx, Point2(0, 0), 1.0)) == 8

    def test_matches_brute_force_1000(self):
        rng = random.Random(42)
        pts = random_points(rng, 1000)
        idx = build_index(pts, 0.05)
        for _ in range(50):
            probe = Point2(rng.random(), rng.random())
            got = neighbourhood(idx, probe, 0.05)
            want = sorted(
                (q for q in pts if distance(probe, q) <= 0.05), key=lambda p: (p.x, p.y)
            )
            assert got == want

    def test_matches_brute_force_500(self):
        rng = random.Random(7)
        pts = random_points(rng, 500)
        idx = build_index(pts, 0.08)
        for _ in range(20):
            probe = pts[rng.randrange(len(pts))]
            got = neighbourhood(idx, probe, 0.08)
            want = sorted(
                (q for q in pts if distance(probe, q) <= 0.08), key=lambda p: (p.x, p.y)
            )
            assert got == want


class TestSegmentIntersection:
    def test_symmetric_cross(self):
        p = segments_intersect(
            Segment(Point2(0, 0), Point2(2, 2)), Segment(Point2(0, 2), Point2(2, 0))
        )
        assert p is not None
        assert distance(p, Point2(1, 1)) < 1e-9

    def test_parallel_disjoint(self):
        p = segments_intersect(
            Segment(Point2(0, 0), Point2(1, 0)), Segment(Point2(0, 1), Point2(1, 1))
        )
        assert p is None

    def test_t_touch(self):
        p = segments_intersect(
            Segment(Point2(0, 0), Point2(2, 0)), Segment(Point2(1, 0), Point2(1, 5))
        )
        assert p == Point2(1, 0)

    def test_collinear_overlap_midpoint(self):
        p = segments_intersect(
            Segment(Point2(0, 0), Point2(2, 0)), Segment(Point2(1, 0), Point2(3, 0))
        )
        assert p is not None
        assert distance(p, Point2(1.5, 0)) < 1e-9

    def test_degenerate_rejected(self):
        with pytest.raises(GeometryError):
            Segment(Point2(1, 1), Point2(1, 1))


def brute_force_pairs(segments):
    out = set()
    for i in range(len(segments)):
        for j in range(i + 1, len(segments)):
            if segments_intersect(segments[i], segments[j]) is not None:
                out.add((i, j))
    return out


class TestSweep:
    def test_two_crossing(self):
        segs = [Segment(Point2(0, 0), Point2(2, 2)), Segment(Point2(0, 2), Point2(2, 0))]
        assert [pair for pair, _ in sweep_intersections(segs)] == [(0, 1)]

    def test_disjoint_horizontals(self):
        segs = [Segment(Point2(0, i), Point2(1, i)) for i in range(10)]
        assert sweep_intersections(segs) == []

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_all_pairs(self, seed):
        rng = random.Random(seed)
        segs = []
        while len(segs) < 200:
            a, b = random_points(rng, 2)
            if a != b:
                segs.append(Segment(a, b))
        got = {pair for pair, _ in sweep_intersections(segs)}
        assert got == brute_force_pairs(segs)

    def test_500_segments(self):
        rng = random.Random(9)
        segs = []
        while len(segs) < 500:
            a = Point2(rng.random(), rng.random())
            b = Point2(a.x + rng.uniform(-0.1, 0.1), a.y + rng.uniform(-0.1, 0.1))
            if a != b:
                segs.append(Segment(a, b))
        got = {pair for pair, _ in sweep_intersections(segs)}
        assert got == brute_force_pairs(segs)


class TestPolygon:
    def test_orientation_normalised(self):
        cw = Polygon((Point2(0, 0), Point2(0, 1), Point2(1, 1), Point2(1, 0)))
        assert polygon_area(cw) == 1.0

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError):
            Polygon((Point2(0, 0), Point2(1, 0)))

    def test_self_intersecting_rejected(self):
        with pytest.raises(GeometryError):
            Polygon((Point2(0, 0), Point2(1, 1), Point2(1, 0), Point2(0, 1)))

    def test_zero_area_rejected(self):
        with pytest.raises(GeometryError):
            Polygon((Point2(0, 0), Point2(1, 0), Point2(2, 0)))

    def test_point_in_polygon(self):
        assert point_in_polygon(Point2(0.5, 0.5), UNIT_SQUARE)
        assert not point_in_polygon(Point2(2, 2), UNIT_SQUARE)
        assert point_in_polygon(Point2(1, 0.5), UNIT_SQUARE)

    def test_area_square(self):
        assert polygon_area(UNIT_SQUARE) == 1.0

    def test_area_triangle(self):
        tri = Polygon((Point2(0, 0), Point2(1, 0), Point2(0, 1)))
        assert polygon_area(tri) == 0.5

    def test_area_360gon(self):
        n = 360
        poly = Polygon(
            tuple(
                Point2(math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n))
                for i in range(n)
            )
        )
        analytic = n * math.sin(2 * math.pi / n) / 2
        assert polygon_area(poly) == pytest.approx(analytic, abs=1e-9)
        assert polygon_area(poly) == pytest.approx(math.pi, abs=2e-4)

    def test_point_polygon_distance(self):
        assert point_polygon_distance(Point2(0.5, 0.5), UNIT_SQUARE) == 0.0
        assert point_polygon_distance(Point2(2, 0.5), UNIT_SQUARE) == pytest.approx(1.0)


def mc_area(polys, rng, samples=10**6):
    xs = [v.x for p in polys for v in p.vertices]
    ys = [v.y for p in polys for v in p.vertices]
    minx, maxx, miny, maxy = min(xs), max(xs), min(ys), max(ys)
    box = (maxx - minx) * (maxy - miny)
    hits = 0
    for _ in range(samples):
        pt = Point2(rng.uniform(minx, maxx), rng.uniform(miny, maxy))
        if any(point_in_polygon(pt, p) for p in polys):
            hits += 1
    return box * hits / samples


class TestUnion:
    def test_idempotent(self):
        res = polygon_union(UNIT_SQUARE, UNIT_SQUARE)
        assert len(res) == 1
        assert polygon_area(res[0]) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint(self):
        far = Polygon((Point2(5, 5), Point2(6, 5), Point2(6, 6), Point2(5, 6)))
        res = polygon_union(UNIT_SQUARE, far)
        assert len(res) == 2
        assert sorted(polygon_area(p) for p in res) == [1.0, 1.0]

    def test_half_overlap_area(self):
        shifted = Polygon((Point2(0.5, 0), Point2(1.5, 0), Point2(1.5, 1), Point2(0.5, 1)))
        res = polygon_union(UNIT_SQUARE, shifted)
        assert len(res) == 1
        area = polygon_area(res[0])
        assert area == pytest.approx(1.5, abs=1e-6)
        # Monte-Carlo confirmation of the frozen value (4 sigma tolerance)
        est = mc_area(res, random.Random(0), samples=10**6)
        assert est == pytest.approx(1.5, abs=0.004)

    def test_containment(self):
        big = Polygon((Point2(-1, -1), Point2(4, -1), Point2(4, 4), Point2(-1, 4)))
        res = polygon_union(big, UNIT_SQUARE)
        assert len(res) == 1
        assert polygon_area(res[0]) == pytest.approx(25.0)

    def test_commutative_and_bounded(self):
        rng = random.Random(5)
        for _ in range(60):
            a = random_star(rng)
            b = random_star(rng)
            ab = polygon_union(a, b)
            ba = polygon_union(b, a)
            canon_ab = sorted(canonical_ring(p) for p in ab)
            canon_ba = sorted(canonical_ring(p) for p in ba)
            assert canon_ab == canon_ba
            total = sum(polygon_area(p) for p in ab)
            assert total >= max(polygon_area(a), polygon_area(b)) - 1e-9
            assert total <= polygon_area(a) + polygon_area(b) + 1e-9


def random_star(rng, lo=-1.0, hi=1.0):
    cx, cy = rng.uniform(lo, hi), rng.uniform(lo, hi)
    r = rng.uniform(0.5, 1.5)
    n = rng.randint(3, 12)
    pts = []
    for i in range(n):
        ang = 2 * math.pi * i / n + rng.uniform(-0.1, 0.1)
        rr = r * (1 + rng.uniform(-0.4, 0.4))
        pts.append(Point2(cx + rr * math.cos(ang), cy + rr * math.sin(ang)))
    return Polygon(tuple(pts))


def canonical_ring(poly):
    verts = [(round(v.x, 9), round(v.y, 9)) for v in poly.vertices]
    k = verts.index(min(verts))
    return tuple(verts[k:] + verts[:k])


class TestRingHelpers:
    def test_convex_hull_square(self):
        pts = [Point2(0, 0), Point2(2, 0), Point2(1, 1), Point2(0, 2), Point2(2, 2)]
        hull = convex_hull(pts)
        assert {(h.x, h.y) for h in hull} == {(0, 0), (2, 0), (0, 2), (2, 2)}

    def test_simplify_keeps_shape(self):
        n = 120
        ring = Polygon(
            tuple(
                Point2(5 * math.cos(2 * math.pi * i / n), 5 * math.sin(2 * math.pi * i / n))
                for i in range(n)
            )
        )
        simp = simplify_ring(ring, 0.2)
        assert len(simp.vertices) < n / 3
        assert all(point_polygon_distance(v, simp) <= 0.2 + 1e-9 for v in ring.vertices)

    def test_simplify_zero_tolerance_is_identity(self):
        assert simplify_ring(UNIT_SQUARE, 0.0) is UNIT_SQUARE

    def test_inflate_contains_original(self):
        rng = random.Random(11)
        for _ in range(40):
            poly = random_star(rng)
            grown = inflate_polygon(poly, 0.1)
            assert all(point_in_polygon(v, grown) for v in poly.vertices)
            assert polygon_area(grown) >= polygon_area(poly) - 1e-9

    def test_bounding_triangle(self):
        rng = random.Random(3)
        pts = random_points(rng, 30, -5, 5)
        tri = bounding_triangle(pts, 0.5)
        assert len(tri.vertices) == 3
        assert all(point_in_polygon(p, tri) for p in pts)

    def test_vector_norm(self):
        assert Vector2(3, 4).norm() == 5.0
