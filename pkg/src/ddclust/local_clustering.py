"""Per-node clustering for phase one: DBSCAN and K-Means on a dataset fragment."""

import math
import random
from collections import deque
from dataclasses import dataclass, field

from ddclust.geometry import GridIndex, Point2, build_index, distance

NOISE = -1


@dataclass(frozen=True)
class DatasetFragment:
    """The slice of the dataset held by one simulated node."""

    node_id: int
    points: list[Point2]

    def __post_init__(self):
        if not self.points:
            raise ValueError(f"fragment for node {self.node_id} is empty")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class KMeansParams:
    k: int
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ClusteringResult:
    """Per-point labels (cluster id or NOISE) plus the number of clusters."""

    labels: list[int]
    cluster_count: int

    def __post_init__(self):
        seen = {l for l in self.labels if l != NOISE}
        if seen and (min(seen) < 0 or max(seen) >= self.cluster_count):
            raise ValueError("cluster ids must be contiguous in [0, cluster_count)")

    def noise_count(self) -> int:
        return sum(1 for l in self.labels if l == NOISE)

    def members(self, cluster_id: int) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == cluster_id]


def _neighbour_ranks(points, index, i, eps):
    return [rank for rank, _ in index.query(points[i], eps)]


def _matrix_neighbour_lists(points: list[Point2], eps: float) -> list[list[int]]:
    # instrumented mode: materialise all pairwise distances first
    import numpy as np

    coords = np.array([(p.x, p.y) for p in points])
    d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    mask = d2 <= eps * eps
    order = np.array(sorted(range(len(points)), key=lambda i: (points[i].x, points[i].y, i)))
    return [order[mask[i][order]].tolist() for i in range(len(points))]


def dbscan(
    fragment: DatasetFragment, params: DbscanParams, use_distance_matrix: bool = False
) -> ClusteringResult:
    """Density-based clustering of a fragment.

    A point is core when its eps-ball (itself included) holds at least
    min_pts points. Clusters are grown breadth-first in deterministic
    (x, y, rank) neighbour order, so border points go to the first core
    point that reaches them.
    """
    points = fragment.points
    n = len(points)
    if use_distance_matrix:
        neighbour_lists = _matrix_neighbour_lists(points, params.eps)
        neigh = lambda i: neighbour_lists[i]
    else:
        index = build_index(points, params.eps)
        neigh = lambda i: _neighbour_ranks(points, index, i, params.eps)

    UNSET = -2
    labels = [UNSET] * n
    cid = 0
    for i in range(n):
        if labels[i] != UNSET:
            continue
        seeds = neigh(i)
        if len(seeds) < params.min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cid
        queue = deque(seeds)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid  # claimed as border point
                continue
            if labels[j] != UNSET:
                continue
            labels[j] = cid
            reach = neigh(j)
            if len(reach) >= params.min_pts:
                queue.extend(reach)
        cid += 1
    return ClusteringResult(labels, cid)


def kmeans(fragment: DatasetFragment, params: KMeansParams) -> ClusteringResult:
    """Lloyd iterations from k seeded distinct starting points.

    Every point gets a cluster (no noise). An emptied cluster is re-seeded
    with the point currently farthest from its assigned centroid.
    """
    points = fragment.points
    n = len(points)
    k = params.k
    if k > n:
        raise ValueError(f"k={k} exceeds fragment size {n}")

    rng = random.Random(params.seed)
    centroids = [points[i] for i in rng.sample(range(n), k)]
    labels = [0] * n

    for _ in range(params.max_iterations):
        changed = False
        for i, p in enumerate(points):
            best, best_d = 0, math.inf
            for c in range(k):
                d = (p.x - centroids[c].x) ** 2 + (p.y - centroids[c].y) ** 2
                if d < best_d:
                    best, best_d = c, d
            if labels[i] != best:
                labels[i] = best
                changed = True

        sums = [[0.0, 0.0, 0] for _ in range(k)]
        for i, p in enumerate(points):
            s = sums[labels[i]]
            s[0] += p.x
            s[1] += p.y
            s[2] += 1
        for c in range(k):
            sx, sy, cnt = sums[c]
            if cnt:
                centroids[c] = Point2(sx / cnt, sy / cnt)
        empties = [c for c in range(k) if sums[c][2] == 0]
        for c in empties:
            far = max(
                range(n),
                key=lambda i: (
                    (points[i].x - centroids[labels[i]].x) ** 2
                    + (points[i].y - centroids[labels[i]].y) ** 2,
                    -i,
                ),
            )
            centroids[c] = points[far]
            labels[far] = c
            changed = True

        if not changed:
            break
    return ClusteringResult(labels, k)


def relabel_canonical(result: ClusteringResult) -> ClusteringResult:
    """Renumber clusters by the index of their first member point."""
    mapping: dict[int, int] = {}
    for label in result.labels:
        if label != NOISE and label not in mapping:
            mapping[label] = len(mapping)
    labels = [NOISE if l == NOISE else mapping[l] for l in result.labels]
    return ClusteringResult(labels, result.cluster_count)


def suggest_dbscan_params(fragment: DatasetFragment, seed: int = 0) -> DbscanParams:
    """Heuristic defaults: eps = 2x mean 4-NN distance, min_pts = 4.

    A convenience for unlabeled data; benchmark configs normally carry
    explicit per-node parameters.
    """
    points = fragment.points
    n = len(points)
    if n < 5:
        span = max(
            distance(points[i], points[j]) for i in range(n) for j in range(i + 1, n)
        ) if n > 1 else 1.0
        return DbscanParams(eps=max(span, 1e-6), min_pts=min(n, 4))

    sample = points if n <= 512 else points[:: max(1, n // 512)]
    total = 0.0
    for p in sample:
        dists = sorted(distance(p, q) for q in points if q is not p)
        total += dists[3]
    mean_4nn = total / len(sample)
    return DbscanParams(eps=max(2 * mean_4nn, 1e-9), min_pts=4)
