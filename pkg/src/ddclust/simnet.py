"""Simulated distributed run: fragments, a degree-D leader tree, level-wise merging.

Nodes are logical workers exchanging immutable models through an in-memory
channel with byte accounting; the claims under test concern information
flow, not transport.
"""

import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ddclust.aggregation import GlobalModel, aggregate
from ddclust.boundary import BoundaryConfig, LocalModel, build_local_model
from ddclust.geometry import Point2
from ddclust.local_clustering import (
    ClusteringResult,
    DatasetFragment,
    DbscanParams,
    KMeansParams,
    dbscan,
    kmeans,
    suggest_dbscan_params,
)

MESSAGE_HEADER_BYTES = 64
BYTES_PER_POINT = 16  # two 8-byte coordinates

PARTITION_STRATEGIES = ("random", "spatial-stripes", "skewed")


class DdcRunError(Exception):
    """A module error annotated with the node and tree level it came from."""


@dataclass(frozen=True)
class NodeDescriptor:
    id: int
    capacity: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.capacity) or self.capacity < 0:
            raise ValueError(f"capacity must be a finite non-negative score, got {self.capacity}")


@dataclass(frozen=True)
class NodeConfig:
    """One node's local algorithm choice and parameters."""

    descriptor: NodeDescriptor
    algorithm: str  # "dbscan" | "kmeans"
    dbscan_params: DbscanParams | None = None
    kmeans_params: KMeansParams | None = None

    def __post_init__(self):
        if self.algorithm not in ("dbscan", "kmeans"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "kmeans" and self.kmeans_params is None:
            raise ValueError("kmeans nodes need kmeans_params")


@dataclass(frozen=True)
class TreeTopology:
    """Leader tree: levels[0] is the root group, levels[-1] the leaf grouping."""

    degree: int
    levels: list[list[list[int]]]
    height: int


@dataclass(frozen=True)
class Message:
    from_node: int
    to_node: int
    payload: LocalModel  # merged payloads keep each contour's original source node
    representative_count: int
    byte_size: int


@dataclass
class RunTrace:
    messages: list[Message] = field(default_factory=list)
    per_phase_times: dict = field(default_factory=dict)
    total_input_points: int = 0
    total_representatives_sent: int = 0

    @property
    def reduction(self) -> float:
        if self.total_input_points == 0:
            return 0.0
        return 1.0 - self.total_representatives_sent / self.total_input_points

    @property
    def reduction_ratio(self) -> float:
        if self.total_input_points == 0:
            return 0.0
        return self.total_representatives_sent / self.total_input_points

    def structural_digest(self) -> tuple:
        """Everything except wall-clock timings, for determinism checks."""
        return (
            tuple(
                (m.from_node, m.to_node, m.representative_count, m.byte_size)
                for m in self.messages
            ),
            self.total_input_points,
            self.total_representatives_sent,
        )


def elect_leader(group: list[NodeDescriptor]) -> int:
    """Highest capacity wins; ties go to the smallest id."""
    if not group:
        raise ValueError("cannot elect a leader from an empty group")
    return min(group, key=lambda n: (-n.capacity, n.id)).id


def build_tree(
    nodes: list[NodeDescriptor], degree: int, shuffle_seed: int | None = None
) -> TreeTopology:
    """Group nodes by ascending id into groups of <= degree per level.

    Each group's leader advances until one root remains. A shuffle seed
    randomises the grouping order, for grouping-insensitivity experiments.
    """
    if not nodes:
        raise ValueError("need at least one node")
    if degree < 2:
        raise ValueError(f"tree degree must be >= 2, got {degree}")
    ids = sorted(n.id for n in nodes)
    if len(set(ids)) != len(ids):
        raise ValueError("node ids must be unique")
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(ids)
    by_id = {n.id: n for n in nodes}

    rounds: list[list[list[int]]] = []
    current = ids
    while len(current) > 1:
        groups = [current[i : i + degree] for i in range(0, len(current), degree)]
        rounds.append(groups)
        current = [elect_leader([by_id[i] for i in g]) for g in groups]
    if not rounds:
        return TreeTopology(degree=degree, levels=[[list(ids)]], height=0)
    return TreeTopology(degree=degree, levels=list(reversed(rounds)), height=len(rounds))


def partition(
    dataset: list[Point2], n_nodes: int, strategy: str = "random", seed: int = 0
) -> list[DatasetFragment]:
    """Split the dataset into disjoint covering fragments.

    random: seeded uniform assignment per point; spatial-stripes:
    contiguous x-sorted blocks; skewed: geometric sizes (ratio 2) with
    seeded random membership.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if not dataset:
        raise ValueError("dataset is empty")
    if n_nodes > len(dataset):
        raise ValueError(f"more nodes ({n_nodes}) than points ({len(dataset)})")
    if strategy not in PARTITION_STRATEGIES:
        raise ValueError(f"unknown partition strategy {strategy!r}")

    if strategy == "spatial-stripes":
        order = sorted(range(len(dataset)), key=lambda i: (dataset[i].x, dataset[i].y, i))
        base, rem = divmod(len(dataset), n_nodes)
        buckets, at = [], 0
        for k in range(n_nodes):
            size = base + (1 if k < rem else 0)
            buckets.append([dataset[i] for i in order[at : at + size]])
            at += size
    elif strategy == "skewed":
        weights = [2 ** (n_nodes - 1 - i) for i in range(n_nodes)]
        sizes = _apportion(weights, len(dataset))
        order = list(range(len(dataset)))
        random.Random(seed).shuffle(order)
        buckets, at = [], 0
        for size in sizes:
            buckets.append([dataset[i] for i in order[at : at + size]])
            at += size
    else:
        rng = random.Random(seed)
        buckets = [[] for _ in range(n_nodes)]
        for p in dataset:
            buckets[rng.randrange(n_nodes)].append(p)
        for k in range(n_nodes):  # uniform assignment can leave a node empty
            while not buckets[k]:
                donor = max(range(n_nodes), key=lambda j: len(buckets[j]))
                buckets[k].append(buckets[donor].pop())

    return [DatasetFragment(node_id=k, points=pts) for k, pts in enumerate(buckets)]


def _apportion(weights: list[int], total: int) -> list[int]:
    n = len(weights)
    wsum = sum(weights)
    raw = [w * total / wsum for w in weights]
    sizes = [max(1, math.floor(r)) for r in raw]
    order = sorted(range(n), key=lambda i: raw[i] - math.floor(raw[i]), reverse=True)
    i = 0
    while sum(sizes) < total:
        sizes[order[i % n]] += 1
        i += 1
    while sum(sizes) > total:
        j = max(range(n), key=lambda k: sizes[k])
        sizes[j] -= 1
    return sizes


def _cluster_fragment(fragment, config, use_distance_matrix, run_seed):
    t0 = time.perf_counter()
    if config.algorithm == "dbscan":
        params = config.dbscan_params or suggest_dbscan_params(fragment)
        result = dbscan(fragment, params, use_distance_matrix=use_distance_matrix)
    else:
        kp = config.kmeans_params
        seeded = KMeansParams(
            k=kp.k, max_iterations=kp.max_iterations, seed=kp.seed + 7919 * fragment.node_id
        )
        result = kmeans(fragment, seeded)
    return result, time.perf_counter() - t0


def _reduce_fragment(fragment, result, boundary_config, sample_rate, run_seed):
    t0 = time.perf_counter()
    model = build_local_model(
        fragment,
        result,
        boundary_config,
        sample_rate=sample_rate,
        seed=run_seed + 31 * fragment.node_id,
    )
    return model, time.perf_counter() - t0


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("DDC_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def run_ddc(
    dataset: list[Point2],
    node_configs: list[NodeConfig],
    degree: int,
    boundary_config: BoundaryConfig,
    partition_strategy: str = "random",
    seed: int = 0,
    sample_rate: float = 0.0,
    use_distance_matrix: bool = False,
    merge_dilation: float = 0.0,
) -> tuple[GlobalModel, RunTrace]:
    """Execute both phases end to end and return the root's model plus a trace.

    Phase one clusters every fragment in parallel and reduces it to a local
    model. Phase two walks the leader tree: per level, every non-leader
    sends its model to the group leader, which merges what it received and
    ascends. Deterministic for fixed inputs and seed.
    """
    if not node_configs:
        raise ValueError("need at least one node config")
    ids = [c.descriptor.id for c in node_configs]
    if len(set(ids)) != len(ids):
        raise ValueError("node ids must be unique")
    configs = sorted(node_configs, key=lambda c: c.descriptor.id)

    t_start = time.perf_counter()
    raw_fragments = partition(dataset, len(configs), partition_strategy, seed)
    fragments = [
        DatasetFragment(node_id=cfg.descriptor.id, points=frag.points)
        for cfg, frag in zip(configs, raw_fragments)
    ]

    def phase_one(pair):
        cfg, frag = pair
        try:
            result, t_cluster = _cluster_fragment(frag, cfg, use_distance_matrix, seed)
            model, t_reduce = _reduce_fragment(
                frag, result, boundary_config, sample_rate, seed
            )
        except Exception as exc:
            raise DdcRunError(f"phase one failed on node {frag.node_id}: {exc}") from exc
        return model, t_cluster, t_reduce

    tasks = list(zip(configs, fragments))
    workers = _worker_count(len(tasks))
    if workers == 1:
        phase_results = [phase_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            phase_results = list(pool.map(phase_one, tasks))

    models = {m.node_id: m for m, _, _ in phase_results}
    trace = RunTrace(total_input_points=len(dataset))
    trace.per_phase_times["local_clustering_max"] = max(t for _, t, _ in phase_results)
    trace.per_phase_times["reduction_max"] = max(t for _, _, t in phase_results)

    descriptors = [c.descriptor for c in configs]
    by_id = {d.id: d for d in descriptors}
    tree = build_tree(descriptors, degree)

    level_times = []
    global_model: GlobalModel | None = None
    for level in range(tree.height - 1, -1, -1):
        t0 = time.perf_counter()
        groups = tree.levels[level]
        for group in groups:
            leader = elect_leader([by_id[i] for i in group])
            inbox = []
            for member in group:
                model = models.pop(member)
                inbox.append(model)
                if member != leader:
                    reps = model.representative_count()
                    trace.messages.append(
                        Message(
                            from_node=member,
                            to_node=leader,
                            payload=model,
                            representative_count=reps,
                            byte_size=BYTES_PER_POINT * reps + MESSAGE_HEADER_BYTES,
                        )
                    )
                    trace.total_representatives_sent += reps
            try:
                merged = aggregate(inbox, dilation=merge_dilation)
            except Exception as exc:
                raise DdcRunError(
                    f"aggregation failed at level {level}, leader {leader}: {exc}"
                ) from exc
            if level == 0:
                global_model = merged
            else:
                models[leader] = LocalModel(
                    node_id=leader,
                    contours=merged.clusters,
                    internal_reps=merged.internal_reps,
                )
        level_times.append(time.perf_counter() - t0)

    if global_model is None:  # single node: the tree has no merging rounds
        only = models[descriptors[0].id]
        global_model = aggregate([only], dilation=merge_dilation)
    trace.per_phase_times["aggregation_per_level"] = level_times
    trace.per_phase_times["total"] = time.perf_counter() - t_start
    return global_model, trace
