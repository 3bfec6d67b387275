"""Command line entry point: generate benchmarks, run the pipeline, compare variants.

Exit codes: 0 success, 1 usage error, 2 I/O or malformed input, 3 internal error.
"""

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ddclust.aggregation import GlobalModel
from ddclust.boundary import BoundaryConfig
from ddclust.datasets import (
    BENCHMARK_HINTS,
    BENCHMARK_KINDS,
    LabeledDataset,
    adjusted_rand_index,
    generate_benchmark,
    load_csv,
    save_csv,
    write_sidecar,
)
from ddclust.geometry import Point2, point_in_polygon, point_polygon_distance
from ddclust.local_clustering import NOISE, DbscanParams, KMeansParams
from ddclust.simnet import (
    PARTITION_STRATEGIES,
    DdcRunError,
    NodeConfig,
    NodeDescriptor,
    RunTrace,
    run_ddc,
)

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a",
]
NOISE_COLOR = "#999999"


class ConfigError(ValueError):
    """The run configuration file is malformed."""


@dataclass
class RunReport:
    global_cluster_count: int
    expected_clusters: int | None
    ari: float | None
    reduction_ratio: float
    phase_times: dict
    messages: int
    bytes: int


# ---------------------------------------------------------------------------
# Config handling


def recommended_config(kind: str, n_nodes: int = 5, degree: int = 3, seed: int = 0) -> dict:
    """A ready-to-run configuration tuned to a generated benchmark."""
    hints = BENCHMARK_HINTS[kind]
    eps5, min_pts5 = hints["node5"]
    eps = round(eps5 * math.sqrt(n_nodes / 5), 6)
    return {
        "degree": degree,
        "partition": {"strategy": "random", "seed": seed},
        "boundary": {
            "eps": eps,
            "aperture_deg": 80.0,
            "min_neighbours": 4,
            "sample_rate": 0.0,
        },
        "nodes": [
            {
                "id": i,
                "capacity": 1.0,
                "algorithm": "dbscan",
                "params": {"eps": eps, "min_pts": min_pts5},
            }
            for i in range(n_nodes)
        ],
        "compare": {"kmeans": {"k": hints["kmeans_k"], "max_iterations": 100, "seed": 0}},
    }


def parse_config(cfg: dict) -> dict:
    """Validate the config document and build the run_ddc inputs."""
    try:
        degree = int(cfg["degree"])
        part = cfg.get("partition", {})
        strategy = part.get("strategy", "random")
        seed = int(part.get("seed", 0))
        bnd = cfg["boundary"]
        boundary = BoundaryConfig(
            eps=float(bnd["eps"]),
            aperture=math.radians(float(bnd.get("aperture_deg", 90.0))),
            min_neighbours=int(bnd.get("min_neighbours", 4)),
        )
        sample_rate = float(bnd.get("sample_rate", 0.0))
        nodes = []
        for raw in cfg["nodes"]:
            algorithm = raw.get("algorithm", "dbscan")
            params = raw.get("params", {})
            dbscan_params = kmeans_params = None
            if algorithm == "dbscan":
                if params:
                    dbscan_params = DbscanParams(
                        eps=float(params["eps"]), min_pts=int(params["min_pts"])
                    )
            elif algorithm == "kmeans":
                kmeans_params = KMeansParams(
                    k=int(params["k"]),
                    max_iterations=int(params.get("max_iterations", 100)),
                    seed=int(params.get("seed", 0)),
                )
            nodes.append(
                NodeConfig(
                    descriptor=NodeDescriptor(
                        id=int(raw["id"]), capacity=float(raw.get("capacity", 1.0))
                    ),
                    algorithm=algorithm,
                    dbscan_params=dbscan_params,
                    kmeans_params=kmeans_params,
                )
            )
        if not nodes:
            raise KeyError("nodes")
        compare = cfg.get("compare", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    if strategy not in PARTITION_STRATEGIES:
        raise ConfigError(f"bad config: unknown partition strategy {strategy!r}")
    return {
        "degree": degree,
        "strategy": strategy,
        "seed": seed,
        "boundary": boundary,
        "sample_rate": sample_rate,
        "nodes": nodes,
        "merge_dilation": float(cfg.get("merge_dilation", 0.0)),
        "compare": compare,
    }


# ---------------------------------------------------------------------------
# Reporting helpers


def assign_labels(points: list[Point2], model: GlobalModel, tol: float = 0.0) -> list[int]:
    """Label each point by the global contour containing it (NOISE otherwise).

    Points within `tol` of a contour boundary count as members, matching
    the decimation slack of shipped contours.
    """
    boxes = [c.polygon.bbox() for c in model.clusters]
    labels = []
    for p in points:
        lab = NOISE
        for k, c in enumerate(model.clusters):
            minx, miny, maxx, maxy = boxes[k]
            if not (minx - tol <= p.x <= maxx + tol and miny - tol <= p.y <= maxy + tol):
                continue
            if point_in_polygon(p, c.polygon) or (
                tol > 0 and point_polygon_distance(p, c.polygon) <= tol
            ):
                lab = k
                break
        labels.append(lab)
    return labels


def build_report(
    model: GlobalModel, trace: RunTrace, dataset: LabeledDataset, boundary: BoundaryConfig
) -> tuple[RunReport, list[int]]:
    labels = assign_labels(dataset.points, model, tol=boundary.eps)
    ari = None
    if dataset.truth_labels is not None:
        ari = adjusted_rand_index(dataset.truth_labels, labels)
    report = RunReport(
        global_cluster_count=model.cluster_count(),
        expected_clusters=dataset.expected_clusters,
        ari=ari,
        reduction_ratio=trace.reduction_ratio,
        phase_times=trace.per_phase_times,
        messages=len(trace.messages),
        bytes=sum(m.byte_size for m in trace.messages),
    )
    return report, labels


def _svg_panel(points, labels, contours, x0, y0, side, title):
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    minx, maxx = min(xs), max(xs)
    miny, maxy = min(ys), max(ys)
    span = max(maxx - minx, maxy - miny) or 1.0
    scale = (side - 20) / span

    def tx(p):
        return x0 + 10 + (p.x - minx) * scale, y0 + 10 + (maxy - p.y) * scale

    bits = [
        f'<text x="{x0 + 10}" y="{y0 + side + 14}" font-size="12" '
        f'font-family="sans-serif">{title}</text>'
    ]
    r = max(0.8, side / 500)
    for p, lab in zip(points, labels):
        sx, sy = tx(p)
        color = NOISE_COLOR if lab == NOISE else PALETTE[lab % len(PALETTE)]
        bits.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="{r:.2f}" fill="{color}"/>')
    for k, contour in enumerate(contours):
        color = PALETTE[k % len(PALETTE)]
        coords = [tx(v) for v in contour.polygon.vertices]
        d = "M " + " L ".join(f"{x:.2f},{y:.2f}" for x, y in coords) + " Z"
        bits.append(
            f'<path d="{d}" fill="{color}" fill-opacity="0.08" stroke="{color}" '
            f'stroke-width="1.2"/>'
        )
    return "\n".join(bits)


def render_svg(path, panels, side: int = 520) -> None:
    """Write one SVG with the given (title, points, labels, contours) panels."""
    width = side * len(panels)
    height = side + 24
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, (title, points, labels, contours) in enumerate(panels):
        parts.append(_svg_panel(points, labels, contours, i * side, 0, side, title))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _trace_json(trace: RunTrace) -> dict:
    return {
        "messages": [
            {
                "from": m.from_node,
                "to": m.to_node,
                "representative_count": m.representative_count,
                "byte_size": m.byte_size,
            }
            for m in trace.messages
        ],
        "per_phase_times": trace.per_phase_times,
        "total_input_points": trace.total_input_points,
        "total_representatives_sent": trace.total_representatives_sent,
        "reduction_ratio": trace.reduction_ratio,
    }


# ---------------------------------------------------------------------------
# Commands


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = generate_benchmark(args.kind, args.seed)
    csv_path = out / f"{args.kind.lower()}.csv"
    save_csv(dataset, csv_path)
    noise_fraction = (
        sum(1 for l in dataset.truth_labels if l == NOISE) / len(dataset.points)
    )
    write_sidecar(dataset, csv_path, args.seed, noise_fraction)
    config_path = out / f"{args.kind.lower()}.config.json"
    config_path.write_text(
        json.dumps(recommended_config(args.kind, seed=args.seed), indent=2, sort_keys=True)
        + "\n"
    )
    print(f"wrote {csv_path} ({len(dataset.points)} points), sidecar and config")
    return 0


def _load_run_inputs(args):
    with open(args.config) as fh:
        cfg = parse_config(json.load(fh))
    dataset = load_csv(args.data)
    if dataset.expected_clusters is None:
        sidecar = Path(args.data).with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
            dataset = LabeledDataset(
                dataset.name, dataset.points, dataset.truth_labels,
                meta.get("expected_clusters"),
            )
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.partition is not None:
        cfg["strategy"] = args.partition
    return cfg, dataset


def _execute(cfg, dataset, use_distance_matrix=False, nodes=None):
    return run_ddc(
        dataset.points,
        nodes or cfg["nodes"],
        degree=cfg["degree"],
        boundary_config=cfg["boundary"],
        partition_strategy=cfg["strategy"],
        seed=cfg["seed"],
        sample_rate=cfg["sample_rate"],
        use_distance_matrix=use_distance_matrix,
        merge_dilation=cfg["merge_dilation"],
    )


def cmd_run(args) -> int:
    cfg, dataset = _load_run_inputs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model, trace = _execute(cfg, dataset, use_distance_matrix=args.with_distance_matrix)
    if args.with_distance_matrix:
        # mirror the two timing columns: re-run phase one without the matrix
        _, trace_plain = _execute(cfg, dataset, use_distance_matrix=False)
        trace.per_phase_times["local_clustering_max_with_matrix"] = trace.per_phase_times[
            "local_clustering_max"
        ]
        trace.per_phase_times["local_clustering_max_without_matrix"] = trace_plain.per_phase_times[
            "local_clustering_max"
        ]
    report, labels = build_report(model, trace, dataset, cfg["boundary"])

    (out / "report.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
    (out / "trace.json").write_text(json.dumps(_trace_json(trace), indent=2) + "\n")
    render_svg(out / "clusters.svg", [("global clusters", dataset.points, labels, model.clusters)])
    print(
        f"clusters={report.global_cluster_count} reduction={report.reduction_ratio:.4f} "
        f"messages={report.messages}"
        + (f" ari={report.ari:.4f}" if report.ari is not None else "")
    )
    return 0


def cmd_compare(args) -> int:
    cfg, dataset = _load_run_inputs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    km = cfg["compare"].get("kmeans", {})
    if not km:
        raise ConfigError("bad config: compare.kmeans section is required for compare")
    kmeans_params = KMeansParams(
        k=int(km["k"]),
        max_iterations=int(km.get("max_iterations", 100)),
        seed=int(km.get("seed", 0)),
    )
    dbscan_nodes = cfg["nodes"]
    if any(n.algorithm != "dbscan" for n in dbscan_nodes):
        raise ConfigError("bad config: compare expects dbscan node params in 'nodes'")
    kmeans_nodes = [
        NodeConfig(descriptor=n.descriptor, algorithm="kmeans", kmeans_params=kmeans_params)
        for n in dbscan_nodes
    ]

    table = {}
    panels = []
    for variant, nodes in (("ddc-dbscan", dbscan_nodes), ("ddc-kmeans", kmeans_nodes)):
        t0 = time.perf_counter()
        model, trace = _execute(cfg, dataset, nodes=nodes)
        elapsed = time.perf_counter() - t0
        report, labels = build_report(model, trace, dataset, cfg["boundary"])
        table[variant] = {
            "cluster_count": report.global_cluster_count,
            "ari": report.ari,
            "reduction": report.reduction_ratio,
            "time_s": round(elapsed, 4),
        }
        panels.append((variant, dataset.points, labels, model.clusters))

    (out / "compare.json").write_text(json.dumps(table, indent=2) + "\n")
    render_svg(out / "compare.svg", panels)
    for variant, row in table.items():
        ari = f"{row['ari']:.4f}" if row["ari"] is not None else "n/a"
        print(f"{variant}: clusters={row['cluster_count']} ari={ari} time={row['time_s']}s")
    return 0


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ddclust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[], help="write a benchmark CSV + sidecar + config")
    gen.add_argument("kind", choices=BENCHMARK_KINDS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--partition", choices=PARTITION_STRATEGIES, default=None)

    run = sub.add_parser("run", help="run the full pipeline on a dataset")
    common(run)
    run.add_argument("--with-distance-matrix", action="store_true")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run both variants on the same fragments")
    common(cmp_)
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"ddclust: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - map anything else to the internal code
        print(f"ddclust: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
