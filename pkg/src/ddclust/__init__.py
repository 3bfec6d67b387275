"""Two-phase distributed clustering toolkit for 2-D spatial data.

Phase one clusters each node's fragment locally (DBSCAN or K-Means) and
reduces every local cluster to a contour polygon plus a few internal
representatives.  Phase two merges the contours over a simulated leader
tree until the root holds the global clusters.
"""

from ddclust.geometry import GeometryError, GridIndex, Point2, Polygon, Segment, Vector2
from ddclust.local_clustering import (
    NOISE,
    ClusteringResult,
    DatasetFragment,
    DbscanParams,
    KMeansParams,
    dbscan,
    kmeans,
)
from ddclust.boundary import BoundaryConfig, Contour, LocalModel, build_local_model
from ddclust.aggregation import GlobalModel, aggregate
from ddclust.simnet import NodeConfig, NodeDescriptor, RunTrace, run_ddc
from ddclust.datasets import LabeledDataset, adjusted_rand_index, generate_benchmark, load_csv

__version__ = "0.1.0"

__all__ = [
    "BoundaryConfig",
    "ClusteringResult",
    "Contour",
    "DatasetFragment",
    "DbscanParams",
    "GeometryError",
    "GlobalModel",
    "GridIndex",
    "KMeansParams",
    "LabeledDataset",
    "LocalModel",
    "NodeConfig",
    "NodeDescriptor",
    "NOISE",
    "Point2",
    "Polygon",
    "RunTrace",
    "Segment",
    "Vector2",
    "adjusted_rand_index",
    "aggregate",
    "build_local_model",
    "dbscan",
    "generate_benchmark",
    "kmeans",
    "load_csv",
    "run_ddc",
]
