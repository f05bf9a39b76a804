"""Semi-dense stereo disparity from an iteratively refined piecewise-planar mesh."""

from . import kernels
from .core import DisparityMap, PipelineConfig, census_cost, census_transform, check_gray, gradient_mask
from .errors import (
    ConfigError,
    CorruptFile,
    DegenerateTriangle,
    DimensionTooSmall,
    EmptyCloud,
    FewerThanThreePoints,
    InvalidPlane,
    NegativeDisparity,
    NoOverlap,
    SeedingFailed,
    StereoError,
    UnsupportedFormat,
)
from .evaluation import AccuracyReport, TimingReport, accuracy, benchmark
from .io import CameraCalib, export_pointcloud, read_disparity, read_gray, write_disparity, write_gray
from .mesh import DisparityMesh, DisparityPlane, fit_plane, interpolate, triangulate
from .pipeline import (
    IterationRecord,
    OccupancyGrid,
    RefinementState,
    RunResult,
    cost_evaluation,
    disparity_refinement,
    occupancy_schedule,
    run,
    support_resampling,
)
from .sparse import Candidates, SupportPoint, detect_candidates, match_epipolar, sparse_stereo
from .synth import PlanarScene, Region, parse_scene, render, wta_oracle

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "CameraCalib",
    "Candidates",
    "ConfigError",
    "CorruptFile",
    "DegenerateTriangle",
    "DimensionTooSmall",
    "DisparityMap",
    "DisparityMesh",
    "DisparityPlane",
    "EmptyCloud",
    "FewerThanThreePoints",
    "InvalidPlane",
    "IterationRecord",
    "NegativeDisparity",
    "NoOverlap",
    "OccupancyGrid",
    "PipelineConfig",
    "PlanarScene",
    "RefinementState",
    "Region",
    "RunResult",
    "SeedingFailed",
    "StereoError",
    "SupportPoint",
    "TimingReport",
    "UnsupportedFormat",
    "accuracy",
    "benchmark",
    "census_cost",
    "census_transform",
    "check_gray",
    "cost_evaluation",
    "detect_candidates",
    "disparity_refinement",
    "export_pointcloud",
    "fit_plane",
    "gradient_mask",
    "interpolate",
    "kernels",
    "match_epipolar",
    "occupancy_schedule",
    "parse_scene",
    "read_disparity",
    "read_gray",
    "render",
    "run",
    "sparse_stereo",
    "support_resampling",
    "triangulate",
    "wta_oracle",
    "write_disparity",
    "write_gray",
]
