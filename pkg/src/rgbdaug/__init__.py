"""Deterministic RGB-D augmentation: render virtual objects into real
RGB-D captures with consistent color, depth, and shadows."""

from .compositing import (
    AugmentedPair,
    NormalizationStats,
    REFERENCE_STATS,
    RgbdPair,
    composite,
    compute_channel_stats,
    normalize_colors,
)
from .errors import (
    ConfigError,
    DatasetError,
    EmptyMaskError,
    MeshParseError,
    RgbdAugError,
)
from .geometry import AffineTransform, Mesh, PinholeCamera
from .metrics import DepthMetrics, EvalConfig, compute_metrics, evaluate_directory
from .sampling import AugmentationParams, SceneSpec, sample_scene

__version__ = "0.1.0"

__all__ = [
    "AffineTransform",
    "AugmentationParams",
    "AugmentedPair",
    "ConfigError",
    "DatasetError",
    "DepthMetrics",
    "EmptyMaskError",
    "EvalConfig",
    "Mesh",
    "MeshParseError",
    "NormalizationStats",
    "PinholeCamera",
    "REFERENCE_STATS",
    "RgbdAugError",
    "RgbdPair",
    "SceneSpec",
    "composite",
    "compute_channel_stats",
    "compute_metrics",
    "evaluate_directory",
    "normalize_colors",
    "sample_scene",
    "__version__",
]
