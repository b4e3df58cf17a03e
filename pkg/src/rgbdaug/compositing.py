"""Depth compositing and color statistics matching.

Real depth is stored as 16-bit integer millimeters (0 = no reading);
rendered depth arrives in scene units and is converted with the scene's
unit scale. The per-pixel depth test runs on the integer millimeter
values that end up in storage, so a later audit of stored files can
reconstruct every replacement decision exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .render import VirtualLayer

# Channel statistics of the common large-scale image corpus used to
# standardize network inputs (RGB order).
REFERENCE_MEAN = (123.675, 116.28, 103.53)
REFERENCE_STD = (58.395, 57.12, 57.375)

STD_EPS = 1e-6

DEPTH_MM_MAX = 65535


@dataclass
class RgbdPair:
    """A real color image with its aligned depth map.

    ``depth_mm`` is uint16 integer millimeters, 0 where the sensor had
    no reading.
    """

    rgb: np.ndarray  # (H, W, 3) uint8
    depth_mm: np.ndarray  # (H, W) uint16

    def validate(self) -> None:
        if self.rgb.dtype != np.uint8 or self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ConfigError("rgb must be uint8 (H, W, 3)")
        if self.depth_mm.dtype != np.uint16 or self.depth_mm.shape != self.rgb.shape[:2]:
            raise ConfigError("depth_mm must be uint16 (H, W) matching rgb")

    @property
    def depth_meters(self) -> np.ndarray:
        return self.depth_mm.astype(np.float64) / 1000.0


@dataclass
class AugmentedPair:
    """Composite of a real pair and one rendered virtual layer."""

    rgb: np.ndarray  # (H, W, 3) uint8
    depth_mm: np.ndarray  # (H, W) uint16
    visible_mask: np.ndarray  # (H, W) bool: virtual content won the depth test
    coverage: float  # visible_mask fraction of the frame


def virtual_depth_mm(depth_units: np.ndarray, mask: np.ndarray,
                     unit_scale: float) -> np.ndarray:
    """Convert rendered depth (scene units) to integer millimeters.

    Masked pixels get at least 1 mm so a stored virtual surface can
    never alias the 0 = no-reading code.
    """
    mm = np.rint(depth_units * unit_scale * 1000.0)
    mm = np.clip(mm, 0, DEPTH_MM_MAX).astype(np.uint16)
    mm[mask] = np.maximum(mm[mask], 1)
    mm[~mask] = 0
    return mm


def composite(real: RgbdPair, layer: VirtualLayer, unit_scale: float) -> AugmentedPair:
    """Depth-test the virtual layer into a real pair.

    A virtual pixel wins where the real sensor had no reading or where
    the virtual surface is strictly nearer, both judged in integer
    millimeters. Losing virtual pixels leave color and depth untouched.
    """
    real.validate()
    if layer.mask.shape != real.depth_mm.shape:
        raise ConfigError("layer and real pair have different shapes")
    if unit_scale <= 0:
        raise ConfigError("unit_scale must be positive")

    dv_mm = virtual_depth_mm(layer.depth, layer.mask, unit_scale)
    src_mm = real.depth_mm
    replace = layer.mask & ((src_mm == 0) | (dv_mm < src_mm))

    out_rgb = real.rgb.copy()
    out_rgb[replace] = layer.rgb[replace]
    out_depth = np.where(replace, dv_mm, src_mm).astype(np.uint16)

    coverage = float(replace.sum()) / float(replace.size)
    return AugmentedPair(
        rgb=out_rgb, depth_mm=out_depth, visible_mask=replace, coverage=coverage,
    )


def check_coverage(coverage: float, bounds) -> bool:
    """Inclusive coverage acceptance test."""
    lo, hi = bounds
    return lo <= coverage <= hi


def audit_composite(real: RgbdPair, result: AugmentedPair) -> bool:
    """Reconstruct the replacement decisions from stored values alone.

    True when the stored depth map implies exactly the recorded mask:
    a pixel was replaced iff it filled a hole or moved strictly nearer.
    """
    src = real.depth_mm
    out = result.depth_mm
    implied = ((src == 0) & (out != 0)) | (out < src)
    if not np.array_equal(implied, result.visible_mask):
        return False
    # Where nothing was replaced, both stored channels must be untouched.
    kept = ~implied
    if not np.all(out[kept] == src[kept]):
        return False
    return bool(np.all(result.rgb[kept] == real.rgb[kept]))


@dataclass
class NormalizationStats:
    """Per-channel mean and population standard deviation."""

    mean: tuple
    std: tuple
    pixel_count: int = 0

    def as_arrays(self):
        return (np.asarray(self.mean, dtype=np.float64),
                np.asarray(self.std, dtype=np.float64))


REFERENCE_STATS = NormalizationStats(mean=REFERENCE_MEAN, std=REFERENCE_STD)


def compute_channel_stats(images) -> NormalizationStats:
    """Exact streaming channel statistics over uint8 images.

    Accepts one image or an iterable. Sums and squared sums are held in
    float64, which is exact for 8-bit data up to ~10^5 full-resolution
    frames, so the result does not depend on chunking order.
    """
    if isinstance(images, np.ndarray):
        images = [images]
    total = np.zeros(3)
    total_sq = np.zeros(3)
    count = 0
    for img in images:
        if img.ndim != 3 or img.shape[2] != 3:
            raise ConfigError("channel stats need (H, W, 3) images")
        as_f = img.reshape(-1, 3).astype(np.float64)
        total += as_f.sum(axis=0)
        total_sq += (as_f * as_f).sum(axis=0)
        count += as_f.shape[0]
    if count == 0:
        raise ConfigError("channel stats need at least one pixel")
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    return NormalizationStats(
        mean=tuple(mean), std=tuple(np.sqrt(var)), pixel_count=count,
    )


def normalize_colors(image: np.ndarray,
                     source: NormalizationStats | None = None,
                     reference: NormalizationStats = REFERENCE_STATS) -> np.ndarray:
    """Affinely remap each channel's statistics onto the reference.

    With no explicit source statistics, the image's own are used. A
    (near-)constant channel maps to the reference mean. Output is
    rounded half-to-even and clamped back to uint8.
    """
    if image.dtype != np.uint8:
        raise ConfigError("normalize_colors expects a uint8 image")
    if source is None:
        source = compute_channel_stats(image)
    src_mean, src_std = source.as_arrays()
    ref_mean, ref_std = reference.as_arrays()

    x = image.astype(np.float64)
    scale = np.where(src_std < STD_EPS, 0.0, ref_std / np.maximum(src_std, STD_EPS))
    out = (x - src_mean) * scale + ref_mean
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
