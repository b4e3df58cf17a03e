"""Monocular depth estimation metrics.

The usual six: RMSE, absolute relative error, mean log10 error, and the
three threshold accuracies delta < 1.25^k. Ground-truth pixels are valid
when positive and inside the configured depth range; predictions are
clamped into that range by default. Directory evaluation averages
per-image metrics, weighting every image equally.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyMaskError
from .pngio import load_depth_png

# Evaluation crop (rows, cols) commonly applied to 640x480 indoor frames.
EIGEN_CROP = (45, 471, 41, 601)

CSV_FIELDS = ("file", "rmse", "delta1", "delta2", "delta3", "rel", "log10")


@dataclass(frozen=True)
class EvalConfig:
    """Validity range and evaluation options."""

    min_depth: float = 1e-3
    max_depth: float = 10.0
    clamp_pred: bool = True
    eigen_crop: bool = False

    def validate(self) -> None:
        if not 0 < self.min_depth < self.max_depth:
            raise ConfigError("need 0 < min_depth < max_depth")


@dataclass
class DepthMetrics:
    """Metric values over one image (or averaged over many)."""

    rmse: float
    rel: float
    log10: float
    delta1: float
    delta2: float
    delta3: float
    valid_pixels: int

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse, "rel": self.rel, "log10": self.log10,
            "delta1": self.delta1, "delta2": self.delta2, "delta3": self.delta3,
            "valid_pixels": self.valid_pixels,
        }


def valid_mask(gt: np.ndarray, config: EvalConfig) -> np.ndarray:
    """Pixels that participate in evaluation."""
    mask = (gt > 0) & (gt >= config.min_depth) & (gt <= config.max_depth)
    if config.eigen_crop:
        r0, r1, c0, c1 = EIGEN_CROP
        if gt.shape[0] < r1 or gt.shape[1] < c1:
            raise ConfigError(
                f"image shape {gt.shape} is too small for the evaluation crop"
            )
        crop = np.zeros_like(mask)
        crop[r0:r1, c0:c1] = True
        mask &= crop
    return mask


def compute_metrics(pred: np.ndarray, gt: np.ndarray,
                    config: EvalConfig = EvalConfig()) -> DepthMetrics:
    """Metrics between predicted and ground-truth depth, both in meters.

    Raises EmptyMaskError when no ground-truth pixel is valid.
    """
    config.validate()
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ConfigError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")

    mask = valid_mask(gt, config)
    n = int(mask.sum())
    if n == 0:
        raise EmptyMaskError("no valid ground-truth pixels to evaluate")

    p = pred[mask]
    g = gt[mask]
    if config.clamp_pred:
        p = np.clip(p, config.min_depth, config.max_depth)
    elif np.any(p <= 0):
        raise ConfigError("unclamped predictions must be strictly positive")

    err = p - g
    rmse = float(np.sqrt(np.mean(err * err)))
    rel = float(np.mean(np.abs(err) / g))
    log10 = float(np.mean(np.abs(np.log10(p) - np.log10(g))))

    ratio = np.maximum(p / g, g / p)
    delta1 = float(np.mean(ratio < 1.25))
    delta2 = float(np.mean(ratio < 1.25 ** 2))
    delta3 = float(np.mean(ratio < 1.25 ** 3))

    return DepthMetrics(
        rmse=rmse, rel=rel, log10=log10,
        delta1=delta1, delta2=delta2, delta3=delta3, valid_pixels=n,
    )


@dataclass
class EvalReport:
    """Directory evaluation: per-image rows plus the equal-weight average."""

    per_image: list  # (relative path, DepthMetrics), sorted by path
    summary: DepthMetrics
    missing_pred: list  # in gt but not in pred
    extra_pred: list  # in pred but not in gt

    def to_dict(self) -> dict:
        return {
            "summary": self.summary.to_dict(),
            "image_count": len(self.per_image),
            "missing_pred": list(self.missing_pred),
            "extra_pred": list(self.extra_pred),
            "per_image": [
                {"file": name, **m.to_dict()} for name, m in self.per_image
            ],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_FIELDS)
            for name, m in self.per_image:
                writer.writerow([
                    name, repr(m.rmse), repr(m.delta1), repr(m.delta2),
                    repr(m.delta3), repr(m.rel), repr(m.log10),
                ])


def _depth_files(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p
        for p in sorted(root.rglob("*_depth.png"))
    }


def evaluate_directory(pred_root, gt_root,
                       config: EvalConfig = EvalConfig()) -> EvalReport:
    """Evaluate matching depth files under two directory trees.

    Files pair up by identical relative path. Images present on only
    one side are reported, not fatal; images whose valid mask is empty
    are skipped and reported the same way.
    """
    pred_root = Path(os.fspath(pred_root))
    gt_root = Path(os.fspath(gt_root))
    pred_files = _depth_files(pred_root)
    gt_files = _depth_files(gt_root)

    missing = sorted(set(gt_files) - set(pred_files))
    extra = sorted(set(pred_files) - set(gt_files))

    per_image = []
    for rel in sorted(set(gt_files) & set(pred_files)):
        gt_m = load_depth_png(gt_files[rel]).astype(np.float64) / 1000.0
        pred_m = load_depth_png(pred_files[rel]).astype(np.float64) / 1000.0
        try:
            per_image.append((rel, compute_metrics(pred_m, gt_m, config)))
        except EmptyMaskError:
            missing.append(rel + " (empty valid mask)")

    if not per_image:
        raise EmptyMaskError("no image pair produced a valid evaluation mask")

    summary = DepthMetrics(
        rmse=float(np.mean([m.rmse for _, m in per_image])),
        rel=float(np.mean([m.rel for _, m in per_image])),
        log10=float(np.mean([m.log10 for _, m in per_image])),
        delta1=float(np.mean([m.delta1 for _, m in per_image])),
        delta2=float(np.mean([m.delta2 for _, m in per_image])),
        delta3=float(np.mean([m.delta3 for _, m in per_image])),
        valid_pixels=int(sum(m.valid_pixels for _, m in per_image)),
    )
    return EvalReport(
        per_image=per_image, summary=summary,
        missing_pred=missing, extra_pred=extra,
    )
