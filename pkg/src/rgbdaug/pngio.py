"""PNG readers/writers for RGB-D pairs.

Color is 8-bit RGB; depth is 16-bit grayscale integer millimeters with
0 meaning no reading. The PNG encoder settings are pinned so identical
arrays always produce identical files.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

from .errors import DatasetError

_PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 3, cv2.IMWRITE_PNG_STRATEGY,
               cv2.IMWRITE_PNG_STRATEGY_DEFAULT]


def load_rgb_png(path: str | os.PathLike) -> np.ndarray:
    data = cv2.imread(os.fspath(path), cv2.IMREAD_COLOR)
    if data is None:
        raise DatasetError(f"could not read color image {os.fspath(path)!r}")
    return cv2.cvtColor(data, cv2.COLOR_BGR2RGB)


def save_rgb_png(path: str | os.PathLike, rgb: np.ndarray) -> None:
    if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DatasetError("color image must be uint8 (H, W, 3)")
    ok = cv2.imwrite(os.fspath(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR), _PNG_PARAMS)
    if not ok:
        raise DatasetError(f"could not write color image {os.fspath(path)!r}")


def load_depth_png(path: str | os.PathLike) -> np.ndarray:
    data = cv2.imread(os.fspath(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise DatasetError(f"could not read depth image {os.fspath(path)!r}")
    if data.dtype != np.uint16 or data.ndim != 2:
        raise DatasetError(
            f"depth image {os.fspath(path)!r} must be single-channel 16-bit"
        )
    return data


def save_depth_png(path: str | os.PathLike, depth_mm: np.ndarray) -> None:
    if depth_mm.dtype != np.uint16 or depth_mm.ndim != 2:
        raise DatasetError("depth image must be uint16 (H, W)")
    ok = cv2.imwrite(os.fspath(path), depth_mm, _PNG_PARAMS)
    if not ok:
        raise DatasetError(f"could not write depth image {os.fspath(path)!r}")
