"""Non-maximum suppression and hysteresis thresholding."""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import ndimage

from .detectors import GradientMap

__all__ = [
    "non_max_suppress",
    "hysteresis",
    "normalize_magnitude",
    "bilinear_sample",
    "canny_auto_thresholds",
    "sobel_auto_threshold",
    "TIE_TOLERANCE",
]

TIE_TOLERANCE = 1e-12
_EIGHT = np.ones((3, 3), dtype=bool)


def bilinear_sample(img: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at fractional positions, clamped to the image."""
    h, w = img.shape
    rows = np.clip(rows, 0.0, h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    r0 = np.minimum(np.floor(rows).astype(int), h - 2) if h > 1 else np.zeros_like(rows, int)
    c0 = np.minimum(np.floor(cols).astype(int), w - 2) if w > 1 else np.zeros_like(cols, int)
    fr = rows - r0
    fc = cols - c0
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bottom = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return top * (1 - fr) + bottom * fr


def non_max_suppress(gm: GradientMap, radius: float = 1.5) -> np.ndarray:
    """Keep pixels whose magnitude strictly exceeds both neighbours along the gradient.

    Neighbours sit at ``+-radius`` along the orientation and are bilinearly
    interpolated (clamped at the border). A pixel must beat each neighbour
    by more than ``TIE_TOLERANCE``; surviving pixels keep their magnitude.
    """
    if radius < 1:
        raise ValueError(f"NMS radius must be >= 1, got {radius}")
    mag = np.asarray(gm.magnitude, dtype=np.float64)
    theta = gm.orientation
    h, w = mag.shape
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    dr = radius * np.sin(theta)
    dc = radius * np.cos(theta)
    ahead = bilinear_sample(mag, rr + dr, cc + dc)
    behind = bilinear_sample(mag, rr - dr, cc - dc)
    keep = (mag > ahead + TIE_TOLERANCE) & (mag > behind + TIE_TOLERANCE)
    return np.where(keep, mag, 0.0)


def hysteresis(nms: np.ndarray, low: float, high: float) -> np.ndarray:
    """Two-threshold linking with 8-connectivity; returns a ``uint8`` 0/1 map."""
    if low < 0 or high < 0:
        raise ValueError("thresholds must be non-negative")
    if low > high:
        raise ValueError(f"low threshold {low} exceeds high threshold {high}")
    nms = np.asarray(nms, dtype=np.float64)
    candidates = nms >= low
    labels, count = ndimage.label(candidates, structure=_EIGHT)
    if count == 0:
        return np.zeros(nms.shape, dtype=np.uint8)
    seeded = np.unique(labels[(nms >= high) & candidates])
    seeded = seeded[seeded > 0]
    return np.isin(labels, seeded).astype(np.uint8)


def normalize_magnitude(values: np.ndarray, peak: Optional[float] = None) -> np.ndarray:
    """Rescale to ``[0, 100]`` by the peak value (all-zero input stays zero)."""
    values = np.asarray(values, dtype=np.float64)
    if peak is None:
        peak = float(values.max()) if values.size else 0.0
    if peak <= 0:
        return np.zeros_like(values)
    return values * (100.0 / peak)


def canny_auto_thresholds(
    magnitude: np.ndarray, not_edge_fraction: float = 0.7, ratio: float = 0.4
) -> tuple[float, float]:
    """Automatic Canny thresholds in the style of common toolboxes.

    The high threshold is the ``not_edge_fraction`` quantile of a 64-bin
    histogram of the peak-normalised magnitude, the low one ``ratio`` times
    that. Values are returned in the units of ``magnitude``.
    """
    mag = np.asarray(magnitude, dtype=np.float64)
    peak = float(mag.max()) if mag.size else 0.0
    if peak <= 0:
        return 0.0, 0.0
    counts, edges = np.histogram(mag / peak, bins=64, range=(0.0, 1.0))
    cum = np.cumsum(counts)
    idx = int(np.argmax(cum > not_edge_fraction * mag.size))
    high = (idx + 1) / 64.0
    return ratio * high * peak, high * peak


def sobel_auto_threshold(magnitude: np.ndarray, scale: float = 4.0) -> float:
    """Single cut-off ``sqrt(scale * mean(magnitude^2))``."""
    mag = np.asarray(magnitude, dtype=np.float64)
    return float(np.sqrt(scale * np.mean(mag**2))) if mag.size else 0.0
