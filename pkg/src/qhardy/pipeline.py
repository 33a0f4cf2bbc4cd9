"""End-to-end edge detection: lift, detector, thinning, thresholding."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Union

import numpy as np

from .detectors import Detector, DetectorConfig, GradientMap, compute_gradient
from .postprocess import (
    canny_auto_thresholds,
    hysteresis,
    non_max_suppress,
    normalize_magnitude,
    sobel_auto_threshold,
)
from .scale_space import ScalarField, as_field

__all__ = [
    "DEFAULT_SCALE",
    "DEFAULT_NMS_RADIUS",
    "DEFAULT_THRESHOLDS",
    "RunConfig",
    "EdgeResult",
    "StageError",
    "detect_edges",
    "default_thresholds",
]

DEFAULT_SCALE = 0.3
DEFAULT_NMS_RADIUS = 1.5
DEFAULT_THRESHOLDS = {
    Detector.QDLA: (3.8, 5.5),
    Detector.MQDLA: (3.8, 5.5),
    Detector.SDLA: (3.8, 5.5),
    Detector.MSDLA: (15.0, 27.0),
    Detector.SOBEL: (3.8, 5.5),
    Detector.CANNY: (3.8, 5.5),
}


def default_thresholds(detector: Union[Detector, str]) -> tuple[float, float]:
    return DEFAULT_THRESHOLDS[Detector(detector)]


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one detection run.

    ``low``/``high`` left as ``None`` pick the detector's default pair.
    With ``normalize`` the NMS magnitudes are rescaled to ``[0, 100]``
    before thresholding. ``auto_baseline`` makes Sobel and Canny pick
    their own thresholds from the magnitude histogram unless explicit
    thresholds are given.
    """

    detector: Detector = Detector.QDLA
    y1: float = DEFAULT_SCALE
    y2: float = DEFAULT_SCALE
    nms_radius: float = DEFAULT_NMS_RADIUS
    low: Optional[float] = None
    high: Optional[float] = None
    normalize: bool = True
    auto_baseline: bool = False
    eps: Optional[float] = None
    truncation: float = 8.0
    canny_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "detector", Detector(self.detector))
        if not (self.y1 > 0 and self.y2 > 0):
            raise ValueError(f"scales must be positive, got y1={self.y1}, y2={self.y2}")
        if self.nms_radius < 1:
            raise ValueError(f"nms_radius must be >= 1, got {self.nms_radius}")
        if self.truncation < 4:
            raise ValueError(f"truncation must be >= 4 scale units, got {self.truncation}")
        if self.canny_sigma <= 0:
            raise ValueError("canny_sigma must be positive")
        for name in ("low", "high"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} threshold must be non-negative, got {v}")
        low, high = self.thresholds()
        if low > high:
            raise ValueError(f"low threshold {low} exceeds high threshold {high}")

    def thresholds(self) -> tuple[float, float]:
        d_low, d_high = default_thresholds(self.detector)
        low = d_low if self.low is None else self.low
        high = d_high if self.high is None else self.high
        return low, high

    @property
    def uses_auto_thresholds(self) -> bool:
        return (
            self.auto_baseline
            and self.detector in (Detector.SOBEL, Detector.CANNY)
            and self.low is None
            and self.high is None
        )

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(self.detector, self.y1, self.y2, self.eps, self.canny_sigma)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, Detector) else v
        return out

    def evolve(self, **changes) -> "RunConfig":
        return replace(self, **changes)


@dataclass
class EdgeResult:
    edges: np.ndarray
    gradient: GradientMap
    nms: np.ndarray
    thresholds: tuple[float, float]
    timings: dict[str, float] = field(default_factory=dict)


def _stage(name: str, timings: dict[str, float], fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        out = fn(*args, **kwargs)
    except Exception as exc:
        raise StageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    return out


def _thresholds(cfg: RunConfig, magnitude: np.ndarray) -> tuple[float, float]:
    if cfg.uses_auto_thresholds:
        if cfg.detector is Detector.CANNY:
            return canny_auto_thresholds(magnitude)
        t = sobel_auto_threshold(magnitude)
        return t, t
    return cfg.thresholds()


def detect_edges(img: Union[ScalarField, np.ndarray], cfg: RunConfig = RunConfig()) -> EdgeResult:
    """Gradient map, NMS and hysteresis for one image; records per-stage seconds."""
    f = as_field(img)
    timings: dict[str, float] = {}
    gm = _stage(
        "gradient", timings, compute_gradient, f, cfg.detector_config(), truncation=cfg.truncation
    )
    nms = _stage("nms", timings, non_max_suppress, gm, cfg.nms_radius)
    if cfg.normalize and not cfg.uses_auto_thresholds:
        nms = normalize_magnitude(nms)
    low, high = _thresholds(cfg, gm.magnitude)
    edges = _stage("hysteresis", timings, hysteresis, nms, low, high)
    return EdgeResult(edges, gm, nms, (low, high), timings)
