"""Edge-strength maps from lifted images, plus Sobel and Canny baselines.

Each detector returns a :class:`GradientMap` with two response channels;
``g1`` belongs to the t1 (column) direction or first scale, ``g2`` to t2
(rows) or the second scale.

* QDLA  - spatial gradient of the attenuation ``ln A``.
* MQDLA - the same quantity expressed through scale derivatives of the
  phase (equal to QDLA for a zero-free Hardy function).
* SDLA  - scale gradient of the attenuation.
* MSDLA - the same quantity expressed through spatial derivatives of the
  phase (equal to SDLA for a zero-free Hardy function).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy.ndimage import correlate, gaussian_filter

from .features import default_eps, hardy_jet
from .scale_space import HardyFrame, ScalarField, as_field, hardy_lift, hardy_lift_derivs

__all__ = [
    "Detector",
    "GradientMap",
    "DetectorConfig",
    "qdla",
    "mqdla",
    "sdla",
    "msdla",
    "sobel",
    "canny_gradient",
    "compute_gradient",
    "FEATURE_DETECTORS",
]


class Detector(str, enum.Enum):
    QDLA = "qdla"
    MQDLA = "mqdla"
    SDLA = "sdla"
    MSDLA = "msdla"
    SOBEL = "sobel"
    CANNY = "canny"


FEATURE_DETECTORS = (Detector.QDLA, Detector.MQDLA, Detector.SDLA, Detector.MSDLA)


@dataclass(frozen=True)
class GradientMap:
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self) -> None:
        if np.shape(self.g1) != np.shape(self.g2):
            raise ValueError("gradient channels differ in shape")

    @cached_property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.g1, self.g2)

    @cached_property
    def orientation(self) -> np.ndarray:
        return np.arctan2(self.g2, self.g1)

    @property
    def shape(self) -> tuple[int, int]:
        return np.shape(self.g1)


@dataclass(frozen=True)
class DetectorConfig:
    detector: Detector = Detector.QDLA
    y1: float = 0.3
    y2: float = 0.3
    eps: Optional[float] = None
    canny_sigma: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "detector", Detector(self.detector))
        if not (self.y1 > 0 and self.y2 > 0):
            raise ValueError("scales must be positive")


def _guarded_ratio(num: np.ndarray, den: np.ndarray, eps: float) -> np.ndarray:
    ok = den > eps * eps
    return np.where(ok, num / np.where(ok, den, 1.0), 0.0)


def qdla(frame: HardyFrame, eps: Optional[float] = None) -> GradientMap:
    """``d(ln A)/dt1`` and ``d(ln A)/dt2`` from central differences of ``r`` and ``|m|``."""
    if eps is None:
        eps = default_eps(frame)
    h = frame.spacing
    r = frame.r
    mn = frame.vector_modulus()
    den = r**2 + mn**2
    out = []
    for axis in (1, 0):
        num = r * np.gradient(r, h, axis=axis) + mn * np.gradient(mn, h, axis=axis)
        out.append(_guarded_ratio(num, den, eps))
    return GradientMap(*out)


def mqdla(
    frame: HardyFrame,
    dframes: tuple[HardyFrame, HardyFrame],
    eps: Optional[float] = None,
) -> GradientMap:
    """Phase form of the spatial attenuation gradient, from scale derivatives.

    ``g1`` is the i part of ``(d e^p / dy1) e^-p`` and ``g2`` the j part of
    ``e^-p (d e^p / dy2)``.
    """
    jet = hardy_jet(frame, dframes, eps)
    return GradientMap(jet.left_rate("y1")[0], jet.right_rate("y2")[1])


def sdla(
    frame: HardyFrame,
    dframes: tuple[HardyFrame, HardyFrame],
    eps: Optional[float] = None,
) -> GradientMap:
    """``d(ln A)/dy1`` and ``d(ln A)/dy2`` from analytic scale derivatives."""
    jet = hardy_jet(frame, dframes, eps)
    return GradientMap(jet.da("y1"), jet.da("y2"))


def msdla(frame: HardyFrame, eps: Optional[float] = None) -> GradientMap:
    """Phase form of the scale attenuation gradient, from spatial derivatives.

    The ``r`` derivative in the first channel is taken along t1.
    """
    jet = hardy_jet(frame, None, eps)
    return GradientMap(-jet.left_rate("t1")[0], -jet.right_rate("t2")[1])


_SOBEL_T1 = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_T2 = _SOBEL_T1.T


def sobel(img: Union[ScalarField, np.ndarray]) -> GradientMap:
    """Unnormalised 3x3 Sobel responses with replicate borders."""
    data = as_field(img).data
    return GradientMap(
        correlate(data, _SOBEL_T1, mode="nearest"),
        correlate(data, _SOBEL_T2, mode="nearest"),
    )


def canny_gradient(img: Union[ScalarField, np.ndarray], sigma: float = 1.0) -> GradientMap:
    """Gaussian smoothing followed by central differences."""
    f = as_field(img)
    smooth = gaussian_filter(f.data, sigma, mode="nearest")
    return GradientMap(
        np.gradient(smooth, f.spacing, axis=1),
        np.gradient(smooth, f.spacing, axis=0),
    )


def compute_gradient(
    img: Union[ScalarField, np.ndarray], config: DetectorConfig, **lift_kwargs
) -> GradientMap:
    """Run the lift (when needed) and the configured detector."""
    det = config.detector
    if det is Detector.SOBEL:
        return sobel(img)
    if det is Detector.CANNY:
        return canny_gradient(img, config.canny_sigma)
    frame = hardy_lift(img, config.y1, config.y2, **lift_kwargs)
    if det is Detector.QDLA:
        return qdla(frame, config.eps)
    if det is Detector.MSDLA:
        return msdla(frame, config.eps)
    dframes = hardy_lift_derivs(img, config.y1, config.y2, **lift_kwargs)
    if det is Detector.MQDLA:
        return mqdla(frame, dframes, config.eps)
    return sdla(frame, dframes, config.eps)
