"""Quaternion Hardy scale-space analysis of grayscale images.

A real image is lifted into a quaternion-valued function of two complex
variables by Poisson and conjugate-Poisson filtering. Its polar form gives
local amplitude, attenuation and phase features, which drive four
attenuation/phase based edge detectors.
"""
from .detectors import Detector, DetectorConfig, GradientMap, compute_gradient
from .evaluation import NoiseSpec, add_noise, psnr, snr, ssim
from .features import FeatureField, cr_residuals, local_features
from .pipeline import RunConfig, detect_edges
from .quaternion import Quaternion
from .scale_space import HardyFrame, ScalarField, hardy_lift, hardy_lift_derivs

__version__ = "0.1.0"

__all__ = [
    "Detector",
    "DetectorConfig",
    "GradientMap",
    "compute_gradient",
    "NoiseSpec",
    "add_noise",
    "psnr",
    "snr",
    "ssim",
    "FeatureField",
    "cr_residuals",
    "local_features",
    "RunConfig",
    "detect_edges",
    "Quaternion",
    "HardyFrame",
    "ScalarField",
    "hardy_lift",
    "hardy_lift_derivs",
]
