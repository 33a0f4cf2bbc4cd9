"""Poisson / conjugate-Poisson scale space of a real image.

An image ``f(t1, t2)`` is lifted to the four fields

    r  = f * P_y1(t1) P_y2(t2)      m1 = f * Q_y1(t1) P_y2(t2)
    m2 = f * P_y1(t1) Q_y2(t2)      m3 = f * Q_y1(t1) Q_y2(t2)

with ``P_y(t) = y / (pi (y^2 + t^2))`` and ``Q_y(t) = t / (pi (y^2 + t^2))``,
which sample the quaternion Hardy function ``r + i m1 + m2 j + i m3 j`` at
scales ``(y1, y2)``. Axis convention: ``t1`` runs along array axis 1
(columns), ``t2`` along array axis 0 (rows).

All filtering is done with truncated, sampled, separable kernels in the
spatial domain with replicate padding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np
from scipy.ndimage import convolve1d

__all__ = [
    "ScalarField",
    "KernelSpec",
    "HardyFrame",
    "as_field",
    "poisson_kernel",
    "conj_poisson_kernel",
    "kernel_dscale",
    "sample_kernel",
    "separable_filter",
    "hardy_lift",
    "hardy_lift_derivs",
    "DEFAULT_TRUNCATION",
]

KernelKind = Literal["poisson", "conj_poisson"]

#: Truncation radius as a multiple of the scale.
DEFAULT_TRUNCATION = 8.0
_MIN_TRUNCATION = 4.0
# Scales below this fraction of the grid step are rejected.
_MIN_SCALE_FRACTION = 0.01


@dataclass(frozen=True)
class ScalarField:
    """Real H x W grid with a uniform spacing ``h`` along both axes."""

    data: np.ndarray
    spacing: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"ScalarField needs a 2-D array, got ndim={arr.ndim}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "ScalarField":
        return ScalarField(data, self.spacing)


def as_field(img: Union[ScalarField, np.ndarray], spacing: Optional[float] = None) -> ScalarField:
    if isinstance(img, ScalarField):
        if spacing is not None and spacing != img.spacing:
            return ScalarField(img.data, spacing)
        return img
    return ScalarField(img, 1.0 if spacing is None else spacing)


@dataclass(frozen=True)
class KernelSpec:
    """Scale ``y`` and truncation radius ``R`` (same units as the grid spacing)."""

    scale: float
    truncation_radius: Optional[float] = None
    normalize: bool = True

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.truncation_radius is None:
            object.__setattr__(self, "truncation_radius", DEFAULT_TRUNCATION * self.scale)
        if self.truncation_radius < _MIN_TRUNCATION * self.scale * (1 - 1e-12):
            raise ValueError(
                f"truncation radius {self.truncation_radius} is below "
                f"{_MIN_TRUNCATION:g} x scale ({self.scale})"
            )


def poisson_kernel(spec: KernelSpec, t):
    """Continuous Poisson kernel ``y / (pi (y^2 + t^2))``, zero for ``|t| > R``."""
    t = np.asarray(t, dtype=np.float64)
    y = spec.scale
    val = y / (np.pi * (y * y + t * t))
    return np.where(np.abs(t) <= spec.truncation_radius, val, 0.0)


def conj_poisson_kernel(spec: KernelSpec, t):
    """Continuous conjugate Poisson kernel ``t / (pi (y^2 + t^2))``, zero for ``|t| > R``."""
    t = np.asarray(t, dtype=np.float64)
    y = spec.scale
    val = t / (np.pi * (y * y + t * t))
    return np.where(np.abs(t) <= spec.truncation_radius, val, 0.0)


def kernel_dscale(spec: KernelSpec, kind: KernelKind, t):
    """Closed-form derivative of a kernel with respect to its scale ``y``."""
    t = np.asarray(t, dtype=np.float64)
    y = spec.scale
    d = (y * y + t * t) ** 2
    if kind == "poisson":
        val = (t * t - y * y) / (np.pi * d)
    elif kind == "conj_poisson":
        val = -2.0 * y * t / (np.pi * d)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return np.where(np.abs(t) <= spec.truncation_radius, val, 0.0)


def _tap_positions(spec: KernelSpec, spacing: float) -> np.ndarray:
    if spec.scale < _MIN_SCALE_FRACTION * spacing:
        raise ValueError(
            f"scale {spec.scale} is below {_MIN_SCALE_FRACTION} x spacing ({spacing}); "
            "the kernel would be sub-grid"
        )
    # small slack so that R landing exactly on a grid node keeps that node
    n = int(np.floor(spec.truncation_radius / spacing + 1e-9))
    k = np.arange(-n, n + 1, dtype=np.float64)
    return k * spacing


def sample_kernel(
    spec: KernelSpec,
    spacing: float,
    kind: KernelKind = "poisson",
    derivative: bool = False,
) -> np.ndarray:
    """Discrete taps of a kernel on the grid ``k * spacing``, ``|k * spacing| <= R``.

    Taps carry the quadrature weight ``spacing`` so that a convolution sum
    approximates the integral. With ``spec.normalize`` the Poisson taps are
    rescaled to sum to one; its scale derivative is then the derivative of
    the normalised taps, which sums to zero. Conjugate-Poisson taps are
    never rescaled.
    """
    t = _tap_positions(spec, spacing)
    if kind == "poisson":
        p = poisson_kernel(spec, t) * spacing
        if not derivative:
            return p / p.sum() if spec.normalize else p
        dp = kernel_dscale(spec, "poisson", t) * spacing
        if not spec.normalize:
            return dp
        s = p.sum()
        return (dp - (p / s) * dp.sum()) / s
    if kind == "conj_poisson":
        if derivative:
            return kernel_dscale(spec, "conj_poisson", t) * spacing
        return conj_poisson_kernel(spec, t) * spacing
    raise ValueError(f"unknown kernel kind {kind!r}")


def separable_filter(
    img: Union[ScalarField, np.ndarray], k_t1: np.ndarray, k_t2: np.ndarray
) -> ScalarField:
    """Convolve with ``k_t1`` along t1 (axis 1), then ``k_t2`` along t2 (axis 0).

    Kernels are centred, odd-length and sampled at the image spacing.
    Borders are replicate-padded.
    """
    field_ = as_field(img)
    out = _filter2(field_.data, np.asarray(k_t1, float), np.asarray(k_t2, float))
    return field_.with_data(out)


def _check_kernel(k: np.ndarray, n: int, axis_name: str) -> None:
    if k.ndim != 1 or k.size % 2 != 1:
        raise ValueError(f"kernel along {axis_name} must be 1-D with an odd tap count")
    if k.size > 2 * n:
        raise ValueError(
            f"kernel along {axis_name} has {k.size} taps, more than twice the "
            f"image extent ({n})"
        )


def _conv(data: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    _check_kernel(k, data.shape[axis], "t1" if axis == 1 else "t2")
    return convolve1d(data, k, axis=axis, mode="nearest")


def _filter2(data: np.ndarray, k_t1: np.ndarray, k_t2: np.ndarray) -> np.ndarray:
    return _conv(_conv(data, k_t1, axis=1), k_t2, axis=0)


@dataclass
class HardyFrame:
    """The four lifted fields at scales ``(y1, y2)``.

    ``r`` is the scalar part, ``(m1, m2, m3)`` the i/j/k parts of the
    quaternion Hardy function ``r + i m1 + m2 j + i m3 j``.
    """

    r: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    y1: float
    y2: float
    spacing: float = 1.0
    radius: tuple[float, float] = field(default=(np.nan, np.nan))
    normalize: bool = True

    def __post_init__(self) -> None:
        shapes = {np.shape(a) for a in (self.r, self.m1, self.m2, self.m3)}
        if len(shapes) != 1:
            raise ValueError(f"HardyFrame fields disagree in shape: {shapes}")
        if not (self.y1 > 0 and self.y2 > 0):
            raise ValueError("scales must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.shape

    @property
    def m(self) -> np.ndarray:
        """Vector part stacked as ``(3, H, W)``."""
        return np.stack([self.m1, self.m2, self.m3])

    def vector_modulus(self) -> np.ndarray:
        return np.sqrt(self.m1**2 + self.m2**2 + self.m3**2)

    def amplitude(self) -> np.ndarray:
        return np.sqrt(self.r**2 + self.m1**2 + self.m2**2 + self.m3**2)

    def as_quaternion(self) -> np.ndarray:
        """Stack as an ``(H, W, 4)`` quaternion array."""
        return np.stack([self.r, self.m1, self.m2, self.m3], axis=-1)

    def fields(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.r, self.m1, self.m2, self.m3


def _resolve_radius(radius, y1: float, y2: float, truncation: float) -> tuple[float, float]:
    if radius is None:
        return truncation * y1, truncation * y2
    if np.ndim(radius) == 0:
        return float(radius), float(radius)
    r1, r2 = radius
    return float(r1), float(r2)


def _specs(y1, y2, radius, truncation, normalize):
    if not (y1 > 0 and y2 > 0):
        raise ValueError(f"scales must be positive, got y1={y1}, y2={y2}")
    r1, r2 = _resolve_radius(radius, y1, y2, truncation)
    return KernelSpec(y1, r1, normalize), KernelSpec(y2, r2, normalize)


def hardy_lift(
    img: Union[ScalarField, np.ndarray],
    y1: float,
    y2: float,
    *,
    radius=None,
    truncation: float = DEFAULT_TRUNCATION,
    normalize: bool = True,
) -> HardyFrame:
    """Lift ``img`` into a :class:`HardyFrame` at scales ``(y1, y2)``.

    ``radius`` overrides the truncation radius (a float for both axes or a
    ``(R1, R2)`` pair); otherwise ``R = truncation * y`` per axis.
    """
    f = as_field(img)
    s1, s2 = _specs(y1, y2, radius, truncation, normalize)
    h = f.spacing
    p1 = sample_kernel(s1, h, "poisson")
    q1 = sample_kernel(s1, h, "conj_poisson")
    p2 = sample_kernel(s2, h, "poisson")
    q2 = sample_kernel(s2, h, "conj_poisson")
    fp = _conv(f.data, p1, axis=1)
    fq = _conv(f.data, q1, axis=1)
    return HardyFrame(
        r=_conv(fp, p2, axis=0),
        m1=_conv(fq, p2, axis=0),
        m2=_conv(fp, q2, axis=0),
        m3=_conv(fq, q2, axis=0),
        y1=float(y1),
        y2=float(y2),
        spacing=h,
        radius=(s1.truncation_radius, s2.truncation_radius),
        normalize=normalize,
    )


def hardy_lift_derivs(
    img: Union[ScalarField, np.ndarray],
    y1: float,
    y2: float,
    *,
    radius=None,
    truncation: float = DEFAULT_TRUNCATION,
    normalize: bool = True,
) -> tuple[HardyFrame, HardyFrame]:
    """Scale derivatives ``(d/dy1, d/dy2)`` of every field of :func:`hardy_lift`.

    The kernel along the differentiated axis is replaced by its analytic
    scale derivative; the truncation radius is held fixed.
    """
    f = as_field(img)
    s1, s2 = _specs(y1, y2, radius, truncation, normalize)
    h = f.spacing
    p1 = sample_kernel(s1, h, "poisson")
    q1 = sample_kernel(s1, h, "conj_poisson")
    p2 = sample_kernel(s2, h, "poisson")
    q2 = sample_kernel(s2, h, "conj_poisson")
    dp1 = sample_kernel(s1, h, "poisson", derivative=True)
    dq1 = sample_kernel(s1, h, "conj_poisson", derivative=True)
    dp2 = sample_kernel(s2, h, "poisson", derivative=True)
    dq2 = sample_kernel(s2, h, "conj_poisson", derivative=True)

    data = f.data
    fp = _conv(data, p1, axis=1)
    fq = _conv(data, q1, axis=1)
    fdp = _conv(data, dp1, axis=1)
    fdq = _conv(data, dq1, axis=1)
    meta = dict(
        y1=float(y1),
        y2=float(y2),
        spacing=h,
        radius=(s1.truncation_radius, s2.truncation_radius),
        normalize=normalize,
    )
    d1 = HardyFrame(
        r=_conv(fdp, p2, axis=0),
        m1=_conv(fdq, p2, axis=0),
        m2=_conv(fdp, q2, axis=0),
        m3=_conv(fdq, q2, axis=0),
        **meta,
    )
    d2 = HardyFrame(
        r=_conv(fp, dp2, axis=0),
        m1=_conv(fq, dp2, axis=0),
        m2=_conv(fp, dq2, axis=0),
        m3=_conv(fq, dq2, axis=0),
        **meta,
    )
    return d1, d2
