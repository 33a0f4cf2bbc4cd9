"""Polar-form local features of a lifted image and Cauchy-Riemann residuals.

Writing the lifted field as ``f = r + m = A exp(n theta)`` with unit vector
``n = m / |m|`` gives the local amplitude ``A``, the attenuation
``a = ln A``, the phase ``theta`` in ``[0, pi]`` and the phase vector
``p = n theta``.

For a zero-free Hardy function the left operator ``d/dt1 + i d/dy1`` and
the right operator ``d/dt2 + (d/dy2) j`` annihilate ``f``. Splitting those
identities into scalar and vector parts ties spatial derivatives of ``a``
to scale derivatives of the phase quantities and vice versa.
:func:`cr_residuals` evaluates each such identity on a discrete lift.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .quaternion import Quaternion, mul, modulus
from .scale_space import HardyFrame, ScalarField, as_field, hardy_lift, hardy_lift_derivs

__all__ = [
    "FeatureField",
    "CRResidualReport",
    "HardyJet",
    "default_eps",
    "local_features",
    "reconstruct",
    "hardy_jet",
    "cr_residuals",
    "quaternion_log",
    "cauchy_kernel_eval",
    "cauchy_log",
    "cauchy_log_closed_form",
    "cr_operator_residual",
]

_REL_EPS = 1e-9
VARIABLES = ("t1", "y1", "t2", "y2")


def default_eps(frame: HardyFrame) -> float:
    """Degeneracy guard relative to the largest amplitude in the frame."""
    peak = float(np.max(frame.amplitude())) if frame.r.size else 0.0
    return _REL_EPS * peak if peak > 0 else np.finfo(float).tiny


@dataclass
class FeatureField:
    A: np.ndarray
    a: np.ndarray
    theta: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return np.stack([self.p1, self.p2, self.p3])

    def phase_vector_norm(self) -> np.ndarray:
        return np.sqrt(self.p1**2 + self.p2**2 + self.p3**2)


def local_features(frame: HardyFrame, eps: Optional[float] = None) -> FeatureField:
    """Amplitude, attenuation, phase and phase vector of every pixel.

    The phase is ``atan2(|m|, r)`` so that it stays in ``[0, pi]`` for
    negative ``r``. Where ``|m| < eps`` the phase vector is zero; the
    attenuation is ``ln(max(A, eps))``.
    """
    if eps is None:
        eps = default_eps(frame)
    mn = frame.vector_modulus()
    A = np.sqrt(frame.r**2 + mn**2)
    a = np.log(np.maximum(A, eps))
    theta = np.arctan2(mn, frame.r)
    ok = mn >= eps
    scale = np.where(ok, theta / np.where(ok, mn, 1.0), 0.0)
    return FeatureField(A, a, theta, frame.m1 * scale, frame.m2 * scale, frame.m3 * scale)


def reconstruct(ff: FeatureField, eps: float = 1e-12):
    """Invert :func:`local_features`: returns ``(r, m1, m2, m3)``."""
    r = ff.A * np.cos(ff.theta)
    ok = ff.theta > eps
    scale = np.where(ok, ff.A * np.sin(ff.theta) / np.where(ok, ff.theta, 1.0), 0.0)
    return r, ff.p1 * scale, ff.p2 * scale, ff.p3 * scale


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.sum(u * v, axis=0)


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    )


@dataclass
class HardyJet:
    """A lifted frame together with its first derivatives in t1, y1, t2, y2.

    ``dr[v]`` is a ``(H, W)`` array and ``dm[v]`` a ``(3, H, W)`` array for
    each variable ``v`` that is available.
    """

    r: np.ndarray
    m: np.ndarray
    eps: float
    dr: dict = field(default_factory=dict)
    dm: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.mn = np.sqrt(_dot(self.m, self.m))
        self.A2 = self.r**2 + self.mn**2
        self.ok_A = self.A2 > self.eps**2
        self.ok_m = self.mn >= self.eps
        self.inv_A2 = np.where(self.ok_A, 1.0 / np.where(self.ok_A, self.A2, 1.0), 0.0)
        inv_mn = np.where(self.ok_m, 1.0 / np.where(self.ok_m, self.mn, 1.0), 0.0)
        self.inv_mn = inv_mn
        self.n = self.m * inv_mn
        self.sin2 = np.where(self.ok_m, self.mn**2 * self.inv_A2, 0.0)
        self.theta = np.arctan2(self.mn, self.r)

    def dn(self, v: str) -> np.ndarray:
        """Derivative of the unit direction ``m / |m|`` (zero where ``|m| < eps``)."""
        dm = self.dm[v]
        return (dm - self.n * _dot(self.n, dm)) * self.inv_mn

    def dmn(self, v: str) -> np.ndarray:
        return _dot(self.n, self.dm[v])

    def da(self, v: str) -> np.ndarray:
        """Derivative of the attenuation ``ln A`` (chain rule)."""
        return (self.r * self.dr[v] + _dot(self.m, self.dm[v])) * self.inv_A2

    def dtheta(self, v: str) -> np.ndarray:
        return (self.r * self.dmn(v) - self.mn * self.dr[v]) * self.inv_A2

    def _rotation_core(self, v: str) -> np.ndarray:
        return (self.r * self.dm[v] - self.m * self.dr[v]) * self.inv_A2

    def left_rate(self, v: str) -> np.ndarray:
        """Vector part of ``(d e^p) e^-p``."""
        return self._rotation_core(v) - self.sin2 * _cross(self.dn(v), self.n)

    def right_rate(self, v: str) -> np.ndarray:
        """Vector part of ``e^-p (d e^p)``."""
        return self._rotation_core(v) - self.sin2 * _cross(self.n, self.dn(v))

    def dp(self, v: str) -> np.ndarray:
        """Derivative of the phase vector ``p = n theta``."""
        return self.theta * self.dn(v) + self.n * self.dtheta(v)


def hardy_jet(
    frame: HardyFrame,
    dframes: Optional[tuple[HardyFrame, HardyFrame]] = None,
    eps: Optional[float] = None,
) -> HardyJet:
    """Collect t-derivatives (central differences) and optional scale derivatives."""
    if eps is None:
        eps = default_eps(frame)
    h = frame.spacing
    m = frame.m
    jet = HardyJet(frame.r, m, eps)
    jet.dr["t1"] = np.gradient(frame.r, h, axis=1)
    jet.dr["t2"] = np.gradient(frame.r, h, axis=0)
    jet.dm["t1"] = np.gradient(m, h, axis=2)
    jet.dm["t2"] = np.gradient(m, h, axis=1)
    if dframes is not None:
        for v, d in zip(("y1", "y2"), dframes):
            jet.dr[v] = d.r
            jet.dm[v] = d.m
    return jet


@dataclass
class CRResidualReport:
    """Residual fields of the generalised Cauchy-Riemann identities.

    ``res_t1``/``res_y1`` come from the scalar and i parts of the left
    identity in ``s1``; ``res_t2``/``res_y2`` from the scalar and j parts of
    the right identity in ``s2``. ``extra`` holds the remaining vector-part
    channels and ``phase_form`` the same four relations restated through the
    phase-vector derivatives.
    """

    res_t1: np.ndarray
    res_y1: np.ndarray
    res_t2: np.ndarray
    res_y2: np.ndarray
    extra: dict
    phase_form: dict
    max_interior: dict
    flagged: int
    mask: np.ndarray
    spacing: float

    def main_maxima(self) -> dict:
        return {k: self.max_interior[k] for k in ("t1", "y1", "t2", "y2")}


def _interior_mask(shape, border_px: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    b = border_px
    if 2 * b < shape[0] and 2 * b < shape[1]:
        mask[b : shape[0] - b, b : shape[1] - b] = True
    return mask


def cr_residuals(
    img: Union[ScalarField, np.ndarray],
    y1: float,
    y2: float,
    *,
    eps: Optional[float] = None,
    border: Optional[float] = None,
    radius=None,
    normalize: bool = False,
) -> CRResidualReport:
    """Evaluate the generalised Cauchy-Riemann identities on a lifted image.

    Spatial derivatives are central differences, scale derivatives come
    from :func:`hardy_lift_derivs`. By default the kernels span the whole
    image and the Poisson taps are not renormalised, so the discrete lift
    is an exact finite sum of holomorphic kernels and the residuals reduce
    to the finite-difference error.

    ``border`` is the excluded band width in the units of the spacing
    (default ``4 max(y1, y2)``). Pixels with vanishing amplitude inside the
    band-free region are counted in ``flagged``; they and pixels with
    ``|m| < eps`` are left out of the maxima.
    """
    f = as_field(img)
    h = f.spacing
    if radius is None:
        radius = (max(f.shape) - 1) * h
    frame = hardy_lift(f, y1, y2, radius=radius, normalize=normalize)
    dframes = hardy_lift_derivs(f, y1, y2, radius=radius, normalize=normalize)
    jet = hardy_jet(frame, dframes, eps)

    L_t1, L_y1 = jet.left_rate("t1"), jet.left_rate("y1")
    R_t2, R_y2 = jet.right_rate("t2"), jet.right_rate("y2")
    da = {v: jet.da(v) for v in VARIABLES}

    res = {
        "t1": da["t1"] - L_y1[0],
        "y1": da["y1"] + L_t1[0],
        "t2": da["t2"] - R_y2[1],
        "y2": da["y2"] + R_t2[1],
    }
    extra = {
        "t1_vec_j": L_t1[1] - L_y1[2],
        "t1_vec_k": L_t1[2] + L_y1[1],
        "t2_vec_i": R_t2[0] - R_y2[2],
        "t2_vec_k": R_t2[2] + R_y2[0],
    }

    def coro(v: str, right: bool) -> np.ndarray:
        dn = jet.dn(v)
        c, s = np.cos(jet.theta), np.sin(jet.theta)
        twist = _cross(jet.n, dn) if right else _cross(dn, jet.n)
        return jet.dp(v) - jet.theta * dn + s * c * dn - jet.sin2 * twist

    phase_form = {
        "t1": da["t1"] - coro("y1", False)[0],
        "t2": da["t2"] - coro("y2", True)[1],
        "y1": da["y1"] + coro("t1", False)[0],
        "y2": da["y2"] + coro("t2", True)[1],
    }

    if border is None:
        border = 4.0 * max(y1, y2)
    interior = _interior_mask(f.shape, int(np.ceil(border / h - 1e-9)))
    flagged = int(np.count_nonzero(interior & ~jet.ok_A))
    mask = interior & jet.ok_A & jet.ok_m

    def peak(arr: np.ndarray) -> float:
        return float(np.max(np.abs(arr[mask]))) if mask.any() else 0.0

    maxima = {k: peak(v) for k, v in res.items()}
    maxima.update({k: peak(v) for k, v in extra.items()})
    maxima.update({f"phase_form_{k}": peak(v) for k, v in phase_form.items()})
    return CRResidualReport(
        res_t1=res["t1"],
        res_y1=res["y1"],
        res_t2=res["t2"],
        res_y2=res["y2"],
        extra=extra,
        phase_form=phase_form,
        max_interior=maxima,
        flagged=flagged,
        mask=mask,
        spacing=h,
    )


def quaternion_log(q) -> np.ndarray:
    """``ln|q| + (v/|v|) atan2(|v|, q0)`` for quaternion arrays ``(..., 4)``."""
    q = np.asarray(q, dtype=np.float64)
    vec = q[..., 1:]
    vn = np.sqrt(np.sum(vec * vec, axis=-1))
    theta = np.arctan2(vn, q[..., 0])
    scale = np.where(vn > 0, theta / np.where(vn > 0, vn, 1.0), 0.0)
    return np.concatenate([np.log(modulus(q))[..., None], vec * scale[..., None]], axis=-1)


def _check_nonzero(t, y, name: str) -> None:
    if np.any((np.asarray(t) == 0) & (np.asarray(y) == 0)):
        raise ValueError(f"Cauchy kernel is singular at {name} = 0")


def _cauchy_array(t1, y1, t2, y2) -> np.ndarray:
    t1, y1, t2, y2 = np.broadcast_arrays(*(np.asarray(x, dtype=np.float64) for x in (t1, y1, t2, y2)))
    zeros = np.zeros_like(t1)
    s1c = np.stack([t1, -y1, zeros, zeros], axis=-1)
    s2c = np.stack([t2, zeros, -y2, zeros], axis=-1)
    denom = (t1**2 + y1**2) * (t2**2 + y2**2)
    return mul(s1c, s2c) / denom[..., None]


def cauchy_kernel_eval(s1, s2) -> Quaternion:
    """Cauchy kernel ``s1* s2* / (|s1|^2 |s2|^2)`` with ``s1 = t1 + i y1``, ``s2 = t2 + j y2``.

    ``s1`` and ``s2`` are ``(t, y)`` pairs.
    """
    (t1, y1), (t2, y2) = s1, s2
    _check_nonzero(t1, y1, "s1")
    _check_nonzero(t2, y2, "s2")
    return Quaternion(*_cauchy_array(t1, y1, t2, y2))


def cauchy_log(t1, y1, t2, y2) -> np.ndarray:
    """``a + p`` of the Cauchy kernel from its polar form (vectorised)."""
    _check_nonzero(t1, y1, "s1")
    _check_nonzero(t2, y2, "s2")
    return quaternion_log(_cauchy_array(t1, y1, t2, y2))


def cauchy_log_closed_form(t1, y1, t2, y2) -> np.ndarray:
    """Closed form of ``a + p`` for the Cauchy kernel.

    ``a = -ln|s1| - ln|s2|`` and ``p`` points along
    ``(-t2 y1, -t1 y2, y1 y2)`` with angle ``atan2(|v|, t1 t2)``.
    """
    t1, y1, t2, y2 = np.broadcast_arrays(*(np.asarray(x, dtype=np.float64) for x in (t1, y1, t2, y2)))
    a = -np.log(np.hypot(t1, y1)) - np.log(np.hypot(t2, y2))
    v = np.stack([-t2 * y1, -t1 * y2, y1 * y2], axis=-1)
    vn = np.sqrt(np.sum(v * v, axis=-1))
    ang = np.arctan2(vn, t1 * t2)
    scale = np.where(vn > 0, ang / np.where(vn > 0, vn, 1.0), 0.0)
    return np.concatenate([a[..., None], v * scale[..., None]], axis=-1)


def cr_operator_residual(
    func: Callable[..., np.ndarray], point, h: float
) -> tuple[float, float]:
    """Moduli of ``(d/dt1 + i d/dy1) F`` and ``F (d/dt2 + j d/dy2)`` at ``point``.

    ``func(t1, y1, t2, y2)`` returns a quaternion ``(..., 4)`` array;
    derivatives are central differences of step ``h``.
    """
    x = np.asarray(point, dtype=np.float64)

    def partial(k: int) -> np.ndarray:
        e = np.zeros(4)
        e[k] = h
        return (func(*(x + e)) - func(*(x - e))) / (2 * h)

    i = np.array([0.0, 1.0, 0.0, 0.0])
    j = np.array([0.0, 0.0, 1.0, 0.0])
    left = partial(0) + mul(i, partial(1))
    right = partial(2) + mul(partial(3), j)
    return float(modulus(left)), float(modulus(right))
