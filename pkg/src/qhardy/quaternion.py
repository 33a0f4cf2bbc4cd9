"""Hamilton quaternion arithmetic.

Two surfaces are provided. :class:`Quaternion` is a small immutable value
type for scalar work, and the module-level functions operate on numpy
arrays whose trailing axis holds the four components ``(q0, q1, q2, q3)``
so that whole images of quaternions can be processed at once. The
functions accept either form and return the same form they were given.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Quaternion",
    "mul",
    "conjugate",
    "modulus",
    "inverse",
    "parts",
    "exp_pure",
    "ONE",
    "I",
    "J",
    "K",
]

# Below this norm the direction v/|v| of a pure quaternion is not formed.
_EXP_SMALL = 1e-12


@dataclass(frozen=True)
class Quaternion:
    """Quaternion ``q0 + i q1 + j q2 + k q3`` with float64 components."""

    q0: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    def __post_init__(self) -> None:
        for name in ("q0", "q1", "q2", "q3"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        a = np.asarray(arr, dtype=np.float64)
        if a.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {a.shape}")
        return cls(*a)

    def __array__(self, dtype=None, copy=None):
        return np.array([self.q0, self.q1, self.q2, self.q3], dtype=dtype or np.float64)

    def to_array(self) -> np.ndarray:
        return np.array([self.q0, self.q1, self.q2, self.q3])

    @property
    def scalar(self) -> float:
        return self.q0

    @property
    def vector(self) -> tuple[float, float, float]:
        return (self.q1, self.q2, self.q3)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(self.to_array() + np.asarray(other)))

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(self.to_array() - np.asarray(other)))

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        return Quaternion(*(self.to_array() * float(other)))

    def __rmul__(self, other):
        return Quaternion(*(self.to_array() * float(other)))

    def __truediv__(self, other: float) -> "Quaternion":
        return Quaternion(*(self.to_array() / float(other)))

    def conjugate(self) -> "Quaternion":
        return conjugate(self)

    def modulus(self) -> float:
        return modulus(self)

    def inverse(self) -> "Quaternion":
        return inverse(self)

    def parts(self) -> tuple[float, float, float, float]:
        return parts(self)

    def isclose(self, other: "Quaternion", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), np.asarray(other), rtol=0.0, atol=atol))


QuaternionLike = Union[Quaternion, np.ndarray]

ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def _as_array(q) -> np.ndarray:
    a = np.asarray(q, dtype=np.float64)
    if a.shape[-1:] != (4,):
        raise ValueError(f"trailing axis must hold 4 components, got shape {a.shape}")
    return a


def _wrap(result: np.ndarray, *inputs):
    if all(isinstance(x, Quaternion) for x in inputs):
        return Quaternion(*result)
    return result


def mul(a: QuaternionLike, b: QuaternionLike):
    """Hamilton product ``a b`` (broadcasts over leading axes)."""
    x = _as_array(a)
    y = _as_array(b)
    a0, a1, a2, a3 = np.moveaxis(x, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(y, -1, 0)
    out = np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )
    return _wrap(out, a, b)


def conjugate(q: QuaternionLike):
    """Negate the vector part."""
    x = _as_array(q)
    out = x * np.array([1.0, -1.0, -1.0, -1.0])
    return _wrap(out, q)


def modulus(q: QuaternionLike):
    x = _as_array(q)
    out = np.sqrt(np.sum(x * x, axis=-1))
    if isinstance(q, Quaternion):
        return float(out)
    return out


def inverse(q: QuaternionLike):
    """``conjugate(q) / |q|^2``; raises ``ValueError`` on a zero quaternion."""
    x = _as_array(q)
    n2 = np.sum(x * x, axis=-1)
    if np.any(n2 == 0.0):
        raise ValueError("inverse of the zero quaternion is undefined")
    out = conjugate(x) / n2[..., None]
    return _wrap(out, q)


def parts(q: QuaternionLike):
    """Return ``(Sc, Vec_i, Vec_j, Vec_k)``."""
    x = _as_array(q)
    if isinstance(q, Quaternion):
        return (q.q0, q.q1, q.q2, q.q3)
    return tuple(np.moveaxis(x, -1, 0))


def exp_pure(v: QuaternionLike):
    """Exponential of a pure quaternion: ``cos|v| + (v/|v|) sin|v|``.

    For ``|v| < 1e-12`` the first-order series ``1 + v`` is returned.
    """
    x = _as_array(v)
    if np.any(x[..., 0] != 0.0):
        raise ValueError("exp_pure expects a quaternion with zero scalar part")
    vec = x[..., 1:]
    norm = np.sqrt(np.sum(vec * vec, axis=-1))
    small = norm < _EXP_SMALL
    safe = np.where(small, 1.0, norm)
    scale = np.where(small, 1.0, np.sin(norm) / safe)
    out = np.concatenate(
        [np.where(small, 1.0, np.cos(norm))[..., None], vec * scale[..., None]], axis=-1
    )
    return _wrap(out, v)
