"""Two-sided quaternion Fourier transform and quaternion Hilbert transforms.

Quaternion fields are ``(H, W, 4)`` float arrays; a real ``(H, W)`` image is
embedded as the scalar part. ``t1`` runs along axis 1 and ``t2`` along
axis 0. The forward transform is

    F(w1, w2) = sum_t exp(-i w1 t1) f(t1, t2) exp(-j w2 t2)

(unnormalised sum), the inverse carries the ``1 / (H W)`` factor.

The transform is computed by splitting ``f = fa + fb j`` with ``fa, fb`` in
the i-complex plane, which turns the two-sided product into ordinary
complex 2-D DFTs of ``fa`` and ``fb`` and their copies mirrored in ``w2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quaternion import mul, modulus

__all__ = [
    "QSpectrum",
    "OneSidedReport",
    "as_quaternion_field",
    "qft2",
    "iqft2",
    "discrete_sign",
    "hilbert_partial_1",
    "hilbert_partial_2",
    "hilbert_total",
    "analytic_signal",
    "spectrum_onesided_check",
]


@dataclass
class QSpectrum:
    """Quaternion spectrum with the DC bin at the centre (``fftshift`` order)."""

    data: np.ndarray
    frequency_step: tuple[float, float] = (1.0, 1.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def frequency_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer bin indices ``(k1, k2)`` broadcastable to ``(H, W)``."""
        h, w = self.shape
        k2 = np.fft.fftshift(np.fft.fftfreq(h) * h).round().astype(int)[:, None]
        k1 = np.fft.fftshift(np.fft.fftfreq(w) * w).round().astype(int)[None, :]
        return k1, k2


@dataclass(frozen=True)
class OneSidedReport:
    max_leak: float
    factor_error: float


def as_quaternion_field(f) -> np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim == 2:
        out = np.zeros(arr.shape + (4,))
        out[..., 0] = arr
        return out
    if arr.ndim == 3 and arr.shape[-1] == 4:
        return arr
    raise ValueError(f"expected (H, W) or (H, W, 4) array, got shape {arr.shape}")


def _mirror_w2(spec: np.ndarray) -> np.ndarray:
    # G(k1, -k2) in unshifted index order
    return np.roll(np.flip(spec, axis=0), 1, axis=0)


def _two_sided(f: np.ndarray, inverse: bool) -> np.ndarray:
    fa = f[..., 0] + 1j * f[..., 1]
    fb = f[..., 2] + 1j * f[..., 3]
    if inverse:
        n = f.shape[0] * f.shape[1]
        ea, eb = np.fft.ifft2(fa) * n, np.fft.ifft2(fb) * n
    else:
        ea, eb = np.fft.fft2(fa), np.fft.fft2(fb)
    ma, mb = _mirror_w2(ea), _mirror_w2(eb)
    a = 0.5 * (ea + ma) - (eb - mb) / 2j
    b = (ea - ma) / 2j + 0.5 * (eb + mb)
    return np.stack([a.real, a.imag, b.real, b.imag], axis=-1)


def qft2(f, spacing: float = 1.0) -> QSpectrum:
    """Forward two-sided QFT, returned with DC at the centre."""
    q = as_quaternion_field(f)
    spec = np.fft.fftshift(_two_sided(q, inverse=False), axes=(0, 1))
    h, w = q.shape[:2]
    step = (2 * np.pi / (w * spacing), 2 * np.pi / (h * spacing))
    return QSpectrum(spec, step)


def iqft2(s: QSpectrum) -> np.ndarray:
    """Inverse of :func:`qft2`; returns an ``(H, W, 4)`` field."""
    data = np.fft.ifftshift(np.asarray(s.data, dtype=np.float64), axes=(0, 1))
    n = data.shape[0] * data.shape[1]
    return _two_sided(data, inverse=True) / n


def discrete_sign(k: np.ndarray, n: int) -> np.ndarray:
    """``sgn`` on integer bins, with 0 at DC and at the Nyquist bin of even ``n``."""
    s = np.sign(k).astype(np.float64)
    if n % 2 == 0:
        s[np.abs(k) == n // 2] = 0.0
    return s


def _signs(spec: QSpectrum) -> tuple[np.ndarray, np.ndarray]:
    h, w = spec.shape
    k1, k2 = spec.frequency_index()
    s1 = np.broadcast_to(discrete_sign(k1, w), (h, w))
    s2 = np.broadcast_to(discrete_sign(k2, h), (h, w))
    return s1, s2


def _unit(axis: int, coeff: np.ndarray) -> np.ndarray:
    q = np.zeros(coeff.shape + (4,))
    q[..., axis] = coeff
    return q


def hilbert_partial_1(f) -> np.ndarray:
    """Partial Hilbert transform along t1: spectrum multiplied by ``-i sgn(w1)`` on the left."""
    s = qft2(f)
    s1, _ = _signs(s)
    return iqft2(QSpectrum(mul(_unit(1, -s1), s.data), s.frequency_step))


def hilbert_partial_2(f) -> np.ndarray:
    """Partial Hilbert transform along t2: spectrum multiplied by ``-j sgn(w2)`` on the right."""
    s = qft2(f)
    _, s2 = _signs(s)
    return iqft2(QSpectrum(mul(s.data, _unit(2, -s2)), s.frequency_step))


def hilbert_total(f) -> np.ndarray:
    """Total Hilbert transform: ``-i sgn(w1)`` on the left and ``-j sgn(w2)`` on the right."""
    s = qft2(f)
    s1, s2 = _signs(s)
    data = mul(mul(_unit(1, -s1), s.data), _unit(2, -s2))
    return iqft2(QSpectrum(data, s.frequency_step))


_I = np.array([0.0, 1.0, 0.0, 0.0])
_J = np.array([0.0, 0.0, 1.0, 0.0])


def analytic_signal(f) -> np.ndarray:
    """Quaternion analytic signal ``f + i H1[f] + H2[f] j + i Ht[f] j``."""
    g = as_quaternion_field(f)
    return (
        g
        + mul(_I, hilbert_partial_1(g))
        + mul(hilbert_partial_2(g), _J)
        + mul(mul(_I, hilbert_total(g)), _J)
    )


def spectrum_onesided_check(f) -> OneSidedReport:
    """Check that the analytic signal has a one-quadrant spectrum.

    ``max_leak`` is the largest spectral modulus of the analytic signal over
    bins with a negative frequency, ``factor_error`` the largest deviation
    from ``(1 + sgn w1)(1 + sgn w2) F[f]``. Both are relative to the largest
    modulus of ``F[f]``; DC and Nyquist rows/columns are left out.
    """
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("spectrum_onesided_check expects a real 2-D field")
    spec_f = qft2(arr)
    spec_g = qft2(analytic_signal(arr))
    s1, s2 = _signs(spec_f)
    regular = (s1 != 0) & (s2 != 0)
    ref = float(np.max(modulus(spec_f.data))) if arr.size else 0.0
    if ref == 0.0:
        ref = 1.0
    negative = (s1 < 0) | (s2 < 0)
    leak = modulus(spec_g.data)[negative]
    factor = ((1 + s1) * (1 + s2))[..., None] * spec_f.data
    err = modulus(spec_g.data - factor)[regular]
    return OneSidedReport(
        max_leak=float(leak.max() / ref) if leak.size else 0.0,
        factor_error=float(err.max() / ref) if err.size else 0.0,
    )
