"""Reading and writing 8-bit grayscale images (binary PGM and PNG)."""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .scale_space import ScalarField, as_field

__all__ = ["ImageFormatError", "load_image", "save_image", "to_uint8", "LUMA_WEIGHTS"]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
PathLike = Union[str, os.PathLike]

_PGM_HEADER = re.compile(rb"\AP5(?:\s+(?:#[^\n]*\n\s*)*)(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


class ImageFormatError(ValueError):
    def __init__(self, path: PathLike, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


def _read_pgm(path: Path, raw: bytes) -> np.ndarray:
    m = _PGM_HEADER.match(raw)
    if m is None:
        raise ImageFormatError(path, "malformed P5 header")
    width, height, maxval = (int(g) for g in m.groups())
    if width <= 0 or height <= 0:
        raise ImageFormatError(path, f"invalid dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise ImageFormatError(path, f"only 8-bit PGM is supported (maxval {maxval})")
    body = raw[m.end():]
    need = width * height
    if len(body) < need:
        raise ImageFormatError(path, f"truncated pixel data ({len(body)} of {need} bytes)")
    data = np.frombuffer(body, dtype=np.uint8, count=need).reshape(height, width)
    return data.astype(np.float64) * (255.0 / maxval)


def _read_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "P", "LA", "1"):
                arr = np.asarray(im.convert("L"), dtype=np.float64)
            elif mode in ("I;16", "I;16B", "I"):
                raise ImageFormatError(path, f"unsupported PNG mode {mode}; expected 8-bit")
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = rgb @ np.array(LUMA_WEIGHTS)
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(path, f"cannot decode PNG ({exc})") from exc
    return arr


def load_image(path: PathLike) -> ScalarField:
    """Load a binary PGM (P5) or PNG as a float field in ``[0, 255]``.

    Colour PNGs are reduced to BT.601 luma without rounding.
    """
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ImageFormatError(p, exc.strerror or str(exc)) from exc
    if raw.startswith(b"P5"):
        return ScalarField(_read_pgm(p, raw))
    if raw.startswith(b"\x89PNG\r\n\x1a\n"):
        return ScalarField(_read_png(p))
    raise ImageFormatError(p, "unsupported format (expected binary PGM or PNG)")


def to_uint8(data) -> np.ndarray:
    """Clamp to ``[0, 255]`` and round half to even."""
    arr = np.asarray(as_field(data).data if isinstance(data, ScalarField) else data, dtype=np.float64)
    return np.rint(np.clip(arr, 0.0, 255.0)).astype(np.uint8)


def save_image(field, path: PathLike) -> None:
    """Write a field as 8-bit grayscale; the suffix picks PGM or PNG."""
    p = Path(path)
    pixels = to_uint8(field)
    suffix = p.suffix.lower()
    try:
        if suffix in (".pgm", ".pnm"):
            h, w = pixels.shape
            p.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes())
        elif suffix == ".png":
            Image.fromarray(pixels).save(p, format="PNG")
        else:
            raise ImageFormatError(p, f"unsupported output suffix {suffix!r}")
    except OSError as exc:
        raise ImageFormatError(p, exc.strerror or str(exc)) from exc
