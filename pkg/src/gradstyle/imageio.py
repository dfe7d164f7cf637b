"""8-bit RGB image I/O.

PNG (and other raster formats Pillow can decode losslessly) are the main
path; ASCII PPM (P3) has a tiny built-in codec so tests can round-trip
images without any image library at all.  Alpha channels are rejected:
the pipeline is defined on opaque RGB.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import GradstyleError


class ImageFormatError(GradstyleError):
    """Unsupported or malformed image file."""


def quantize_u8(arr: np.ndarray) -> np.ndarray:
    """[0,1] floats -> u8 with round-half-away-from-zero."""
    v = np.clip(arr, 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Decode to (3, H, W) float32 in [0, 1]."""
    if str(path).lower().endswith(".ppm"):
        u8 = _read_ppm_ascii(path)
    else:
        u8 = _read_pillow(path)
    if u8.shape[0] == 0 or u8.shape[1] == 0:
        raise ImageFormatError(f"{path}: image has a zero dimension")
    return np.ascontiguousarray(u8.transpose(2, 0, 1).astype(np.float32) / 255.0)


def save_image(path, arr: np.ndarray) -> None:
    """Encode (3, H, W) float32 in [0, 1] to an 8-bit RGB file."""
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"expected (3, H, W) image, got {arr.shape}")
    u8 = quantize_u8(arr).transpose(1, 2, 0)
    if str(path).lower().endswith(".ppm"):
        _write_ppm_ascii(path, u8)
    else:
        from PIL import Image
        Image.fromarray(u8, mode="RGB").save(path)


def _read_pillow(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError
    if not os.path.exists(path):
        raise FileNotFoundError(f"image file not found: {path}")
    try:
        with Image.open(path) as im:
            if im.mode in ("RGBA", "LA", "PA") or (
                im.mode == "P" and "transparency" in im.info
            ):
                raise ImageFormatError(
                    f"{path}: alpha channels are not supported; flatten to RGB first"
                )
            rgb = im.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: not a decodable image file") from e


def _write_ppm_ascii(path, u8: np.ndarray) -> None:
    H, W, _ = u8.shape
    with open(path, "w") as f:
        f.write(f"P3\n{W} {H}\n255\n")
        flat = u8.reshape(-1)
        # one pixel triple per line keeps lines short and diffs readable
        for i in range(0, flat.size, 3):
            f.write(f"{flat[i]} {flat[i + 1]} {flat[i + 2]}\n")


def _read_ppm_ascii(path) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(f"image file not found: {path}")
    with open(path, "r") as f:
        tokens = []
        for line in f:
            hash_pos = line.find("#")
            if hash_pos >= 0:
                line = line[:hash_pos]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P3":
        raise ImageFormatError(f"{path}: expected ASCII PPM magic 'P3'")
    if len(tokens) < 4:
        raise ImageFormatError(f"{path}: truncated PPM header")
    try:
        W, H, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise ImageFormatError(f"{path}: malformed PPM header") from e
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 supported, got {maxval}")
    vals = tokens[4:]
    if len(vals) != W * H * 3:
        raise ImageFormatError(
            f"{path}: expected {W * H * 3} samples, found {len(vals)}"
        )
    try:
        data = np.array([int(v) for v in vals], dtype=np.int64)
    except ValueError as e:
        raise ImageFormatError(f"{path}: non-integer sample") from e
    if data.min() < 0 or data.max() > 255:
        raise ImageFormatError(f"{path}: sample out of [0, 255]")
    return data.astype(np.uint8).reshape(H, W, 3)
