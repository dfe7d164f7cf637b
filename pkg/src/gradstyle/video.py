"""Frame-sequence stylization and the inter-frame consistency metric.

Video I/O is a directory of numbered image frames; ordering follows the
integer parsed from each filename, never directory order.  Frames are
stylized fully independently: whatever temporal stability the output has
comes from the method itself, not from smoothing across frames.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .imageio import load_image, save_image
from .network import NetworkWeights
from .pipeline import stylize_array

_INDEX_RE = re.compile(r"(\d+)(?=\.[A-Za-z]+$)")


def frame_index(filename: str) -> int:
    """Frame number = the digit run just before the extension."""
    m = _INDEX_RE.search(filename)
    if not m:
        raise ValueError(f"cannot parse a frame index from '{filename}'")
    return int(m.group(1))


class FrameSequence:
    """Ordered list of same-sized (3, H, W) float32 RGB frames."""

    def __init__(self, frames: list[np.ndarray]) -> None:
        if not frames:
            raise ValueError("frame sequence is empty")
        shape = frames[0].shape
        for k, fr in enumerate(frames):
            if fr.ndim != 3 or fr.shape[0] != 3:
                raise ValueError(f"frame {k}: expected (3, H, W), got {fr.shape}")
            if fr.shape != shape:
                raise ValueError(f"frame {k} is {fr.shape}, first frame is {shape}")
        self.frames = [np.ascontiguousarray(fr, np.float32) for fr in frames]

    def __len__(self) -> int:
        return len(self.frames)

    @classmethod
    def from_dir(cls, path) -> "FrameSequence":
        names = [n for n in os.listdir(path)
                 if n.lower().endswith((".png", ".ppm", ".bmp", ".tif", ".tiff"))]
        if not names:
            raise FileNotFoundError(f"no frame images in {path}")
        indexed = sorted((frame_index(n), n) for n in names)
        seen = {}
        for idx, name in indexed:
            if idx in seen:
                raise ValueError(f"duplicate frame index {idx}: '{seen[idx]}' and '{name}'")
            seen[idx] = name
        return cls([load_image(os.path.join(path, name)) for _, name in indexed])

    def to_dir(self, path, ext: str = "png") -> None:
        os.makedirs(path, exist_ok=True)
        for k, fr in enumerate(self.frames):
            save_image(os.path.join(path, f"frame_{k + 1:06d}.{ext}"), fr)


def stylize_sequence(net: NetworkWeights, seq: FrameSequence, lam: float = 10.0,
                     solver: str = "cg", cg_tol: float = 1e-8) -> FrameSequence:
    """Stylize every frame independently; no temporal state whatsoever."""
    return FrameSequence([
        stylize_array(net, fr, lam=lam, solver=solver, cg_tol=cg_tol)
        for fr in seq.frames
    ])


def interframe_mse(seq: FrameSequence) -> list[float]:
    """Mean squared difference of each consecutive frame pair."""
    if len(seq) < 2:
        raise ValueError(f"need at least 2 frames, got {len(seq)}")
    out = []
    for a, b in zip(seq.frames, seq.frames[1:]):
        d = b.astype(np.float64) - a.astype(np.float64)
        out.append(float(np.mean(d * d)))
    return out


def write_mse_csv(path, values: list[float]) -> None:
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["frame_index", "mse"])
        for k, v in enumerate(values):
            w.writerow([k, f"{v:.9g}"])
