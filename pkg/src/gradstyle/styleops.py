"""Synthetic style operators and procedural test images.

Real stylized references are a product of whatever external filter the
user likes; these operators manufacture (input, reference) training pairs
deterministically so the whole pipeline can be exercised hermetically.
All operators map a (3, H, W) float32 image in [0, 1] to the same shape.
"""

from __future__ import annotations

import numpy as np

from .gradients import grad_h, grad_v
from .reconstruct import ReconstructionProblem, reconstruct


def _box_mean(a: np.ndarray, radius: int) -> np.ndarray:
    """Mean over a (2r+1)^2 window clipped at the borders, via summed areas."""
    H, W = a.shape[-2:]
    pad = np.zeros(a.shape[:-2] + (H + 1, W + 1), np.float64)
    pad[..., 1:, 1:] = a
    sat = pad.cumsum(axis=-2).cumsum(axis=-1)
    y0 = np.clip(np.arange(H) - radius, 0, H)
    y1 = np.clip(np.arange(H) + radius + 1, 0, H)
    x0 = np.clip(np.arange(W) - radius, 0, W)
    x1 = np.clip(np.arange(W) + radius + 1, 0, W)
    total = (sat[..., y1[:, None], x1[None, :]] - sat[..., y0[:, None], x1[None, :]]
             - sat[..., y1[:, None], x0[None, :]] + sat[..., y0[:, None], x0[None, :]])
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return total / counts


def _guided_smooth_once(img: np.ndarray, radius: int, eps: float) -> np.ndarray:
    # self-guided filter, per channel: edge-preserving box smoothing
    mean = _box_mean(img, radius)
    corr = _box_mean(img * img, radius)
    var = np.maximum(corr - mean * mean, 0.0)
    a = var / (var + eps)
    b = (1.0 - a) * mean
    return _box_mean(a, radius) * img + _box_mean(b, radius)


def op_identity(img: np.ndarray) -> np.ndarray:
    return img.copy()


def make_posterize(levels: int):
    def op(img: np.ndarray) -> np.ndarray:
        return (np.round(img * (levels - 1)) / (levels - 1)).astype(np.float32)
    return op


def op_smooth(img: np.ndarray) -> np.ndarray:
    """Three rounds of guided box filtering: flattens texture, keeps edges."""
    out = img.astype(np.float64)
    for _ in range(3):
        out = _guided_smooth_once(out, radius=4, eps=4e-3)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def op_edge_boost(img: np.ndarray) -> np.ndarray:
    """Exaggerate gradient magnitudes, then rebuild colors around the input."""
    gain = 1.8
    p = ReconstructionProblem(
        image=img,
        grad_x=gain * grad_h(img),
        grad_y=gain * grad_v(img),
        lam=10.0,
    )
    return reconstruct(p)


STYLE_OPERATORS = {
    "identity": op_identity,
    "posterize-4": make_posterize(4),
    "posterize-8": make_posterize(8),
    "smooth": op_smooth,
    "edge-boost": op_edge_boost,
}


def apply_style_operator(name: str, img: np.ndarray) -> np.ndarray:
    if name not in STYLE_OPERATORS:
        raise ValueError(
            f"unknown style operator '{name}'; available: "
            + ", ".join(sorted(STYLE_OPERATORS))
        )
    return STYLE_OPERATORS[name](img)


def synth_image(seed: int, H: int, W: int) -> np.ndarray:
    """Deterministic test image: smooth color washes plus hard-edged shapes."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, H), np.linspace(0, 1, W), indexing="ij")
    img = np.empty((3, H, W), np.float64)
    for c in range(3):
        fx, fy = rng.uniform(0.5, 3.0, 2)
        px, py = rng.uniform(0, 2 * np.pi, 2)
        img[c] = 0.5 + 0.25 * np.sin(2 * np.pi * fx * xx + px) * np.cos(2 * np.pi * fy * yy + py)
    for _ in range(6):
        cy, cx = rng.uniform(0.1, 0.9, 2)
        r = rng.uniform(0.05, 0.25)
        color = rng.uniform(0.05, 0.95, 3)
        if rng.random() < 0.5:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r ** 2
        else:
            mask = (np.abs(yy - cy) < r) & (np.abs(xx - cx) < r)
        img[:, mask] = color[:, None]
    return np.clip(img, 0.0, 1.0).astype(np.float32)
