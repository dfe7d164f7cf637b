"""Scalar training losses with analytic gradients.

The pixel loss lives on gradient fields, the color-domain loss on plain
RGB images (kept only as the ablation baseline), and the total loss blends
pixel and perceptual terms with the alpha/beta weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor
from .vgg import VggTrunk, perceptual_loss


@dataclass(frozen=True)
class LossWeights:
    """Per-term weights for the total loss."""
    alpha: float = 10000.0  # pixel term
    beta: float = 10.0      # perceptual term

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"loss weights must be >= 0, got alpha={self.alpha} beta={self.beta}")


def pixel_loss(pred: Tensor, target: Tensor) -> tuple[float, Tensor]:
    """Half mean-squared error over all elements, with gradient w.r.t. pred.

    Per example the squared norm is normalized by element count, then
    averaged over the batch; with equal-size examples that collapses to
    0.5 * mean((pred - target)^2).
    """
    if pred.dims != target.dims:
        raise ValueError(f"shape mismatch {pred.dims} vs {target.dims}")
    d = pred.data - target.data
    loss = 0.5 * float(np.square(d, dtype=np.float64).mean())
    return loss, Tensor(d / np.float32(d.size))


def color_domain_loss(pred_img: Tensor, target_img: Tensor) -> tuple[float, Tensor]:
    """Mean-squared RGB error; the naive baseline the gradient losses replace."""
    if pred_img.dims != target_img.dims:
        raise ValueError(f"shape mismatch {pred_img.dims} vs {target_img.dims}")
    if pred_img.dims[1] != 3:
        raise ValueError(f"expected 3-channel images, got {pred_img.dims[1]} channels")
    d = pred_img.data - target_img.data
    loss = float(np.square(d, dtype=np.float64).mean())
    return loss, Tensor((2.0 / d.size) * d)


def total_loss_parts(pred: Tensor, target: Tensor, weights: LossWeights,
                     trunk: VggTrunk | None) -> tuple[float, float, float, Tensor]:
    """(total, pixel, feat, grad w.r.t. pred); feat skipped when beta == 0."""
    lp, gp = pixel_loss(pred, target)
    if weights.beta > 0.0:
        if trunk is None:
            raise ValueError("perceptual term requested (beta > 0) but no VGG trunk given")
        lf, gf = perceptual_loss(trunk, pred, target)
        grad = Tensor(np.float32(weights.alpha) * gp.data + np.float32(weights.beta) * gf.data)
    else:
        lf = 0.0
        grad = Tensor(np.float32(weights.alpha) * gp.data)
    total = weights.alpha * lp + weights.beta * lf
    return total, lp, lf, grad


def total_loss(pred: Tensor, target: Tensor, weights: LossWeights,
               trunk: VggTrunk | None) -> tuple[float, Tensor]:
    """alpha * pixel + beta * perceptual, with the summed gradient."""
    total, _, _, grad = total_loss_parts(pred, target, weights, trunk)
    return total, grad
