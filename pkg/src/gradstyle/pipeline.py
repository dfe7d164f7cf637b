"""End-to-end single-image stylization: pad, differentiate, map, rebuild."""

from __future__ import annotations

import numpy as np

from .gradients import forward_gradients, split_field
from .network import NetworkWeights, net_forward
from .reconstruct import ReconstructionProblem, reconstruct
from .tensor import Tensor


def pad_to_multiple_of_4(img: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Replicate-pad (3, H, W) on bottom/right so both dims divide by 4."""
    _, H, W = img.shape
    ph = (-H) % 4
    pw = (-W) % 4
    if ph or pw:
        img = np.pad(img, ((0, 0), (0, ph), (0, pw)), mode="edge")
    return img, (H, W)


def stylize_array(net: NetworkWeights, img: np.ndarray, lam: float = 10.0,
                  solver: str = "cg", cg_tol: float = 1e-8,
                  cg_max_iter: int = 0) -> np.ndarray:
    """(3, H, W) float32 in [0, 1] -> stylized image of the same size."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"expected (3, H, W) image, got {img.shape}")
    if img.shape[1] < 2 or img.shape[2] < 2:
        raise ValueError(f"image too small to stylize: {img.shape[1]}x{img.shape[2]}")
    padded, (H, W) = pad_to_multiple_of_4(img)
    field = forward_gradients(Tensor(padded[None]))
    predicted = net_forward(net, field)
    vert, horz = split_field(predicted)
    problem = ReconstructionProblem(
        image=padded,
        grad_x=horz[0],
        grad_y=vert[0],
        lam=lam,
        solver=solver,
        cg_tol=cg_tol,
        cg_max_iter=cg_max_iter,
    )
    out = reconstruct(problem)
    return np.ascontiguousarray(out[:, :H, :W])
