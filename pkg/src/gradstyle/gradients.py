"""Forward-difference image gradients, their exact adjoints, and the
6-channel packing the stylization network consumes.

A gradient field packs, for an RGB image, the vertical forward differences
of R, G, B in channels 0-2 and the horizontal ones in channels 3-5.  The
boundary convention is Neumann: the last row of every vertical channel and
the last column of every horizontal channel are zero.  The same stencils
defined here also drive the reconstruction solver, so training targets and
reconstruction always agree on what "gradient" means.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

VERTICAL = slice(0, 3)
HORIZONTAL = slice(3, 6)


# ---------------------------------------------------------------------------
# array-level stencils, shared with the reconstructor (last two axes = H, W)

def grad_v(a: np.ndarray) -> np.ndarray:
    """Vertical forward difference; last row zero."""
    out = np.zeros_like(a)
    out[..., :-1, :] = a[..., 1:, :] - a[..., :-1, :]
    return out


def grad_h(a: np.ndarray) -> np.ndarray:
    """Horizontal forward difference; last column zero."""
    out = np.zeros_like(a)
    out[..., :, :-1] = a[..., :, 1:] - a[..., :, :-1]
    return out


def grad_v_adjoint(v: np.ndarray) -> np.ndarray:
    """Exact adjoint of grad_v under the standard inner product."""
    out = np.zeros_like(v)
    out[..., 1:, :] += v[..., :-1, :]
    out[..., :-1, :] -= v[..., :-1, :]
    return out


def grad_h_adjoint(v: np.ndarray) -> np.ndarray:
    """Exact adjoint of grad_h."""
    out = np.zeros_like(v)
    out[..., :, 1:] += v[..., :, :-1]
    out[..., :, :-1] -= v[..., :, :-1]
    return out


# ---------------------------------------------------------------------------
# packed 6-channel fields

def forward_gradients(image: Tensor) -> Tensor:
    """RGB image (N,3,H,W) -> packed gradient field (N,6,H,W)."""
    N, C, H, W = image.dims
    if C != 3:
        raise ValueError(f"expected 3-channel image, got {C} channels")
    if H < 2 or W < 2:
        raise ValueError(f"image too small for gradients: {H}x{W}")
    field = np.empty((N, 6, H, W), np.float32)
    field[:, VERTICAL] = grad_v(image.data)
    field[:, HORIZONTAL] = grad_h(image.data)
    return Tensor(field)


def gradient_adjoint(field: Tensor) -> Tensor:
    """Adjoint of forward_gradients: (N,6,H,W) field -> (N,3,H,W) image."""
    N, C, H, W = field.dims
    if C != 6:
        raise ValueError(f"expected 6-channel gradient field, got {C} channels")
    out = grad_v_adjoint(field.data[:, VERTICAL]) + grad_h_adjoint(field.data[:, HORIZONTAL])
    return Tensor(out)


def split_field(field: Tensor) -> tuple[np.ndarray, np.ndarray]:
    """Unpack a gradient field into (vertical, horizontal) (N,3,H,W) arrays."""
    if field.dims[1] != 6:
        raise ValueError(f"expected 6-channel gradient field, got {field.dims[1]} channels")
    return field.data[:, VERTICAL], field.data[:, HORIZONTAL]


def pack_field(vertical: np.ndarray, horizontal: np.ndarray) -> Tensor:
    """Pack (N,3,H,W) vertical/horizontal gradients into one field."""
    if vertical.shape != horizontal.shape:
        raise ValueError(f"shape mismatch {vertical.shape} vs {horizontal.shape}")
    return Tensor(np.concatenate([vertical, horizontal], axis=1))
