"""Dense 4-D float32 tensor type and the scalar reductions built on it.

Every array moving through the pipeline (images, gradient fields, feature
maps, conv kernels) is a ``Tensor``: a contiguous row-major (batch,
channels, height, width) block of 32-bit floats.  Operations are pure and
validate that their result is finite, so NaN/Inf never propagates silently.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

__all__ = ["Tensor", "add", "sub", "mul", "scale", "sum_sq", "mse"]


def require_finite(arr: np.ndarray, what: str) -> None:
    """Raise NumericError if `arr` contains NaN or Inf.

    A float64 sum of finite float32 values cannot overflow, so a single
    reduction pass detects any non-finite entry.
    """
    if not np.isfinite(arr.sum(dtype=np.float64)):
        raise NumericError(f"{what} contains non-finite values")


class Tensor:
    """Immutable-by-convention (N, C, H, W) float32 array.

    Construction validates rank, dtype and finiteness.  Operations never
    modify their inputs; two calls on equal inputs give bit-equal outputs.
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim != 4:
            raise ValueError(
                f"tensor must be 4-D (batch, channels, height, width), got shape {arr.shape}"
            )
        require_finite(arr, "tensor data")
        self.data = arr

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, dims) -> "Tensor":
        return cls(np.zeros(dims, dtype=np.float32))

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(dims={self.dims})"

    # convenience wrappers around the module-level ops
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.dims != b.dims:
        raise ValueError(f"{op}: shape mismatch {a.dims} vs {b.dims}")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    _check_same_shape(a, b, "add")
    return Tensor(a.data + b.data)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise difference a - b."""
    _check_same_shape(a, b, "sub")
    return Tensor(a.data - b.data)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    _check_same_shape(a, b, "mul")
    return Tensor(a.data * b.data)


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply every element by the scalar `s`."""
    return Tensor(a.data * np.float32(s))


def sum_sq(a: Tensor) -> float:
    """Sum of squared elements, accumulated in float64."""
    flat = a.data.ravel()
    return float(np.square(flat, dtype=np.float64).sum())


def mse(a: Tensor, b: Tensor) -> float:
    """Mean squared difference between two same-shape tensors."""
    _check_same_shape(a, b, "mse")
    d = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(d * d))
