"""Neural building blocks: conv layers, ReLU, sub-pixel upsampling, Adam.

No autodiff tape here; every layer exposes an explicit analytic backward.
"""

from __future__ import annotations

import numpy as np

from . import convops
from .errors import NumericError
from .tensor import Tensor, require_finite

PADDING_MODES = ("zero", "replicate")


class ConvLayer:
    """2-D cross-correlation layer with fixed stride/padding geometry.

    Kernel sides must be divisible by the stride: uneven kernel/stride
    overlap is what produces checkerboard artifacts, so the constructor
    rejects such configurations outright.
    """

    __slots__ = ("weights", "bias", "stride", "padding", "padding_mode")

    def __init__(self, weights, bias, stride: int = 1, padding: int = 0,
                 padding_mode: str = "zero") -> None:
        w = weights if isinstance(weights, Tensor) else Tensor(weights)
        out_ch = w.dims[0]
        kh, kw = w.dims[2], w.dims[3]
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        if kh % stride or kw % stride:
            raise ValueError(
                f"kernel {kh}x{kw} not divisible by stride {stride} "
                f"(checkerboard-avoidance rule)"
            )
        if padding < 0:
            raise ValueError(f"padding must be >= 0, got {padding}")
        if padding_mode not in PADDING_MODES:
            raise ValueError(f"padding mode must be one of {PADDING_MODES}, got '{padding_mode}'")
        b = np.ascontiguousarray(bias, dtype=np.float32)
        if b.ndim != 1 or b.shape[0] != out_ch:
            raise ValueError(f"bias must be a length-{out_ch} vector, got shape {b.shape}")
        require_finite(b, "conv bias")
        self.weights = w
        self.bias = b
        self.stride = stride
        self.padding = padding
        self.padding_mode = padding_mode

    @property
    def in_channels(self) -> int:
        return self.weights.dims[1]

    @property
    def out_channels(self) -> int:
        return self.weights.dims[0]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.weights.dims[2], self.weights.dims[3]

    def out_size(self, H: int, W: int) -> tuple[int, int]:
        kh, kw = self.kernel_size
        oh, ow = convops.out_size(H, W, kh, kw, self.stride, self.padding)
        if oh < 1 or ow < 1:
            raise ValueError(
                f"input {H}x{W} too small for kernel {kh}x{kw} "
                f"stride {self.stride} pad {self.padding}"
            )
        return oh, ow

    def with_params(self, weights: np.ndarray, bias: np.ndarray) -> "ConvLayer":
        """Same geometry, new parameters (functional update)."""
        return ConvLayer(weights, bias, self.stride, self.padding, self.padding_mode)

    def num_params(self) -> int:
        return int(np.prod(self.weights.dims)) + self.bias.shape[0]


def _check_input(layer: ConvLayer, x: Tensor) -> None:
    if x.dims[1] != layer.in_channels:
        raise ValueError(
            f"conv expects {layer.in_channels} input channels, got {x.dims[1]}"
        )


def conv2d_forward(layer: ConvLayer, x: Tensor) -> Tensor:
    """Cross-correlate x with the layer kernels and add bias."""
    _check_input(layer, x)
    layer.out_size(x.dims[2], x.dims[3])
    out = convops.conv_forward(x.data, layer.weights.data, layer.bias,
                               layer.stride, layer.padding, layer.padding_mode)
    return Tensor(out)


def conv2d_backward(layer: ConvLayer, x: Tensor, grad_out: Tensor):
    """Analytic gradients of sum(grad_out * forward) w.r.t. x, weights, bias."""
    _check_input(layer, x)
    oh, ow = layer.out_size(x.dims[2], x.dims[3])
    expect = (x.dims[0], layer.out_channels, oh, ow)
    if grad_out.dims != expect:
        raise ValueError(f"grad_out shape {grad_out.dims} does not match forward output {expect}")
    gx, gw, gb = convops.conv_backward(x.data, layer.weights.data, layer.stride,
                                       layer.padding, layer.padding_mode,
                                       grad_out.data)
    return Tensor(gx), Tensor(gw), gb


def relu_forward(x: Tensor) -> Tensor:
    """max(x, 0) elementwise."""
    return Tensor(np.maximum(x.data, 0.0))


def relu_backward(x: Tensor, grad_out: Tensor) -> Tensor:
    """Pass grad_out where x > 0; the tie at exactly zero passes zero."""
    if x.dims != grad_out.dims:
        raise ValueError(f"relu_backward: shape mismatch {x.dims} vs {grad_out.dims}")
    return Tensor(grad_out.data * (x.data > 0.0))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Depth-to-space: (N, C, H, W) -> (N, C/r^2, H*r, W*r).

    Output pixel (c, h*r+i, w*r+j) comes from input channel c*r*r + i*r + j
    at (h, w); a pure permutation of elements, exactly invertible.
    """
    N, C, H, W = x.dims
    if r < 1:
        raise ValueError(f"upsampling factor must be >= 1, got {r}")
    if C % (r * r):
        raise ValueError(f"channel count {C} not divisible by r^2 = {r * r}")
    out = (x.data.reshape(N, C // (r * r), r, r, H, W)
           .transpose(0, 1, 4, 2, 5, 3)
           .reshape(N, C // (r * r), H * r, W * r))
    return Tensor(np.ascontiguousarray(out))


def space_to_depth(x: Tensor, r: int) -> Tensor:
    """Inverse of pixel_shuffle: (N, C, H*r, W*r) -> (N, C*r^2, H, W)."""
    N, C, H, W = x.dims
    if H % r or W % r:
        raise ValueError(f"spatial dims {H}x{W} not divisible by r = {r}")
    out = (x.data.reshape(N, C, H // r, r, W // r, r)
           .transpose(0, 1, 3, 5, 2, 4)
           .reshape(N, C * r * r, H // r, W // r))
    return Tensor(np.ascontiguousarray(out))


class AdamState:
    """First/second moment estimates plus the shared step counter."""

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.step = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update; returns new parameter arrays.

    Moment buffers are updated in place; the step counter advances by one.
    """
    if set(params) != set(grads):
        raise ValueError(f"param/grad name mismatch: {sorted(params)} vs {sorted(grads)}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    out: dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"'{name}': grad shape {g.shape} != param shape {p.shape}")
        require_finite(g, f"gradient for '{name}'")
        m, v = state.m[name], state.v[name]
        if m.shape != p.shape:
            raise ValueError(f"'{name}': optimizer state shape {m.shape} != param shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        step = (m / c1) / (np.sqrt(v / c2) + state.eps)
        new = p - np.float32(lr) * step
        out[name] = new.astype(np.float32, copy=False)
    return out


def finite_or_raise(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"{what} is non-finite")
    return float(value)
