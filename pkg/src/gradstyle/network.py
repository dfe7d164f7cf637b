"""The gradient-to-gradient stylization network.

Nine convolutions with ReLU after the first eight; conv2 and conv4 each
halve the spatial size (4x4 kernels, stride 2) and a x4 depth-to-space
after conv7 restores it, so outputs match inputs exactly when H and W are
divisible by 4.  Input and output are 6-channel gradient fields.
"""

from __future__ import annotations

import numpy as np

from . import convops, gstw
from .layers import AdamState, ConvLayer, pixel_shuffle, space_to_depth
from .tensor import Tensor

# (name, in_ch, out_ch, kernel, stride); padding keeps spatial bookkeeping
# exact: k3 -> pad 1 at stride 1, k4 -> pad 1 at stride 2.
LAYER_SPECS: list[tuple[str, int, int, int, int]] = [
    ("conv1", 6, 32, 3, 1),
    ("conv2", 32, 64, 4, 2),
    ("conv3", 64, 64, 3, 1),
    ("conv4", 64, 128, 4, 2),
    ("conv5", 128, 128, 3, 1),
    ("conv6", 128, 128, 3, 1),
    ("conv7", 128, 96, 3, 1),
    ("conv8", 6, 16, 3, 1),
    ("conv9", 16, 6, 3, 1),
]
SHUFFLE_FACTOR = 4          # depth-to-space between conv7 and conv8
SHUFFLE_AFTER = "conv7"
LINEAR_OUTPUT = "conv9"     # signed gradients: no activation on the last layer
PADDING_MODE = "replicate"  # zero padding would fabricate phantom edges


class NetworkWeights:
    """Ordered named conv layers plus (optionally) their Adam state."""

    def __init__(self, layers: list[tuple[str, ConvLayer]],
                 adam: AdamState | None = None) -> None:
        _validate_chain(layers)
        self.layers = layers
        self.adam = adam

    def layer(self, name: str) -> ConvLayer:
        for n, l in self.layers:
            if n == name:
                return l
        raise KeyError(name)

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, l in self.layers:
            out[f"{name}.weight"] = l.weights.data
            out[f"{name}.bias"] = l.bias
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.layers = [
            (name, l.with_params(params[f"{name}.weight"], params[f"{name}.bias"]))
            for name, l in self.layers
        ]

    def num_params(self) -> int:
        return sum(l.num_params() for _, l in self.layers)


def _validate_chain(layers: list[tuple[str, ConvLayer]]) -> None:
    names = [n for n, _ in layers]
    expected = [s[0] for s in LAYER_SPECS]
    if names != expected:
        raise ValueError(f"layer list {names} does not match expected {expected}")
    ch = 6
    for name, l in layers:
        if name == SHUFFLE_AFTER:
            if l.out_channels % (SHUFFLE_FACTOR ** 2):
                raise ValueError(
                    f"{name} outputs {l.out_channels} channels, not divisible by "
                    f"{SHUFFLE_FACTOR ** 2} (sub-pixel upsampling infeasible)"
                )
        if l.in_channels != ch:
            raise ValueError(f"{name} expects {l.in_channels} input channels, chain carries {ch}")
        ch = l.out_channels
        if name == SHUFFLE_AFTER:
            ch //= SHUFFLE_FACTOR ** 2
    if ch != 6:
        raise ValueError(f"network must end with 6 channels, got {ch}")


def build_network(seed: int) -> NetworkWeights:
    """Fresh network with seeded Glorot-uniform kernels and zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for name, cin, cout, k, stride in LAYER_SPECS:
        fan_in = cin * k * k
        fan_out = cout * k * k
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(cout, cin, k, k)).astype(np.float32)
        b = np.zeros(cout, np.float32)
        layers.append((name, ConvLayer(w, b, stride=stride, padding=1,
                                       padding_mode=PADDING_MODE)))
    return NetworkWeights(layers)


def _check_field(g: Tensor) -> None:
    N, C, H, W = g.dims
    if C != 6:
        raise ValueError(f"network consumes 6-channel gradient fields, got {C} channels")
    if H % 4 or W % 4:
        raise ValueError(
            f"spatial dims {H}x{W} must be divisible by 4; "
            f"replicate-pad the input first (see the stylize pipeline)"
        )


def forward_with_cache(net: NetworkWeights, x: np.ndarray, keep: bool):
    """Run the stack on a raw (N,6,H,W) array.

    Returns (output, cache); cache holds per-layer conv geometry, patch
    matrices and pre-activation outputs when keep=True, else None.
    """
    cache = [] if keep else None
    h = x
    for name, layer in net.layers:
        if keep:
            out, geo = convops.conv_forward(h, layer.weights.data, layer.bias,
                                            layer.stride, layer.padding,
                                            layer.padding_mode, want_cache=True)
            mask = (out > 0.0) if name != LINEAR_OUTPUT else None
            cache.append({"name": name, "x": h, "geo": geo, "mask": mask})
        else:
            out = convops.conv_forward(h, layer.weights.data, layer.bias,
                                       layer.stride, layer.padding, layer.padding_mode)
        if name != LINEAR_OUTPUT:
            np.maximum(out, 0.0, out=out)
        h = out
        if name == SHUFFLE_AFTER:
            h = convops.shuffle_raw(h, SHUFFLE_FACTOR)
    return h, cache


def backward_from_cache(net: NetworkWeights, cache, grad_out: np.ndarray,
                        want_input_grad: bool = True):
    """Chain rule through the cached forward pass.

    Returns (param gradient dict, input gradient array or None).
    """
    g = grad_out
    grads: dict[str, np.ndarray] = {}
    for entry, (name, layer) in zip(reversed(cache), reversed(net.layers)):
        if name == SHUFFLE_AFTER:
            g = convops.unshuffle_raw(g, SHUFFLE_FACTOR)
        if name != LINEAR_OUTPUT:
            g = g * entry["mask"]
        need_gx = want_input_grad or name != net.layers[0][0]
        gx, gw, gb = convops.conv_backward(entry["x"], layer.weights.data,
                                           layer.stride, layer.padding,
                                           layer.padding_mode, g,
                                           cache=entry["geo"],
                                           want_input_grad=need_gx)
        grads[f"{name}.weight"] = gw
        grads[f"{name}.bias"] = gb
        g = gx
    return grads, g


def net_forward(net: NetworkWeights, g: Tensor) -> Tensor:
    """Map a gradient field through the network; output shape equals input."""
    _check_field(g)
    out, _ = forward_with_cache(net, g.data, keep=False)
    return Tensor(out)


def net_backward(net: NetworkWeights, g: Tensor, grad_out: Tensor):
    """Parameter and input gradients of sum(grad_out * net_forward(g))."""
    _check_field(g)
    if grad_out.dims != g.dims:
        raise ValueError(f"grad_out shape {grad_out.dims} != input shape {g.dims}")
    _, cache = forward_with_cache(net, g.data, keep=True)
    grads, gx = backward_from_cache(net, cache, grad_out.data)
    return grads, Tensor(gx)


# ---------------------------------------------------------------------------
# checkpoints

_STEP_KEY = "adam.step"
_ITER_KEY = "meta.iteration"


def save_checkpoint(net: NetworkWeights, path, iteration: int = 0) -> None:
    """Write weights (and optimizer state, if any) in the GSTW format."""
    entries: list[tuple[str, np.ndarray]] = []
    for name, layer in net.layers:
        entries.append((f"{name}.weight", layer.weights.data))
        entries.append((f"{name}.bias", layer.bias))
    entries.append((_ITER_KEY, np.array([iteration], np.float32)))
    if net.adam is not None:
        entries.append((_STEP_KEY, np.array([net.adam.step], np.float32)))
        for key in net.params():
            entries.append((f"{key}.adam_m", net.adam.m[key]))
            entries.append((f"{key}.adam_v", net.adam.v[key]))
    gstw.write_tensors(path, entries)


def load_checkpoint(path) -> tuple[NetworkWeights, int]:
    """Read a checkpoint back; validates the full layer chain."""
    table = dict(gstw.read_tensors(path))
    layers = []
    for name, cin, cout, k, stride in LAYER_SPECS:
        wkey, bkey = f"{name}.weight", f"{name}.bias"
        if wkey not in table or bkey not in table:
            raise ValueError(f"checkpoint missing layer '{name}'")
        w = table[wkey]
        if w.shape != (cout, cin, k, k):
            raise ValueError(f"'{name}' kernel shape {w.shape}, expected {(cout, cin, k, k)}")
        layers.append((name, ConvLayer(w, table[bkey], stride=stride, padding=1,
                                       padding_mode=PADDING_MODE)))
    net = NetworkWeights(layers)
    iteration = int(table[_ITER_KEY][0]) if _ITER_KEY in table else 0
    if _STEP_KEY in table:
        state = AdamState(net.params())
        state.step = int(table[_STEP_KEY][0])
        for key in net.params():
            state.m[key] = table[f"{key}.adam_m"].copy()
            state.v[key] = table[f"{key}.adam_v"].copy()
        net.adam = state
    return net, iteration
