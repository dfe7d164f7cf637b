"""Truncated VGG-16 feature extractor (through conv3-3) for the perceptual
loss, evaluated on gradient-domain inputs.

The trunk is frozen: kernels are loaded once and never updated.  Because
gradient fields have six channels and the trunk expects three, the loss
runs the vertical-RGB and horizontal-RGB slices through the trunk
separately and sums the two contributions.
"""

from __future__ import annotations

import numpy as np

from . import convops, gstw
from .layers import ConvLayer
from .tensor import Tensor

# conv name -> (in_ch, out_ch); 2x2 max-pools sit after conv1_2 and conv2_2
VGG_CONVS: list[tuple[str, int, int]] = [
    ("conv1_1", 3, 64),
    ("conv1_2", 64, 64),
    ("conv2_1", 64, 128),
    ("conv2_2", 128, 128),
    ("conv3_1", 128, 256),
    ("conv3_2", 256, 256),
    ("conv3_3", 256, 256),
]
POOL_AFTER = ("conv1_2", "conv2_2")

# channel means on the 0..255 scale (R, G, B), subtracted before the trunk
INPUT_MEAN_RGB = np.array([123.68, 116.779, 103.939], np.float32)


class VggTrunk:
    """Frozen 7-conv feature stack; all kernels 3x3, stride 1, zero pad 1."""

    def __init__(self, layers: list[tuple[str, ConvLayer]]) -> None:
        names = [n for n, _ in layers]
        expected = [n for n, _, _ in VGG_CONVS]
        if names != expected:
            raise ValueError(f"trunk layers {names} do not match expected {expected}")
        for (name, cin, cout), (_, l) in zip(VGG_CONVS, layers):
            got = l.weights.dims
            if got != (cout, cin, 3, 3):
                raise ValueError(f"'{name}' kernel shape {got}, expected {(cout, cin, 3, 3)}")
        self.layers = layers

    def layer(self, name: str) -> ConvLayer:
        return dict(self.layers)[name]


def make_random_trunk(seed: int, scale: float = 1.0) -> VggTrunk:
    """Glorot-initialized trunk; stands in for pretrained weights in tests.

    The perceptual-loss math does not depend on what the trunk weights are,
    only on the trunk being fixed.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for name, cin, cout in VGG_CONVS:
        limit = scale * np.sqrt(6.0 / ((cin + cout) * 9))
        w = rng.uniform(-limit, limit, size=(cout, cin, 3, 3)).astype(np.float32)
        b = np.zeros(cout, np.float32)
        layers.append((name, ConvLayer(w, b, stride=1, padding=1, padding_mode="zero")))
    return VggTrunk(layers)


def save_vgg(trunk: VggTrunk, path) -> None:
    entries = []
    for name, layer in trunk.layers:
        entries.append((f"{name}.weight", layer.weights.data))
        entries.append((f"{name}.bias", layer.bias))
    gstw.write_tensors(path, entries)


def load_vgg(path) -> VggTrunk:
    """Load and validate a trunk from a GSTW file."""
    table = dict(gstw.read_tensors(path))
    layers = []
    for name, cin, cout in VGG_CONVS:
        wkey, bkey = f"{name}.weight", f"{name}.bias"
        if wkey not in table:
            raise ValueError(f"trunk file missing layer '{name}'")
        if bkey not in table:
            raise ValueError(f"trunk file missing bias for layer '{name}'")
        layers.append((name, ConvLayer(table[wkey], table[bkey], stride=1,
                                       padding=1, padding_mode="zero")))
    return VggTrunk(layers)


# ---------------------------------------------------------------------------
# forward / backward-to-input machinery

def _maxpool2(x: np.ndarray):
    N, C, H, W = x.shape
    win = (x.reshape(N, C, H // 2, 2, W // 2, 2)
           .transpose(0, 1, 2, 4, 3, 5)
           .reshape(N, C, H // 2, W // 2, 4))
    idx = win.argmax(axis=4)
    out = np.take_along_axis(win, idx[..., None], axis=4)[..., 0]
    return np.ascontiguousarray(out), idx


def _maxpool2_backward(idx: np.ndarray, grad_out: np.ndarray, in_shape) -> np.ndarray:
    N, C, H, W = in_shape
    g = np.zeros((N, C, H // 2, W // 2, 4), np.float32)
    np.put_along_axis(g, idx[..., None], grad_out[..., None], axis=4)
    return np.ascontiguousarray(
        g.reshape(N, C, H // 2, W // 2, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(N, C, H, W)
    )


def _trunk_forward(trunk: VggTrunk, x: np.ndarray, keep: bool):
    cache = [] if keep else None
    h = x
    for name, layer in trunk.layers:
        out = convops.conv_forward(h, layer.weights.data, layer.bias, 1, 1, "zero")
        if keep:
            cache.append({"name": name, "in_shape": h.shape, "mask": out > 0.0})
        np.maximum(out, 0.0, out=out)
        h = out
        if name in POOL_AFTER:
            h, idx = _maxpool2(h)
            if keep:
                cache[-1]["pool_idx"] = idx
                cache[-1]["pool_in_shape"] = out.shape
    return h, cache


def _trunk_backward_input(trunk: VggTrunk, cache, grad_out: np.ndarray) -> np.ndarray:
    g = grad_out
    for entry, (name, layer) in zip(reversed(cache), reversed(trunk.layers)):
        if "pool_idx" in entry:
            g = _maxpool2_backward(entry["pool_idx"], g, entry["pool_in_shape"])
        g = g * entry["mask"]
        g = convops.conv_input_grad(layer.weights.data, g, entry["in_shape"], 1, 1, "zero")
    return g


def _check_spatial(H: int, W: int) -> None:
    if H % 4 or W % 4:
        raise ValueError(f"feature extraction needs H, W divisible by 4, got {H}x{W}")


def features_conv33(trunk: VggTrunk, x: Tensor) -> Tensor:
    """conv3-3 feature map of a 3-channel input already in trunk input range."""
    N, C, H, W = x.dims
    if C != 3:
        raise ValueError(f"trunk consumes 3-channel inputs, got {C} channels")
    _check_spatial(H, W)
    out, _ = _trunk_forward(trunk, x.data, keep=False)
    return Tensor(out)


def to_trunk_input(slice3: np.ndarray) -> np.ndarray:
    """Affine map from gradient values in [-1, 1] to the trunk input range."""
    return 127.5 * (slice3 + 1.0) - INPUT_MEAN_RGB[None, :, None, None]


def perceptual_loss(trunk: VggTrunk, a: Tensor, b: Tensor) -> tuple[float, Tensor]:
    """Feature-space distance between two gradient fields, plus d(loss)/da.

    Each 3-channel slice (vertical RGB, horizontal RGB) goes through the
    trunk separately; the per-slice squared feature distance is normalized
    by feature count and averaged over the batch, then the two slices sum.
    """
    if a.dims != b.dims:
        raise ValueError(f"shape mismatch {a.dims} vs {b.dims}")
    N, C, H, W = a.dims
    if C != 6:
        raise ValueError(f"expected 6-channel gradient fields, got {C} channels")
    _check_spatial(H, W)
    loss = 0.0
    grad = np.empty_like(a.data)
    for sl in (slice(0, 3), slice(3, 6)):
        xa = to_trunk_input(a.data[:, sl])
        xb = to_trunk_input(b.data[:, sl])
        fa, cache = _trunk_forward(trunk, xa, keep=True)
        fb, _ = _trunk_forward(trunk, xb, keep=False)
        diff = fa - fb
        denom = float(N * fa.shape[1] * fa.shape[2] * fa.shape[3])
        loss += float(np.square(diff, dtype=np.float64).sum()) / denom
        gfeat = (2.0 / denom) * diff
        gx = _trunk_backward_input(trunk, cache, gfeat.astype(np.float32))
        grad[:, sl] = 127.5 * gx  # chain through the affine input map
    return loss, Tensor(grad)
