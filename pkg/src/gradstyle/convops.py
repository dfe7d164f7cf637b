"""im2col-based 2-D cross-correlation kernels.

Internal engine shared by the conv layers: raw float32 ndarrays in, raw
ndarrays out.  Shape and finiteness policy live one level up in layers.py.

Two layout tricks make this fast in numpy:

* Padded input is held channel-major (C, N, Hp, Wp) so the gathered patch
  matrix comes out as (C*Kh*Kw, columns) and each convolution is a single
  sgemm.
* For stride 1 the patch matrix is gathered "wide": each kernel tap is one
  contiguous slice of the flattened padded input, so building it is pure
  memcpy.  The matrix then contains a few wrapped junk columns, which cost
  ~5% extra flops in the sgemm and are skipped when the output window is
  extracted.  Strided convolutions fall back to the classic per-tap copy.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

_F = np.float32

# grow-only scratch buffers for the no-cache (inference) path; avoids
# re-faulting hundreds of MB of pages per image. Single-threaded use only.
_POOL: dict[str, bytearray] = {}


def _scratch(role: str, shape) -> np.ndarray:
    nbytes = 4 * int(np.prod(shape))
    buf = _POOL.get(role)
    if buf is None or len(buf) < nbytes:
        buf = bytearray(nbytes)
        _POOL[role] = buf
    return np.frombuffer(buf, dtype=_F, count=nbytes // 4).reshape(shape)


def pad_channel_major(x: np.ndarray, pad: int, mode: str) -> np.ndarray:
    """(N, C, H, W) -> padded (C, N, Hp, Wp), contiguous."""
    N, C, H, W = x.shape
    Hp, Wp = H + 2 * pad, W + 2 * pad
    xp = np.empty((C, N, Hp, Wp), _F)
    core = xp[:, :, pad:pad + H, pad:pad + W]
    np.copyto(core, x.transpose(1, 0, 2, 3))
    if pad:
        if mode == "replicate":
            xp[:, :, :pad, pad:pad + W] = core[:, :, :1]
            xp[:, :, pad + H:, pad:pad + W] = core[:, :, H - 1:H]
            # columns copy after rows so corners replicate the nearest pixel
            xp[:, :, :, :pad] = xp[:, :, :, pad:pad + 1]
            xp[:, :, :, pad + W:] = xp[:, :, :, pad + W - 1:pad + W]
        elif mode == "zero":
            xp[:, :, :pad] = 0.0
            xp[:, :, pad + H:] = 0.0
            xp[:, :, :, :pad] = 0.0
            xp[:, :, :, pad + W:] = 0.0
        else:
            raise ValueError(f"unknown padding mode '{mode}'")
    return xp


def fold_padding_gradient(gxp: np.ndarray, pad: int, mode: str) -> np.ndarray:
    """Backward of pad_channel_major: (C, N, Hp, Wp) grads -> (N, C, H, W).

    Replicate padding is linear, so border gradients fold onto the edge
    pixels they were copied from; zero padding just crops.
    """
    if pad:
        if mode == "replicate":
            gxp[:, :, pad] += gxp[:, :, :pad].sum(axis=2)
            gxp[:, :, -pad - 1] += gxp[:, :, -pad:].sum(axis=2)
            g = gxp[:, :, pad:-pad]
            g[:, :, :, pad] += g[:, :, :, :pad].sum(axis=3)
            g[:, :, :, -pad - 1] += g[:, :, :, -pad:].sum(axis=3)
            g = g[:, :, :, pad:-pad]
        else:
            g = gxp[:, :, pad:-pad, pad:-pad]
    else:
        g = gxp
    return np.ascontiguousarray(g.transpose(1, 0, 2, 3))


def out_size(H: int, W: int, kh: int, kw: int, stride: int, pad: int) -> tuple[int, int]:
    oh = (H + 2 * pad - kh) // stride + 1
    ow = (W + 2 * pad - kw) // stride + 1
    return oh, ow


class _Geometry:
    """Shared bookkeeping for one conv application, cached for backward."""

    __slots__ = ("shape", "pad", "mode", "stride", "kh", "kw", "oh", "ow",
                 "Hp", "Wp", "wide", "L", "cols")

    def __init__(self, shape, kh, kw, stride, pad, mode):
        N, C, H, W = shape
        self.shape = shape
        self.kh, self.kw = kh, kw
        self.stride, self.pad, self.mode = stride, pad, mode
        self.Hp, self.Wp = H + 2 * pad, W + 2 * pad
        self.oh, self.ow = out_size(H, W, kh, kw, stride, pad)
        self.wide = stride == 1
        if self.wide:
            # flattened length covered by every tap slice; the tail that no
            # tap reaches is excluded so all slices stay in bounds
            self.L = N * self.Hp * self.Wp - (kh - 1) * self.Wp - (kw - 1)
        else:
            self.L = N * self.oh * self.ow
        self.cols = None

    def wide_view(self, mat: np.ndarray) -> np.ndarray:
        """(O, L) wide product -> (O, N, oh, ow) window on the valid columns."""
        O = mat.shape[0]
        N = self.shape[0]
        s4 = mat.itemsize
        return as_strided(mat, shape=(O, N, self.oh, self.ow),
                          strides=(self.L * s4, self.Hp * self.Wp * s4,
                                   self.Wp * s4, s4))


def _gather(xp: np.ndarray, geo: _Geometry, scratch: bool = False) -> np.ndarray:
    C = xp.shape[0]
    kh, kw = geo.kh, geo.kw
    if scratch:
        cols = _scratch("cols", (C * kh * kw, geo.L))
    else:
        cols = np.empty((C * kh * kw, geo.L), _F)
    c4 = cols.reshape(C, kh, kw, geo.L)
    if geo.wide:
        flat = xp.reshape(C, -1)
        for i in range(kh):
            for j in range(kw):
                d = i * geo.Wp + j
                c4[:, i, j] = flat[:, d:d + geo.L]
    else:
        s = geo.stride
        c6 = cols.reshape(C, kh, kw, xp.shape[1], geo.oh, geo.ow)
        for i in range(kh):
            for j in range(kw):
                c6[:, i, j] = xp[:, :, i:i + s * geo.oh:s, j:j + s * geo.ow:s]
    return cols


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int,
                 pad: int, mode: str, want_cache: bool = False):
    """Cross-correlation of (N,C,H,W) with (O,C,kh,kw) kernels plus bias.

    With want_cache=True also returns the geometry + patch matrix for
    reuse in backward.
    """
    N = x.shape[0]
    O, _, kh, kw = w.shape
    geo = _Geometry(x.shape, kh, kw, stride, pad, mode)
    xp = pad_channel_major(x, pad, mode)
    cols = _gather(xp, geo, scratch=not want_cache)
    if want_cache:
        prod = w.reshape(O, -1) @ cols
    else:
        prod = _scratch("prod", (O, geo.L))
        np.matmul(w.reshape(O, -1), cols, out=prod)
    out = np.empty((N, O, geo.oh, geo.ow), _F)
    if geo.wide:
        seg = geo.wide_view(prod)
    else:
        seg = prod.reshape(O, N, geo.oh, geo.ow)
    np.add(seg.transpose(1, 0, 2, 3), b[None, :, None, None], out=out)
    if want_cache:
        geo.cols = cols
        return out, geo
    return out


def _scatter(dcols: np.ndarray, geo: _Geometry, C: int) -> np.ndarray:
    """Adjoint of _gather + padding: patch-matrix grads -> input grads."""
    N = geo.shape[0]
    kh, kw = geo.kh, geo.kw
    gxp = np.zeros((C, N, geo.Hp, geo.Wp), _F)
    if geo.wide:
        flat = gxp.reshape(C, -1)
        d4 = dcols.reshape(C, kh, kw, geo.L)
        for i in range(kh):
            for j in range(kw):
                d = i * geo.Wp + j
                flat[:, d:d + geo.L] += d4[:, i, j]
    else:
        s = geo.stride
        d6 = dcols.reshape(C, kh, kw, N, geo.oh, geo.ow)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + s * geo.oh:s, j:j + s * geo.ow:s] += d6[:, i, j]
    return fold_padding_gradient(gxp, geo.pad, geo.mode)


def _grad_out_matrix(grad_out: np.ndarray, geo: _Geometry) -> np.ndarray:
    """(N, O, oh, ow) output grads -> (O, L) matrix matching the cols layout.

    In the wide layout the junk columns are zero, so they contribute
    nothing to the weight gradient and scatter zeros into the wrap slots.
    """
    O = grad_out.shape[1]
    if geo.wide:
        g2 = np.zeros((O, geo.L), _F)
        geo.wide_view(g2)[:] = grad_out.transpose(1, 0, 2, 3)
    else:
        g2 = np.ascontiguousarray(grad_out.transpose(1, 0, 2, 3)).reshape(O, -1)
    return g2


def conv_backward(x: np.ndarray, w: np.ndarray, stride: int, pad: int, mode: str,
                  grad_out: np.ndarray, cache: _Geometry | None = None,
                  want_input_grad: bool = True):
    """Gradients of sum(grad_out * conv_forward(x)) w.r.t. x, w and b."""
    O, C = w.shape[0], w.shape[1]
    if cache is None or cache.cols is None:
        geo = _Geometry(x.shape, w.shape[2], w.shape[3], stride, pad, mode)
        geo.cols = _gather(pad_channel_major(x, pad, mode), geo)
    else:
        geo = cache
    g2 = _grad_out_matrix(grad_out, geo)
    gb = grad_out.sum(axis=(0, 2, 3), dtype=np.float64).astype(_F)
    gw = (g2 @ geo.cols.T).reshape(w.shape)
    gx = None
    if want_input_grad:
        dcols = w.reshape(O, -1).T @ g2
        gx = _scatter(dcols, geo, C)
    return gx, gw, gb


def conv_input_grad(w: np.ndarray, grad_out: np.ndarray, shape_nchw,
                    stride: int, pad: int, mode: str) -> np.ndarray:
    """Input gradient only; used where kernels are frozen (feature trunk)."""
    O, C = w.shape[0], w.shape[1]
    geo = _Geometry(shape_nchw, w.shape[2], w.shape[3], stride, pad, mode)
    g2 = _grad_out_matrix(grad_out, geo)
    dcols = w.reshape(O, -1).T @ g2
    return _scatter(dcols, geo, C)


def shuffle_raw(x: np.ndarray, r: int) -> np.ndarray:
    """Depth-to-space on a raw array, no validation (hot path)."""
    N, C, H, W = x.shape
    return np.ascontiguousarray(
        x.reshape(N, C // (r * r), r, r, H, W)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(N, C // (r * r), H * r, W * r))


def unshuffle_raw(x: np.ndarray, r: int) -> np.ndarray:
    """Space-to-depth on a raw array, no validation (hot path)."""
    N, C, H, W = x.shape
    return np.ascontiguousarray(
        x.reshape(N, C, H // r, r, W // r, r)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(N, C * r * r, H // r, W // r))
