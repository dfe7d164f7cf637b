"""Standalone GSTW writer.

Implements the consumer's documented byte layout so this package needs no
code from it: magic "GSTW", version u32 = 1, entry count u32, then per
entry a u16-length UTF-8 name, dtype u8 (0 = float32), rank u8, u32 dims
and raw little-endian float32 values, row-major.  Conv kernels go in as
(out, in, kh, kw); biases rank-1.
"""

from __future__ import annotations

import struct
from typing import Sequence

import numpy as np

MAGIC = b"GSTW"
VERSION = 1
DTYPE_F32 = 0


def write_gstw(path, entries: Sequence[tuple[str, np.ndarray]]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(entries)))
        for name, arr in entries:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<BB", DTYPE_F32, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.astype("<f4", copy=False).tobytes())
