"""Reader and writer for the GSTW binary weight container.

This one format carries VGG trunk weights and training checkpoints alike.
Layout, all integers little-endian:

    magic    4 bytes   b"GSTW"
    version  u32       currently 1
    count    u32       number of entries
    per entry:
        name_len u16, name (UTF-8)
        dtype    u8    0 = float32 (the only defined value)
        rank     u8
        dims     u32 * rank
        data     float32 * prod(dims), row-major

Conv kernels are stored rank-4 as (out, in, kh, kw); biases rank-1.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Sequence

import numpy as np

from .errors import WeightFormatError

MAGIC = b"GSTW"
VERSION = 1
DTYPE_F32 = 0

_MAX_RANK = 8


def write_tensors(path, entries: Sequence[tuple[str, np.ndarray]]) -> None:
    """Write named float32 arrays to `path`, preserving order."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(entries)))
        for name, arr in entries:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            if arr.ndim > _MAX_RANK:
                raise ValueError(f"entry '{name}' has rank {arr.ndim} > {_MAX_RANK}")
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<BB", DTYPE_F32, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.astype("<f4", copy=False).tobytes())


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise WeightFormatError(f"unexpected end of file while reading {what}")
    return buf


def read_tensors(path) -> list[tuple[str, np.ndarray]]:
    """Read all named arrays from a GSTW file, in file order.

    The magic and version are checked before any tensor data is touched.
    """
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise WeightFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, count = struct.unpack("<II", _read_exact(f, 8, "header"))
        if version != VERSION:
            raise WeightFormatError(f"unsupported version {version}, expected {VERSION}")
        entries: list[tuple[str, np.ndarray]] = []
        for k in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, f"entry {k} name length"))
            name = _read_exact(f, name_len, f"entry {k} name").decode("utf-8")
            dtype, rank = struct.unpack("<BB", _read_exact(f, 2, f"'{name}' dtype/rank"))
            if dtype != DTYPE_F32:
                raise WeightFormatError(f"entry '{name}': unknown dtype code {dtype}")
            if rank > _MAX_RANK:
                raise WeightFormatError(f"entry '{name}': rank {rank} > {_MAX_RANK}")
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, f"'{name}' dims"))
            n_vals = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read_exact(f, 4 * n_vals, f"'{name}' values")
            arr = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
            entries.append((name, arr))
        return entries
