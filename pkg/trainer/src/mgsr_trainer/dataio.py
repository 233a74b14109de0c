"""MGWP training-window datasets: the trainer-side reader.

Layout: magic b"MGWP", u32 LE pair count, then per pair 36 float32 LE
low-resolution values (6x6, row-major), 144 float32 LE high-resolution
values (12x12), and three u32 provenance fields (source field id,
restriction power, crop corner packed as ci * 2^16 + cj). The provenance
triple is irrelevant to training and is skipped. Values are already
normalized to [-1, 1]. Self-contained on purpose: the trainer never
imports the solver package whose data files it reads.
"""

from __future__ import annotations

import struct

import numpy as np
import torch

__all__ = ["LR_SIDE", "HR_SIDE", "load_pairs"]

_MAGIC = b"MGWP"
LR_SIDE = 6
HR_SIDE = 12
_RECORD = 4 * (LR_SIDE**2 + HR_SIDE**2) + 12


def load_pairs(path) -> tuple[torch.Tensor, torch.Tensor]:
    """Read all window pairs as float32 tensors (N, 3, 6, 6) and (N, 3, 12, 12).

    The single data channel is replicated onto all three network channels.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        raw = fh.read(4)
        if len(raw) != 4:
            raise ValueError("truncated header")
        (count,) = struct.unpack("<I", raw)
        blob = fh.read(_RECORD * count)
        if len(blob) != _RECORD * count:
            raise ValueError(
                f"truncated payload: expected {_RECORD * count} bytes, "
                f"got {len(blob)}"
            )
        if fh.read(1):
            raise ValueError("trailing bytes after payload")
    if count == 0:
        raise ValueError("dataset holds no window pairs")

    records = np.frombuffer(blob, dtype=np.uint8).reshape(count, _RECORD)
    lr = records[:, : 4 * LR_SIDE**2].copy().view("<f4")
    hr = records[:, 4 * LR_SIDE**2 : 4 * (LR_SIDE**2 + HR_SIDE**2)].copy().view("<f4")
    lr_t = torch.from_numpy(lr.reshape(count, 1, LR_SIDE, LR_SIDE).astype(np.float32))
    hr_t = torch.from_numpy(hr.reshape(count, 1, HR_SIDE, HR_SIDE).astype(np.float32))
    return lr_t.expand(-1, 3, -1, -1).contiguous(), hr_t.expand(-1, 3, -1, -1).contiguous()
