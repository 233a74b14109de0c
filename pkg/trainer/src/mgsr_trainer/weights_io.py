"""MGSR1 generator-weight files: the trainer-side writer and reader.

Layout (all integers little-endian):

    magic  b"MGSR"
    u32    version (1)
    u32    upscale factor per pass (2)
    u32    residual block count B
    u32    tensor record count
    then per tensor:
        u32   name length, UTF-8 name
        u8    dtype (0 = float32), u8 ndim
        ndim x u32 dims
        float32 LE values, C order

Tensor records are written in sorted-name order. A generator whose output
stage runs at scale s != 1 carries one extra 0-dim record named
``tail.tanh_scale`` after the sorted block. This module is self-contained
so the trainer never imports the solver package it feeds.
"""

from __future__ import annotations

import struct

import numpy as np
import torch

from .model import Generator, export_tensor_map, load_tensor_map

__all__ = ["read_generator", "write_generator"]

_MAGIC = b"MGSR"
_VERSION = 1
_UPSCALE = 2
_TANH_SCALE_NAME = "tail.tanh_scale"


def _put_record(out: bytearray, name: str, arr: np.ndarray) -> None:
    raw = name.encode("utf-8")
    out += struct.pack("<I", len(raw))
    out += raw
    out += struct.pack("<BB", 0, arr.ndim)
    out += struct.pack(f"<{arr.ndim}I", *arr.shape)
    out += np.ascontiguousarray(arr, dtype="<f4").tobytes()


def write_generator(g: Generator, path) -> None:
    """Export a generator's inference tensors (BN running statistics)."""
    tensors = {
        name: np.asarray(value.numpy(), dtype=np.float64)
        for name, value in export_tensor_map(g).items()
    }
    names = sorted(tensors)
    extras = [] if g.output_scale == 1.0 else [_TANH_SCALE_NAME]
    out = bytearray()
    out += _MAGIC
    out += struct.pack(
        "<IIII", _VERSION, _UPSCALE, g.num_residual_blocks, len(names) + len(extras)
    )
    for name in names:
        _put_record(out, name, tensors[name])
    for name in extras:
        _put_record(out, name, np.float64(g.output_scale))
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def read_generator(path) -> Generator:
    """Load an MGSR1 file into a fresh generator (eval mode)."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(offset: int, count: int) -> tuple[bytes, int]:
        if offset + count > len(blob):
            raise ValueError(f"truncated file: need {offset + count} bytes")
        return blob[offset : offset + count], offset + count

    raw, pos = take(0, 4)
    if raw != _MAGIC:
        raise ValueError(f"bad magic {raw!r}, expected {_MAGIC!r}")
    raw, pos = take(pos, 16)
    version, upscale, blocks, count = struct.unpack("<IIII", raw)
    if version != _VERSION:
        raise ValueError(f"unsupported version {version}")
    if upscale != _UPSCALE:
        raise ValueError(f"upscale per pass must be {_UPSCALE}, got {upscale}")

    tensors: dict[str, torch.Tensor] = {}
    scale = 1.0
    for _ in range(count):
        raw, pos = take(pos, 4)
        (name_len,) = struct.unpack("<I", raw)
        raw, pos = take(pos, name_len)
        name = raw.decode("utf-8")
        raw, pos = take(pos, 2)
        dtype, ndim = struct.unpack("<BB", raw)
        if dtype != 0:
            raise ValueError(f"tensor {name}: unsupported dtype {dtype}")
        raw, pos = take(pos, 4 * ndim)
        dims = struct.unpack(f"<{ndim}I", raw) if ndim else ()
        size = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw, pos = take(pos, 4 * size)
        values = np.frombuffer(raw, dtype="<f4").reshape(dims)
        if name in tensors or (name == _TANH_SCALE_NAME and scale != 1.0):
            raise ValueError(f"duplicate tensor {name}")
        if name == _TANH_SCALE_NAME:
            if dims != ():
                raise ValueError(f"{_TANH_SCALE_NAME} must be a scalar")
            scale = float(values)
        else:
            tensors[name] = torch.from_numpy(values.copy())
    if pos != len(blob):
        raise ValueError(f"trailing bytes after {count} tensors")

    g = Generator(blocks, output_scale=scale)
    load_tensor_map(g, tensors)
    g.eval()
    return g
