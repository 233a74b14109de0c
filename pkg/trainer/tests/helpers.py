"""Synthetic window datasets, in memory and as MGWP files, for the test suite."""

from __future__ import annotations

import struct

import numpy as np
import torch

LR_SIDE = 6
HR_SIDE = 12


def make_hr_windows(count: int, seed: int) -> np.ndarray:
    """Smooth random 12x12 windows in [-1, 1] built from low-frequency cosines."""
    rng = np.random.default_rng(seed)
    xx, yy = np.meshgrid(np.arange(HR_SIDE), np.arange(HR_SIDE), indexing="ij")
    out = np.zeros((count, HR_SIDE, HR_SIDE))
    for i in range(count):
        acc = np.zeros((HR_SIDE, HR_SIDE))
        for _ in range(4):
            kx, ky = rng.integers(0, 3, size=2)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            acc += rng.uniform(0.1, 0.5) * np.cos(
                2.0 * np.pi * (kx * xx + ky * yy) / HR_SIDE + phase
            )
        out[i] = acc / max(1.0, 1.05 * np.abs(acc).max())
    return out


def to_tensors(hr: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
    """(N, 12, 12) float windows -> ((N, 3, 6, 6), (N, 3, 12, 12)) tensors."""
    q = np.ascontiguousarray(hr, dtype=np.float32)
    lr_t = torch.from_numpy(np.ascontiguousarray(q[:, ::2, ::2]))[:, None]
    hr_t = torch.from_numpy(q)[:, None]
    return (
        lr_t.expand(-1, 3, -1, -1).contiguous(),
        hr_t.expand(-1, 3, -1, -1).contiguous(),
    )


def write_mgwp(path, hr_windows: np.ndarray) -> None:
    """Write an MGWP dataset; each pair's LR window is the HR factor-2 injection."""
    with open(path, "wb") as fh:
        fh.write(b"MGWP")
        fh.write(struct.pack("<I", hr_windows.shape[0]))
        for i in range(hr_windows.shape[0]):
            hr = np.ascontiguousarray(hr_windows[i], dtype="<f4")
            fh.write(np.ascontiguousarray(hr[::2, ::2]).tobytes(order="C"))
            fh.write(hr.tobytes(order="C"))
            fh.write(struct.pack("<III", i, 0, 0))
