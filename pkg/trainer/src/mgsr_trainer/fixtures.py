"""Parity fixtures: recorded generator forward passes as raw float32 blobs.

Each fixture is a pair of files — ``fixture_NN_input.f32`` holding a
(3, 6, 6) network input and ``fixture_NN_output.f32`` the matching
(3, 12, 12) eval-mode output — written little-endian in C order, plus a
``manifest.json`` naming the pairs, the shapes, and the weight file they
were recorded from. Any independent implementation of the generator can
replay the inputs against the weight file and compare outputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .dataio import LR_SIDE
from .model import CHANNELS, Generator

__all__ = ["emit_fixtures"]


def emit_fixtures(
    g: Generator,
    inputs: torch.Tensor,
    out_dir,
    weights_relpath: str,
) -> Path:
    """Record eval-mode forward passes; returns the manifest path.

    ``inputs`` is (N, 3, 6, 6); ``weights_relpath`` is the weight file's
    path relative to ``out_dir``, stored verbatim in the manifest.
    """
    expected = (CHANNELS, LR_SIDE, LR_SIDE)
    if inputs.ndim != 4 or tuple(inputs.shape[1:]) != expected:
        raise ValueError(
            f"inputs must be (N, {', '.join(map(str, expected))}), "
            f"got {tuple(inputs.shape)}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g.eval()
    with torch.no_grad():
        outputs = g(inputs.to(torch.float32))

    pairs = []
    for i in range(inputs.shape[0]):
        in_name = f"fixture_{i:02d}_input.f32"
        out_name = f"fixture_{i:02d}_output.f32"
        (out / in_name).write_bytes(
            np.ascontiguousarray(inputs[i].numpy(), dtype="<f4").tobytes()
        )
        (out / out_name).write_bytes(
            np.ascontiguousarray(outputs[i].numpy(), dtype="<f4").tobytes()
        )
        pairs.append({"input": in_name, "output": out_name})

    manifest = {
        "weights": weights_relpath,
        "input_shape": list(inputs.shape[1:]),
        "output_shape": list(outputs.shape[1:]),
        "dtype": "float32-le",
        "pairs": pairs,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
