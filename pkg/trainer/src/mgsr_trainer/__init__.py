"""Adversarial trainer for the x2 super-resolution prolongation generator.

Reads MGWP window datasets, trains an SRGAN-style generator/discriminator
pair, exports generator weights as MGSR1 files, and records raw-float32
parity fixtures so independent inference implementations can be checked
against the trained network.
"""

from .dataio import load_pairs
from .fixtures import emit_fixtures
from .model import (
    Discriminator,
    Generator,
    export_tensor_map,
    load_tensor_map,
    make_nearest_neighbor_generator,
)
from .train import StepRecord, TrainConfig, TrainResult, train
from .weights_io import read_generator, write_generator

__all__ = [
    "Discriminator",
    "Generator",
    "StepRecord",
    "TrainConfig",
    "TrainResult",
    "emit_fixtures",
    "export_tensor_map",
    "load_pairs",
    "load_tensor_map",
    "make_nearest_neighbor_generator",
    "read_generator",
    "train",
    "write_generator",
]

__version__ = "0.1.0"
