"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from mgsr import srmodel


@pytest.fixture(scope="session")
def nn_weights() -> srmodel.GeneratorWeights:
    """Crafted weights that turn the generator into an exact x2
    nearest-neighbor upsampler; session-scoped because construction
    allocates the full tensor set."""
    return srmodel.make_nearest_neighbor_weights()


def in_band_values(
    shape: tuple[int, ...], seed: int, lo_exp: float = -7.0, hi_exp: float = -3.5
) -> np.ndarray:
    """Signed values with magnitudes log-uniform inside the normalization
    band, keeping clear of both the floor (1e-10) and the ceiling (1e-3)."""
    rng = np.random.default_rng(seed)
    mag = 10.0 ** rng.uniform(lo_exp, hi_exp, size=shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return mag * sign
