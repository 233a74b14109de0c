"""Grid transfer operators between multigrid levels.

Restriction is plain injection at coincident nodes; prolongation is
separable periodic cubic-convolution interpolation (Keys kernel, a = -1/2),
which is exact at coincident nodes so restrict(prolong(c)) == c.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import Grid

__all__ = ["PROLONG_RATIOS", "restrict", "spline_prolong"]

# Ratios the multigrid ladder may request from a prolongation operator.
PROLONG_RATIOS = (2, 4, 8, 16)


def _check_power_of_two(s: int) -> None:
    if s < 2 or (s & (s - 1)) != 0:
        raise ValueError(f"transfer ratio must be a power of two >= 2, got {s}")


def restrict(fine: Grid, s: int, subtract_mean: bool = True) -> Grid:
    """Injection restriction: coarse[i, j] = fine[s*i, s*j].

    By default the result is mean-subtracted for use as a coarse-level
    right-hand side; pass ``subtract_mean=False`` for raw sampling.
    """
    _check_power_of_two(s)
    if fine.n % s != 0:
        raise ValueError(f"fine side {fine.n} is not divisible by ratio {s}")
    coarse = fine.data[::s, ::s].copy()
    if subtract_mean:
        coarse -= coarse.mean()
    return Grid(coarse)


def _keys_weight(d: np.ndarray) -> np.ndarray:
    """Cubic convolution kernel with a = -1/2 at distances |d|."""
    d = np.abs(d)
    near = (1.5 * d - 2.5) * d * d + 1.0
    far = ((-0.5 * d + 2.5) * d - 4.0) * d + 2.0
    return np.where(d <= 1.0, near, np.where(d < 2.0, far, 0.0))


@lru_cache(maxsize=None)
def _prolong_matrix(n_coarse: int, s: int) -> np.ndarray:
    """Dense 1-D periodic interpolation operator of shape (n_coarse*s, n_coarse)."""
    n_fine = n_coarse * s
    base, frac = np.divmod(np.arange(n_fine), s)
    t = frac / s
    op = np.zeros((n_fine, n_coarse))
    for offset in (-1, 0, 1, 2):
        cols = (base + offset) % n_coarse
        w = _keys_weight(t - offset)
        np.add.at(op, (np.arange(n_fine), cols), w)
    return op


def spline_prolong(coarse: Grid, s: int) -> Grid:
    """Separable periodic cubic-spline interpolation onto an s-times finer grid.

    Exact at coincident nodes (fine index a multiple of s), so it is a right
    inverse of :func:`restrict`.
    """
    _check_power_of_two(s)
    if s not in PROLONG_RATIOS:
        raise ValueError(f"prolongation ratio must be one of {PROLONG_RATIOS}, got {s}")
    op = _prolong_matrix(coarse.n, s)
    return Grid(op @ coarse.data @ op.T)
