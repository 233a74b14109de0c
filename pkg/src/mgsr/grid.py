"""Scalar fields on a periodic square mesh.

Containers and field-level operations shared by the whole package: the
``Grid`` type, RMS difference norms, symmetric logarithmic normalization
(and its inverse), radially binned power spectra, and the ``MGG1`` binary
grid-file format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "GridFileError",
    "NormBounds",
    "Spectrum",
    "denormalize",
    "diff_norm",
    "normalize",
    "power_spectrum",
    "read_grid",
    "write_grid",
]

_MGG_MAGIC = b"MGG1"


class GridFileError(ValueError):
    """Raised for malformed MGG1 grid files."""


@dataclass(frozen=True)
class Grid:
    """Square node-centered field on [0, 2pi)^2 with periodic wrap.

    ``data[i, j]`` holds the value at (x, y) = (2*pi*j/n, 2*pi*i/n); rows
    advance in y, columns in x. Stored as C-contiguous float64.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"grid data must be square 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"grid side must be >= 2, got {arr.shape[0]}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> float:
        """Mesh spacing 2*pi/n."""
        return 2.0 * np.pi / self.n

    @classmethod
    def zeros(cls, n: int) -> "Grid":
        return cls(np.zeros((n, n)))

    def mean_subtracted(self) -> "Grid":
        return Grid(self.data - self.data.mean())

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.data**2)))


def diff_norm(a: Grid, b: Grid) -> float:
    """Root-mean-square difference between two same-size grids."""
    if a.n != b.n:
        raise ValueError(f"grid sizes differ: {a.n} vs {b.n}")
    return float(np.sqrt(np.mean((a.data - b.data) ** 2)))


@dataclass(frozen=True)
class NormBounds:
    """Magnitude band [p_min, p_max] for symmetric log normalization."""

    p_min: float = 1e-10
    p_max: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.p_min < self.p_max):
            raise ValueError(
                f"need 0 < p_min < p_max, got ({self.p_min}, {self.p_max})"
            )

    @property
    def log_lo(self) -> float:
        return float(np.log10(self.p_min))

    @property
    def log_span(self) -> float:
        return float(np.log10(self.p_max) - np.log10(self.p_min))


def _normalize_array(p: np.ndarray, b: NormBounds) -> tuple[np.ndarray, np.ndarray]:
    signs = np.sign(p)
    mag = np.abs(p)
    with np.errstate(divide="ignore"):
        t = (np.log10(mag) - b.log_lo) / b.log_span
    q = np.clip(t, 0.0, 1.0) * signs
    return q, signs


def _denormalize_array(q: np.ndarray, signs: np.ndarray, b: NormBounds) -> np.ndarray:
    # sign 0 annihilates the floor value, so exact zeros survive the trip
    return signs * 10.0 ** (b.log_lo + np.abs(q) * b.log_span)


def normalize(p: Grid, b: NormBounds) -> tuple[Grid, Grid]:
    """Map a field onto [-1, 1] through a symmetric log transform.

    q = clamp01((log10|p| - log10 p_min) / (log10 p_max - log10 p_min)) * sgn(p).
    Magnitudes at or below p_min map to 0, at or above p_max to +-1.
    Returns (q, signs); the sign grid is needed for exact inversion because
    q = 0 no longer distinguishes 0 from sub-floor values.
    """
    q, signs = _normalize_array(p.data, b)
    return Grid(q), Grid(signs)


def denormalize(q: Grid, signs: Grid, b: NormBounds) -> Grid:
    """Invert :func:`normalize` on the representable band.

    p = sign * 10**(log10 p_min + |q| * (log10 p_max - log10 p_min)); cells
    with sign 0 return exactly 0.
    """
    if q.n != signs.n:
        raise ValueError(f"grid sizes differ: {q.n} vs {signs.n}")
    return Grid(_denormalize_array(q.data, signs.data, b))


@dataclass(frozen=True)
class Spectrum:
    """Radially binned Fourier power: ``power[i]`` at integer radius ``k[i]``."""

    k: np.ndarray
    power: np.ndarray


def power_spectrum(p: Grid, peak_normalize: bool = False) -> Spectrum:
    """Radial power spectrum of a periodic field.

    Sums |FFT|^2 over annuli of integer radius round(sqrt(kx^2 + ky^2)) for
    bins k = 0 .. n/2; radii beyond n/2 (corner modes) accumulate into the
    last bin so the unnormalized bin total keeps the exact Parseval identity
    sum(power) = n^2 * sum(p^2). With ``peak_normalize`` the bins are scaled
    by the maximum bin (a zero field stays all-zero).
    """
    n = p.n
    if n < 4:
        raise ValueError(f"power spectrum needs n >= 4, got {n}")
    fhat = np.fft.fft2(p.data)
    p2 = np.abs(fhat) ** 2
    freqs = np.fft.fftfreq(n, d=1.0 / n)
    kx, ky = np.meshgrid(freqs, freqs, indexing="xy")
    radius = np.rint(np.hypot(kx, ky)).astype(np.int64)
    np.minimum(radius, n // 2, out=radius)
    power = np.bincount(radius.ravel(), weights=p2.ravel(), minlength=n // 2 + 1)
    if peak_normalize:
        peak = power.max()
        if peak > 0.0:
            power = power / peak
    return Spectrum(k=np.arange(n // 2 + 1), power=power)


def write_grid(g: Grid, path) -> None:
    """Write a grid as MGG1: magic, u32 LE side, n*n float64 LE row-major."""
    with open(path, "wb") as fh:
        fh.write(_MGG_MAGIC)
        fh.write(struct.pack("<I", g.n))
        fh.write(g.data.astype("<f8").tobytes(order="C"))


def read_grid(path) -> Grid:
    """Read an MGG1 grid file written by :func:`write_grid`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MGG_MAGIC:
            raise GridFileError(f"bad magic {magic!r}, expected {_MGG_MAGIC!r}")
        raw = fh.read(4)
        if len(raw) != 4:
            raise GridFileError("truncated header")
        (n,) = struct.unpack("<I", raw)
        if n < 2:
            raise GridFileError(f"grid side must be >= 2, got {n}")
        payload = fh.read(8 * n * n)
        if len(payload) != 8 * n * n:
            raise GridFileError(
                f"truncated payload: expected {8 * n * n} bytes, got {len(payload)}"
            )
        if fh.read(1):
            raise GridFileError("trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(n, n)
    return Grid(data.copy())
