"""Synthetic Poisson problems and training-window extraction.

Provides analytic single-mode problems, pseudo-spectrally generated
turbulent source terms with spectral solution oracles, window-pair
extraction for super-resolution training, and the ``MGWP`` window-dataset
file format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .grid import Grid, NormBounds, _normalize_array
from .transfer import restrict

__all__ = [
    "FlowField",
    "WindowPair",
    "extract_windows",
    "read_windows",
    "single_mode_field",
    "solve_poisson_spectral",
    "turbulent_source",
    "write_windows",
]

_MGWP_MAGIC = b"MGWP"
_LR_SIDE = 6
_HR_SIDE = 12


def single_mode_field(n: int, k: int) -> tuple[Grid, Grid]:
    """Analytic pair p = cos(kx) + cos(ky), f = laplace(p) = -k^2 p.

    Returns (p, f) on an n x n node-centered grid over [0, 2pi)^2.
    """
    if not (1 <= k < n / 2):
        raise ValueError(f"mode number must satisfy 1 <= k < n/2, got k={k}, n={n}")
    x = 2.0 * np.pi * np.arange(n) / n
    mode = np.cos(k * x)
    p = mode[:, None] + mode[None, :]
    p -= p.mean()
    f = -(k**2) * p
    f -= f.mean()
    return Grid(p), Grid(f)


def _wavenumbers(n: int) -> tuple[np.ndarray, np.ndarray]:
    freqs = np.fft.fftfreq(n, d=1.0 / n)
    return np.meshgrid(freqs, freqs, indexing="xy")


def solve_poisson_spectral(f: Grid, discrete: bool = False) -> Grid:
    """Mean-free Poisson solution by FFT.

    With ``discrete=False`` the continuous symbol -|k|^2 is inverted; with
    ``discrete=True`` the eigenvalues of the 5-point stencil,
    -(4/h^2) * (sin^2(kx h/2) + sin^2(ky h/2)), are used instead, giving the
    exact solution of the discrete system.
    """
    n = f.n
    kx, ky = _wavenumbers(n)
    if discrete:
        h = f.h
        lam = -(4.0 / h**2) * (np.sin(kx * h / 2.0) ** 2 + np.sin(ky * h / 2.0) ** 2)
    else:
        lam = -(kx**2 + ky**2)
    lam[0, 0] = 1.0  # k = 0 handled by zeroing the mean below
    phat = np.fft.fft2(f.data) / lam
    phat[0, 0] = 0.0
    p = np.real(np.fft.ifft2(phat))
    return Grid(p - p.mean())


@dataclass(frozen=True)
class FlowField:
    """Divergence-free velocity field that generated a turbulent source."""

    u: Grid
    v: Grid
    k_peak: int
    seed: int


def turbulent_source(
    n: int, k_peak: int, seed: int, p_rms: float | None = None
) -> tuple[Grid, FlowField, Grid]:
    """Pseudo-spectral turbulent Poisson source with a spectral oracle.

    A streamfunction with random phases and amplitude
    |psi_hat(k)| ~ k * exp(-(k/k_peak)^2) defines u = d(psi)/dy,
    v = -d(psi)/dx (divergence-free by construction). The source is
    f = -div((u . grad) u), computed spectrally with 2/3-rule dealiasing,
    and the oracle solves p_hat = -f_hat / |k|^2. The velocity is scaled to
    unit RMS magnitude; ``p_rms`` optionally rescales the whole problem so
    the oracle has exactly that RMS.

    Returns (f, flow, p_oracle).
    """
    if not (2 <= k_peak <= n / 4):
        raise ValueError(f"need 2 <= k_peak <= n/4, got k_peak={k_peak}, n={n}")
    rng = np.random.default_rng(seed)
    kx, ky = _wavenumbers(n)
    k2 = kx**2 + ky**2
    kr = np.sqrt(k2)

    noise_hat = np.fft.fft2(rng.standard_normal((n, n)))
    mag = np.abs(noise_hat)
    mag[mag == 0.0] = 1.0
    phases = noise_hat / mag
    psi_hat = kr * np.exp(-((kr / k_peak) ** 2)) * phases
    psi_hat[0, 0] = 0.0

    u_hat = 1j * ky * psi_hat
    v_hat = -1j * kx * psi_hat
    u = np.real(np.fft.ifft2(u_hat))
    v = np.real(np.fft.ifft2(v_hat))
    vel_rms = np.sqrt(np.mean(u**2 + v**2))
    u /= vel_rms
    v /= vel_rms
    u_hat /= vel_rms
    v_hat /= vel_rms

    ux = np.real(np.fft.ifft2(1j * kx * u_hat))
    uy = np.real(np.fft.ifft2(1j * ky * u_hat))
    vx = np.real(np.fft.ifft2(1j * kx * v_hat))
    vy = np.real(np.fft.ifft2(1j * ky * v_hat))
    adv_x = u * ux + v * uy
    adv_y = u * vx + v * vy

    # 2/3-rule mask for the quadratic advection products
    kmax = n // 2
    dealias = (np.abs(kx) <= (2.0 / 3.0) * kmax) & (np.abs(ky) <= (2.0 / 3.0) * kmax)
    f_hat = -(1j * kx * np.fft.fft2(adv_x) + 1j * ky * np.fft.fft2(adv_y))
    f_hat *= dealias
    f_hat[0, 0] = 0.0

    lam = k2.copy()
    lam[0, 0] = 1.0
    p_hat = -f_hat / lam
    p_hat[0, 0] = 0.0

    f = np.real(np.fft.ifft2(f_hat))
    f -= f.mean()
    p = np.real(np.fft.ifft2(p_hat))
    p -= p.mean()

    if p_rms is not None:
        if p_rms <= 0.0:
            raise ValueError(f"p_rms must be > 0, got {p_rms}")
        scale = p_rms / np.sqrt(np.mean(p**2))
        f *= scale
        p *= scale
        u *= np.sqrt(scale)
        v *= np.sqrt(scale)

    flow = FlowField(u=Grid(u), v=Grid(v), k_peak=k_peak, seed=seed)
    return Grid(f), flow, Grid(p)


# ---------------------------------------------------------------------------
# training windows


@dataclass(frozen=True)
class WindowPair:
    """Normalized high/low-resolution training windows with provenance.

    ``hr`` is a 12x12 crop of a (possibly restricted) field, ``lr`` its
    factor-2 injection at aligned nodes; both are stored in normalized
    [-1, 1] space. Provenance records the source field index, the power-of-2
    restriction exponent, and the crop corner on the restricted grid.
    """

    lr: np.ndarray
    hr: np.ndarray
    field_id: int
    level: int
    corner: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "lr", np.asarray(self.lr, dtype=np.float64))
        object.__setattr__(self, "hr", np.asarray(self.hr, dtype=np.float64))
        if self.lr.shape != (_LR_SIDE, _LR_SIDE):
            raise ValueError(f"lr must be {_LR_SIDE}x{_LR_SIDE}, got {self.lr.shape}")
        if self.hr.shape != (_HR_SIDE, _HR_SIDE):
            raise ValueError(f"hr must be {_HR_SIDE}x{_HR_SIDE}, got {self.hr.shape}")


def extract_windows(
    fields: list[Grid], count: int, seed: int, b: NormBounds
) -> list[WindowPair]:
    """Draw ``count`` normalized HR/LR window pairs from the given fields.

    Each draw picks a field, restricts it by a random power-of-2 factor that
    keeps the side >= 12, crops a random 12x12 window as HR, and takes its
    factor-2 injection as LR. Both windows are normalized with the shared
    bounds, so LR equals HR at aligned nodes exactly.
    """
    if not fields:
        raise ValueError("need at least one source field")
    for g in fields:
        if g.n < _HR_SIDE:
            raise ValueError(f"field side must be >= {_HR_SIDE}, got {g.n}")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        fid = int(rng.integers(len(fields)))
        g = fields[fid]
        l_max = 0
        while g.n % (2 ** (l_max + 1)) == 0 and g.n // (2 ** (l_max + 1)) >= _HR_SIDE:
            l_max += 1
        level = int(rng.integers(l_max + 1))
        ctx = restrict(g, 2**level) if level else g
        ci, cj = (int(v) for v in rng.integers(0, ctx.n - _HR_SIDE + 1, size=2))
        hr = ctx.data[ci : ci + _HR_SIDE, cj : cj + _HR_SIDE]
        lr = hr[::2, ::2]
        q_hr, _ = _normalize_array(hr, b)
        q_lr, _ = _normalize_array(lr, b)
        pairs.append(
            WindowPair(lr=q_lr, hr=q_hr, field_id=fid, level=level, corner=(ci, cj))
        )
    return pairs


def write_windows(pairs: list[WindowPair], path) -> None:
    """Write MGWP: magic, u32 count, then per pair 36 + 144 f32 LE values
    (LR then HR, row-major) and a u32 provenance triple
    (field id, restriction power, corner packed as ci * 2^16 + cj)."""
    with open(path, "wb") as fh:
        fh.write(_MGWP_MAGIC)
        fh.write(struct.pack("<I", len(pairs)))
        for p in pairs:
            fh.write(p.lr.astype("<f4").tobytes(order="C"))
            fh.write(p.hr.astype("<f4").tobytes(order="C"))
            ci, cj = p.corner
            fh.write(struct.pack("<III", p.field_id, p.level, ci * 65536 + cj))


def read_windows(path) -> list[WindowPair]:
    """Read an MGWP window dataset written by :func:`write_windows`."""
    rec = 4 * (_LR_SIDE**2 + _HR_SIDE**2) + 12
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MGWP_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_MGWP_MAGIC!r}")
        raw = fh.read(4)
        if len(raw) != 4:
            raise ValueError("truncated header")
        (count,) = struct.unpack("<I", raw)
        blob = fh.read(rec * count)
        if len(blob) != rec * count:
            raise ValueError(
                f"truncated payload: expected {rec * count} bytes, got {len(blob)}"
            )
        if fh.read(1):
            raise ValueError("trailing bytes after payload")
    pairs = []
    for i in range(count):
        base = i * rec
        lr = np.frombuffer(blob, dtype="<f4", count=_LR_SIDE**2, offset=base)
        hr = np.frombuffer(
            blob, dtype="<f4", count=_HR_SIDE**2, offset=base + 4 * _LR_SIDE**2
        )
        fid, level, corner = struct.unpack_from("<III", blob, base + rec - 12)
        pairs.append(
            WindowPair(
                lr=lr.reshape(_LR_SIDE, _LR_SIDE).astype(np.float64),
                hr=hr.reshape(_HR_SIDE, _HR_SIDE).astype(np.float64),
                field_id=fid,
                level=level,
                corner=(corner >> 16, corner & 0xFFFF),
            )
        )
    return pairs
