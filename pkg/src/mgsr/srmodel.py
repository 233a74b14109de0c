"""Windowed super-resolution prolongation with a convolutional generator.

The generator is a compact SRGAN-style network (head conv + PReLU, residual
conv/BN blocks, a post-residual conv/BN with global skip, one subpixel x2
upsampling stage, and a 9x9 tail conv followed by a scaled tanh). Inference
is pure NumPy and fully deterministic. Weights travel in the ``MGSR1``
binary format.

Prolongation slides 6x6 windows over the normalized coarse grid with stride
2, super-resolves each window independently, and stitches only the central
2x2 cells of each window back together (edge windows also contribute their
outer cells, so every fine cell is written exactly once).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import Grid, NormBounds, _denormalize_array, _normalize_array

__all__ = [
    "GeneratorWeights",
    "WeightsError",
    "WeightsMagicError",
    "WeightsShapeError",
    "WeightsTruncatedError",
    "WeightsVersionError",
    "WindowGeometry",
    "WINDOW",
    "expected_tensor_shapes",
    "generator_forward",
    "load_weights",
    "make_nearest_neighbor_weights",
    "random_weights",
    "save_weights",
    "sr_prolong",
    "stitch_plan",
    "window_positions",
]

_MGSR_MAGIC = b"MGSR"
_MGSR_VERSION = 1
_CHANNELS = 3
_FEATURES = 64
_TANH_SCALE_NAME = "tail.tanh_scale"


class WeightsError(ValueError):
    """Base class for MGSR1 weight-file problems."""


class WeightsMagicError(WeightsError):
    """File does not start with the MGSR magic."""


class WeightsVersionError(WeightsError):
    """Unsupported format version."""


class WeightsShapeError(WeightsError):
    """Tensor set or tensor shapes do not match the architecture."""


class WeightsTruncatedError(WeightsError):
    """File ends before the declared payload."""


@dataclass(frozen=True)
class WindowGeometry:
    """Sliding-window layout of the SR prolongation."""

    n_s: int = 6        # coarse window side
    stride: int = 2     # window step in coarse cells
    central_lo: int = 2  # central band [central_lo, central_hi) in window coords
    central_hi: int = 4

    @property
    def n_l(self) -> int:
        """Fine window side after two x2 generator applications."""
        return self.n_s * 4


WINDOW = WindowGeometry()


def expected_tensor_shapes(num_residual_blocks: int) -> dict[str, tuple[int, ...]]:
    """Canonical tensor names and shapes for a generator with B residual blocks."""
    if num_residual_blocks < 1:
        raise ValueError(f"need >= 1 residual block, got {num_residual_blocks}")
    c, feat = _CHANNELS, _FEATURES
    shapes: dict[str, tuple[int, ...]] = {
        "head.conv.weight": (feat, c, 9, 9),
        "head.prelu.alpha": (feat,),
    }
    for i in range(num_residual_blocks):
        shapes[f"res{i}.conv1.weight"] = (feat, feat, 3, 3)
        for stat in ("gamma", "beta", "mean", "var"):
            shapes[f"res{i}.bn1.{stat}"] = (feat,)
        shapes[f"res{i}.prelu.alpha"] = (feat,)
        shapes[f"res{i}.conv2.weight"] = (feat, feat, 3, 3)
        for stat in ("gamma", "beta", "mean", "var"):
            shapes[f"res{i}.bn2.{stat}"] = (feat,)
    shapes["post.conv.weight"] = (feat, feat, 3, 3)
    for stat in ("gamma", "beta", "mean", "var"):
        shapes[f"post.bn.{stat}"] = (feat,)
    shapes["up.conv.weight"] = (feat * 4, feat, 3, 3)
    shapes["up.prelu.alpha"] = (feat,)
    shapes["tail.conv.weight"] = (c, feat, 9, 9)
    shapes["tail.conv.bias"] = (c,)
    return shapes


@dataclass
class GeneratorWeights:
    """Named tensors plus architecture metadata for the generator.

    ``tanh_scale`` parameterizes the output activation y = s * tanh(x / s):
    s = 1 is a plain tanh; large s makes the output stage effectively linear
    (used by the analytically crafted weights).
    """

    tensors: dict[str, np.ndarray]
    num_residual_blocks: int
    upscale_per_pass: int = 2
    tanh_scale: float = 1.0

    def __post_init__(self):
        self.tensors = {
            k: np.ascontiguousarray(np.asarray(v, dtype=np.float64))
            for k, v in self.tensors.items()
        }
        self.validate()

    def validate(self) -> None:
        if self.upscale_per_pass != 2:
            raise WeightsShapeError(
                f"upscale per pass must be 2, got {self.upscale_per_pass}"
            )
        expected = expected_tensor_shapes(self.num_residual_blocks)
        missing = sorted(expected.keys() - self.tensors.keys())
        if missing:
            raise WeightsShapeError(f"missing tensors: {missing}")
        extra = sorted(self.tensors.keys() - expected.keys())
        if extra:
            raise WeightsShapeError(f"unexpected tensors: {extra}")
        for name, shape in expected.items():
            got = self.tensors[name].shape
            if got != shape:
                raise WeightsShapeError(
                    f"tensor {name}: expected shape {shape}, got {got}"
                )
        for name, arr in self.tensors.items():
            if name.endswith(".var") and np.any(arr <= 0.0):
                raise WeightsShapeError(f"tensor {name}: variances must be > 0")
        if not (self.tanh_scale >= 1.0):
            raise WeightsShapeError(
                f"tanh scale must be >= 1, got {self.tanh_scale}"
            )


def save_weights(w: GeneratorWeights, path) -> None:
    """Write MGSR1: magic, u32 version, u32 upscale, u32 B, u32 tensor count,
    then per tensor (u32 name length, UTF-8 name, u8 dtype=0 for f32, u8 ndim,
    ndim u32 dims, f32 LE values)."""
    names = sorted(w.tensors)
    extras = [] if w.tanh_scale == 1.0 else [_TANH_SCALE_NAME]
    with open(path, "wb") as fh:
        fh.write(_MGSR_MAGIC)
        fh.write(
            struct.pack(
                "<IIII",
                _MGSR_VERSION,
                w.upscale_per_pass,
                w.num_residual_blocks,
                len(names) + len(extras),
            )
        )

        def put(name: str, arr: np.ndarray) -> None:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<BB", 0, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes(order="C"))

        for name in names:
            put(name, w.tensors[name])
        for name in extras:
            put(name, np.float64(w.tanh_scale))


def load_weights(path) -> GeneratorWeights:
    """Read and validate an MGSR1 weight file."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(offset: int, count: int) -> tuple[bytes, int]:
        if offset + count > len(blob):
            raise WeightsTruncatedError(
                f"need {offset + count} bytes, file has {len(blob)}"
            )
        return blob[offset : offset + count], offset + count

    raw, pos = take(0, 4)
    if raw != _MGSR_MAGIC:
        raise WeightsMagicError(f"bad magic {raw!r}, expected {_MGSR_MAGIC!r}")
    raw, pos = take(pos, 16)
    version, upscale, blocks, count = struct.unpack("<IIII", raw)
    if version != _MGSR_VERSION:
        raise WeightsVersionError(f"unsupported version {version}")

    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        raw, pos = take(pos, 4)
        (name_len,) = struct.unpack("<I", raw)
        raw, pos = take(pos, name_len)
        name = raw.decode("utf-8")
        raw, pos = take(pos, 2)
        dtype, ndim = struct.unpack("<BB", raw)
        if dtype != 0:
            raise WeightsShapeError(f"tensor {name}: unsupported dtype {dtype}")
        raw, pos = take(pos, 4 * ndim)
        dims = struct.unpack(f"<{ndim}I", raw) if ndim else ()
        size = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw, pos = take(pos, 4 * size)
        if name in tensors:
            raise WeightsShapeError(f"duplicate tensor {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)
    if pos != len(blob):
        raise WeightsShapeError(f"trailing bytes after {count} tensors")

    tanh_scale = 1.0
    if _TANH_SCALE_NAME in tensors:
        scale = tensors.pop(_TANH_SCALE_NAME)
        if scale.shape != ():
            raise WeightsShapeError(f"{_TANH_SCALE_NAME} must be a scalar")
        tanh_scale = float(scale)
    return GeneratorWeights(
        tensors=tensors,
        num_residual_blocks=blocks,
        upscale_per_pass=upscale,
        tanh_scale=tanh_scale,
    )


# ---------------------------------------------------------------------------
# inference


# Cap on transient buffers inside _conv2d.  im2col expands the input by a
# factor of kh*kw, which for a 9x9 kernel on a large window batch would be
# tens of gigabytes; batches are chunked (small kernels) or routed through an
# FFT contraction (large kernels) to stay below this bound.
_CONV_BUFFER_BYTES = 256 * 1024 * 1024


def _conv2d_gemm(xp: np.ndarray, w: np.ndarray, hh: int, ww: int) -> np.ndarray:
    """im2col matmul on a padded batch (N,C,H+kh-1,W+kw-1) -> (N,O,H,W)."""
    o, _, kh, kw = w.shape
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    col = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))
    col = col.reshape(xp.shape[0] * hh * ww, -1)
    out = col @ w.reshape(o, -1).T
    return out.reshape(xp.shape[0], hh, ww, o).transpose(0, 3, 1, 2)


def _conv2d_fft(xp: np.ndarray, w: np.ndarray, hh: int, ww: int) -> np.ndarray:
    """Spectral evaluation of the same correlation; linear because the
    transform length covers padded input plus kernel support."""
    o, _, kh, kw = w.shape
    lh, lw = xp.shape[2] + kh - 1, xp.shape[3] + kw - 1
    kf = w[:, :, ::-1, ::-1]
    xf = np.fft.rfft2(xp, s=(lh, lw))
    wf = np.fft.rfft2(kf, s=(lh, lw))
    zf = np.einsum("ncxy,ocxy->noxy", xf, wf)
    z = np.fft.irfft2(zf, s=(lh, lw))
    return z[:, :, kh - 1 : kh - 1 + hh, kw - 1 : kw - 1 + ww]


def _conv2d(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Same-size conv of x (N,C,H,W) with w (O,C,kh,kw), replicate padding."""
    n, _, hh, ww = x.shape
    kh, kw = w.shape[2], w.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)), mode="edge")
    col_bytes = x.nbytes * kh * kw
    if col_bytes <= _CONV_BUFFER_BYTES or n == 1:
        return _conv2d_gemm(xp, w, hh, ww)
    if kh * kw <= 16:
        # Small kernel: chunk the batch so each column buffer stays bounded.
        chunk = max(1, int(n * _CONV_BUFFER_BYTES // col_bytes))
        parts = [
            _conv2d_gemm(xp[lo : lo + chunk], w, hh, ww) for lo in range(0, n, chunk)
        ]
        return np.concatenate(parts, axis=0)
    # Large kernel on a large batch: the im2col expansion dominates memory
    # traffic, so contract in Fourier space instead (chunked likewise).
    per_sample = (x.shape[1] + w.shape[0]) * (hh + 2 * kh - 2) * (ww + 2 * kw - 2) * 16
    chunk = max(1, _CONV_BUFFER_BYTES // per_sample)
    parts = [_conv2d_fft(xp[lo : lo + chunk], w, hh, ww) for lo in range(0, n, chunk)]
    return np.concatenate(parts, axis=0)


def _prelu(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    a = alpha[None, :, None, None]
    return np.where(x > 0.0, x, a * x)


def _batchnorm(x: np.ndarray, t: dict[str, np.ndarray], prefix: str) -> np.ndarray:
    gamma = t[f"{prefix}.gamma"][None, :, None, None]
    beta = t[f"{prefix}.beta"][None, :, None, None]
    mean = t[f"{prefix}.mean"][None, :, None, None]
    var = t[f"{prefix}.var"][None, :, None, None]
    return gamma * (x - mean) / np.sqrt(var + 1e-5) + beta


def _pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """(N, C*r*r, H, W) -> (N, C, H*r, W*r); input channel c*r*r + i*r + j
    lands on output offset (i, j) within each r x r block."""
    nb, crr, h, w = x.shape
    c = crr // (r * r)
    y = x.reshape(nb, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return y.reshape(nb, c, h * r, w * r)


def _forward_batch(w: GeneratorWeights, x: np.ndarray) -> np.ndarray:
    """Generator on a batch (N, 3, n, n) -> (N, 3, 2n, 2n)."""
    t = w.tensors
    y = _prelu(_conv2d(x, t["head.conv.weight"]), t["head.prelu.alpha"])
    skip = y
    for i in range(w.num_residual_blocks):
        z = _batchnorm(_conv2d(y, t[f"res{i}.conv1.weight"]), t, f"res{i}.bn1")
        z = _prelu(z, t[f"res{i}.prelu.alpha"])
        z = _batchnorm(_conv2d(z, t[f"res{i}.conv2.weight"]), t, f"res{i}.bn2")
        y = y + z
    y = _batchnorm(_conv2d(y, t["post.conv.weight"]), t, "post.bn") + skip
    y = _prelu(_pixel_shuffle(_conv2d(y, t["up.conv.weight"]), 2), t["up.prelu.alpha"])
    y = _conv2d(y, t["tail.conv.weight"]) + t["tail.conv.bias"][None, :, None, None]
    s = w.tanh_scale
    return s * np.tanh(y / s)


def generator_forward(w: GeneratorWeights, x: np.ndarray) -> np.ndarray:
    """Run the generator on one input of shape (3, n, n); returns (3, 2n, 2n)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != _CHANNELS:
        raise ValueError(f"input must have shape (3, n, n), got {x.shape}")
    if x.shape[1] < WINDOW.n_s or x.shape[1] != x.shape[2]:
        raise ValueError(f"input must be square with side >= {WINDOW.n_s}")
    return _forward_batch(w, x[None])[0]


# ---------------------------------------------------------------------------
# crafted and random weights


def make_nearest_neighbor_weights(num_residual_blocks: int = 1) -> GeneratorWeights:
    """Weights that make the generator an exact x2 nearest-neighbor upsampler.

    Head and tail convs are per-channel identities (center tap 1), every
    residual tensor is zeroed with BN gamma = beta = 0 so the blocks reduce
    to pure skips, the post conv contributes nothing so the global skip
    passes through exactly, and each subpixel tap of the upsampling conv
    copies the window center. PReLU slopes are 1 and the output stage runs
    at a large tanh scale, so the network is linear end to end.
    """
    shapes = expected_tensor_shapes(num_residual_blocks)
    t = {name: np.zeros(shape) for name, shape in shapes.items()}
    for name in t:
        if name.endswith(".var"):
            t[name][:] = 1.0
        elif name.endswith("prelu.alpha"):
            t[name][:] = 1.0
    for c in range(_CHANNELS):
        t["head.conv.weight"][c, c, 4, 4] = 1.0
        t["tail.conv.weight"][c, c, 4, 4] = 1.0
    for c in range(_FEATURES):
        for di in range(2):
            for dj in range(2):
                t["up.conv.weight"][c * 4 + di * 2 + dj, c, 1, 1] = 1.0
    return GeneratorWeights(
        tensors=t, num_residual_blocks=num_residual_blocks, tanh_scale=1e6
    )


def random_weights(num_residual_blocks: int, seed: int) -> GeneratorWeights:
    """He-style random initialization with identity BN statistics."""
    rng = np.random.default_rng(seed)
    shapes = expected_tensor_shapes(num_residual_blocks)
    t: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name.endswith("conv.weight") or name.endswith("conv1.weight") or name.endswith(
            "conv2.weight"
        ):
            fan_in = shape[1] * shape[2] * shape[3]
            t[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)
        elif name.endswith(".gamma") or name.endswith(".var"):
            t[name] = np.ones(shape)
        elif name.endswith("prelu.alpha"):
            t[name] = np.full(shape, 0.25)
        else:  # beta, mean, bias
            t[name] = np.zeros(shape)
    return GeneratorWeights(tensors=t, num_residual_blocks=num_residual_blocks)


# ---------------------------------------------------------------------------
# windowed prolongation


def window_positions(n_coarse: int) -> list[int]:
    """Window corner offsets 0, 2, ..., n_coarse - n_s along one axis."""
    if n_coarse < WINDOW.n_s:
        raise ValueError(f"coarse side must be >= {WINDOW.n_s}, got {n_coarse}")
    if n_coarse % 2 != 0:
        raise ValueError(f"coarse side must be even, got {n_coarse}")
    return list(range(0, n_coarse - WINDOW.n_s + 1, WINDOW.stride))


def stitch_plan(n_coarse: int) -> list[tuple[int, int, slice, slice]]:
    """Windows and the coarse-cell band each one contributes to the output.

    Interior windows keep only their central 2x2 cells; windows touching the
    first or last offset extend their keep band to the grid edge. The bands
    tile [0, n_coarse)^2 exactly once.
    """
    pos = window_positions(n_coarse)
    last = pos[-1]
    plan = []
    for i_w in pos:
        lo_i = 0 if i_w == 0 else WINDOW.central_lo
        hi_i = WINDOW.n_s if i_w == last else WINDOW.central_hi
        for j_w in pos:
            lo_j = 0 if j_w == 0 else WINDOW.central_lo
            hi_j = WINDOW.n_s if j_w == last else WINDOW.central_hi
            plan.append((i_w, j_w, slice(lo_i, hi_i), slice(lo_j, hi_j)))
    return plan


def _sr_pass(q: np.ndarray, w: GeneratorWeights, applications: int) -> np.ndarray:
    """One windowed pass over a normalized grid; upscales by 2**applications."""
    n = q.shape[0]
    plan = stitch_plan(n)
    wins = np.empty((len(plan), _CHANNELS, WINDOW.n_s, WINDOW.n_s))
    for k, (i_w, j_w, _, _) in enumerate(plan):
        wins[k] = q[i_w : i_w + WINDOW.n_s, j_w : j_w + WINDOW.n_s]
    out = wins
    for _ in range(applications):
        out = _forward_batch(w, out)
    merged = out.mean(axis=1)
    scale = 2**applications
    fine = np.empty((n * scale, n * scale))
    for k, (i_w, j_w, band_i, band_j) in enumerate(plan):
        fi = slice((i_w + band_i.start) * scale, (i_w + band_i.stop) * scale)
        fj = slice((j_w + band_j.start) * scale, (j_w + band_j.stop) * scale)
        fine[fi, fj] = merged[
            k, band_i.start * scale : band_i.stop * scale,
            band_j.start * scale : band_j.stop * scale,
        ]
    return fine


# generator applications per windowed pass for each supported ratio
_PASS_PLAN = {2: (1,), 4: (2,), 8: (2, 1), 16: (2, 2)}


def sr_prolong(coarse: Grid, w: GeneratorWeights, b: NormBounds, s: int) -> Grid:
    """Super-resolution prolongation by ratio s in {2, 4, 8, 16}.

    Each windowed pass normalizes the grid, super-resolves 6x6 windows with
    one (x2) or two (x4) generator applications, stitches the central cells,
    denormalizes with the signs of the network output, and subtracts the
    mean. A x16 transfer is two x4 passes, x8 is a x4 pass followed by a
    x2 pass.
    """
    if s not in _PASS_PLAN:
        raise ValueError(f"unsupported SR ratio {s}; expected one of {sorted(_PASS_PLAN)}")
    data = coarse.data
    for applications in _PASS_PLAN[s]:
        q, _ = _normalize_array(data, b)
        q_fine = _sr_pass(q, w, applications)
        data = _denormalize_array(q_fine, np.sign(q_fine), b)
        data = data - data.mean()
    return Grid(data)
