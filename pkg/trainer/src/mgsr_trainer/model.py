"""Torch generator/discriminator pair for the super-resolution trainer.

The generator mirrors, layer for layer, the NumPy inference engine that
consumes the exported weight files: 9x9 head conv + PReLU, B residual
blocks (3x3 conv, BN eps=1e-5, PReLU, 3x3 conv, BN, skip), a post conv +
BN closed by a global skip, one x2 subpixel upsampling stage, and a 9x9
tail conv with bias feeding a tanh output stage. All convolutions use
replicate padding and, except for the tail, carry no bias; batchnorm
layers supply the affine terms instead.
"""

from __future__ import annotations

import torch
from torch import nn

__all__ = [
    "CHANNELS",
    "FEATURES",
    "Discriminator",
    "Generator",
    "export_tensor_map",
    "load_tensor_map",
    "make_nearest_neighbor_generator",
]

CHANNELS = 3
FEATURES = 64


def _conv(c_in: int, c_out: int, kernel: int, bias: bool = False) -> nn.Conv2d:
    return nn.Conv2d(
        c_in,
        c_out,
        kernel,
        padding=kernel // 2,
        padding_mode="replicate",
        bias=bias,
    )


class _ResidualBlock(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        self.conv1 = _conv(FEATURES, FEATURES, 3)
        self.bn1 = nn.BatchNorm2d(FEATURES, eps=1e-5)
        self.prelu = nn.PReLU(FEATURES)
        self.conv2 = _conv(FEATURES, FEATURES, 3)
        self.bn2 = nn.BatchNorm2d(FEATURES, eps=1e-5)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.prelu(self.bn1(self.conv1(x)))
        z = self.bn2(self.conv2(z))
        return x + z


class Generator(nn.Module):
    """x2 super-resolution generator: (N, 3, n, n) -> (N, 3, 2n, 2n).

    ``output_scale`` parameterizes the output stage y = s * tanh(x / s);
    s = 1 (the default, and the only value used in training) is a plain
    tanh, while large s makes the stage effectively linear. It is kept as
    a plain float, not a learnable parameter.
    """

    def __init__(self, num_residual_blocks: int = 4, output_scale: float = 1.0):
        super().__init__()
        if num_residual_blocks < 1:
            raise ValueError(
                f"need >= 1 residual block, got {num_residual_blocks}"
            )
        if output_scale < 1.0:
            raise ValueError(f"output scale must be >= 1, got {output_scale}")
        self.num_residual_blocks = num_residual_blocks
        self.output_scale = float(output_scale)
        self.head_conv = _conv(CHANNELS, FEATURES, 9)
        self.head_prelu = nn.PReLU(FEATURES)
        self.blocks = nn.ModuleList(
            _ResidualBlock() for _ in range(num_residual_blocks)
        )
        self.post_conv = _conv(FEATURES, FEATURES, 3)
        self.post_bn = nn.BatchNorm2d(FEATURES, eps=1e-5)
        self.up_conv = _conv(FEATURES, FEATURES * 4, 3)
        self.up_shuffle = nn.PixelShuffle(2)
        self.up_prelu = nn.PReLU(FEATURES)
        self.tail_conv = _conv(FEATURES, CHANNELS, 9, bias=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.head_prelu(self.head_conv(x))
        skip = y
        for block in self.blocks:
            y = block(y)
        y = self.post_bn(self.post_conv(y)) + skip
        y = self.up_prelu(self.up_shuffle(self.up_conv(y)))
        y = self.tail_conv(y)
        s = self.output_scale
        if s == 1.0:
            return torch.tanh(y)
        return s * torch.tanh(y / s)


class Discriminator(nn.Module):
    """Four stride-2 conv blocks, then a linear head with sigmoid output.

    Sized for 12x12 inputs (12 -> 6 -> 3 -> 2 -> 1 spatial), so the head
    sees one feature vector per image. ``forward`` returns probabilities
    in (0, 1); ``logits`` exposes the pre-sigmoid values for numerically
    stable BCE-with-logits training.
    """

    def __init__(self) -> None:
        super().__init__()
        widths = (CHANNELS, 32, 64, 128, 256)
        layers: list[nn.Module] = []
        for i, (c_in, c_out) in enumerate(zip(widths[:-1], widths[1:])):
            layers.append(nn.Conv2d(c_in, c_out, 3, stride=2, padding=1))
            if i > 0:
                layers.append(nn.BatchNorm2d(c_out, eps=1e-5))
            layers.append(nn.LeakyReLU(0.2))
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(widths[-1], 1)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        y = self.features(x)
        y = torch.amax(y, dim=(2, 3))  # global max-pool: side-agnostic
        return self.head(y).squeeze(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.logits(x))


# ---------------------------------------------------------------------------
# mapping between module parameters and exported tensor names


def _named_modules(g: Generator) -> dict[str, tuple[nn.Module, str]]:
    """Exported tensor name -> (module, attribute) for every tensor."""
    pairs: dict[str, tuple[nn.Module, str]] = {
        "head.conv.weight": (g.head_conv, "weight"),
        "head.prelu.alpha": (g.head_prelu, "weight"),
        "post.conv.weight": (g.post_conv, "weight"),
        "up.conv.weight": (g.up_conv, "weight"),
        "up.prelu.alpha": (g.up_prelu, "weight"),
        "tail.conv.weight": (g.tail_conv, "weight"),
        "tail.conv.bias": (g.tail_conv, "bias"),
    }
    for stat, attr in (
        ("gamma", "weight"),
        ("beta", "bias"),
        ("mean", "running_mean"),
        ("var", "running_var"),
    ):
        pairs[f"post.bn.{stat}"] = (g.post_bn, attr)
    for i, block in enumerate(g.blocks):
        pairs[f"res{i}.conv1.weight"] = (block.conv1, "weight")
        pairs[f"res{i}.conv2.weight"] = (block.conv2, "weight")
        pairs[f"res{i}.prelu.alpha"] = (block.prelu, "weight")
        for stat, attr in (
            ("gamma", "weight"),
            ("beta", "bias"),
            ("mean", "running_mean"),
            ("var", "running_var"),
        ):
            pairs[f"res{i}.bn1.{stat}"] = (block.bn1, attr)
            pairs[f"res{i}.bn2.{stat}"] = (block.bn2, attr)
    return pairs


def export_tensor_map(g: Generator) -> dict[str, torch.Tensor]:
    """Detached copies of all generator tensors keyed by exported names."""
    return {
        name: getattr(mod, attr).detach().clone()
        for name, (mod, attr) in _named_modules(g).items()
    }


def load_tensor_map(g: Generator, tensors: dict[str, torch.Tensor]) -> None:
    """Copy exported-name tensors into the generator in place."""
    pairs = _named_modules(g)
    missing = sorted(pairs.keys() - tensors.keys())
    if missing:
        raise ValueError(f"missing tensors: {missing}")
    extra = sorted(tensors.keys() - pairs.keys())
    if extra:
        raise ValueError(f"unexpected tensors: {extra}")
    with torch.no_grad():
        for name, (mod, attr) in pairs.items():
            target = getattr(mod, attr)
            value = tensors[name].to(dtype=target.dtype)
            if value.shape != target.shape:
                raise ValueError(
                    f"tensor {name}: expected shape {tuple(target.shape)}, "
                    f"got {tuple(value.shape)}"
                )
            target.copy_(value)


def make_nearest_neighbor_generator(num_residual_blocks: int = 1) -> Generator:
    """Generator configured as an exact x2 nearest-neighbor upsampler.

    Head and tail convs pass each channel through (center tap 1), BN gammas
    are zeroed so every residual/post branch vanishes, PReLU slopes are 1,
    each subpixel tap of the upsampling conv copies the window center, and
    the output stage runs at a large scale so tanh is effectively linear.
    Used as an architecture oracle in tests.
    """
    g = Generator(num_residual_blocks, output_scale=1e6)
    with torch.no_grad():
        for name, (mod, attr) in _named_modules(g).items():
            getattr(mod, attr).zero_()
            if name.endswith(".var") or name.endswith("prelu.alpha"):
                getattr(mod, attr).fill_(1.0)
        for c in range(CHANNELS):
            g.head_conv.weight[c, c, 4, 4] = 1.0
            g.tail_conv.weight[c, c, 4, 4] = 1.0
        for c in range(FEATURES):
            for di in range(2):
                for dj in range(2):
                    g.up_conv.weight[c * 4 + di * 2 + dj, c, 1, 1] = 1.0
    return g
