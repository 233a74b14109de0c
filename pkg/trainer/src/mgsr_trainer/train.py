"""Adversarial training of the x2 super-resolution generator.

Each step draws a batch of low/high-resolution window pairs and performs
two updates: the discriminator minimizes BCE(D(hr), 1) + BCE(D(G(lr)), 0),
then the generator minimizes MSE(G(lr), hr) plus a small adversarial term
-log D(G(lr)) weighted by ``adversarial_weight`` (1e-3 by default). Both
use Adam. BCE terms are computed from discriminator logits for numerical
stability, which is algebraically the same loss on the sigmoid outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .model import Discriminator, Generator

__all__ = ["StepRecord", "TrainConfig", "TrainResult", "train"]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    blocks: int = 4
    batch_size: int = 32
    steps: int = 500
    learning_rate: float = 1e-4
    adversarial_weight: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError(f"need >= 1 residual block, got {self.blocks}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.steps < 0:
            raise ValueError(f"step count must be >= 0, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.adversarial_weight < 0:
            raise ValueError(
                f"adversarial weight must be >= 0, got {self.adversarial_weight}"
            )


@dataclass(frozen=True)
class StepRecord:
    """Losses recorded after one training step."""

    step: int
    d_loss: float
    g_loss: float
    mse: float


@dataclass
class TrainResult:
    generator: Generator
    discriminator: Discriminator
    history: list[StepRecord] = field(default_factory=list)


def train(
    lr_windows: torch.Tensor, hr_windows: torch.Tensor, cfg: TrainConfig
) -> TrainResult:
    """Train a fresh generator/discriminator pair on in-memory window pairs.

    ``lr_windows`` is (N, 3, 6, 6), ``hr_windows`` (N, 3, 12, 12), both in
    [-1, 1]. With ``cfg.steps == 0`` the models keep their seeded
    initialization. The returned generator is left in eval mode.
    """
    if lr_windows.shape[0] != hr_windows.shape[0]:
        raise ValueError(
            f"pair count mismatch: {lr_windows.shape[0]} low-resolution vs "
            f"{hr_windows.shape[0]} high-resolution windows"
        )
    if lr_windows.shape[0] == 0:
        raise ValueError("dataset holds no window pairs")

    torch.manual_seed(cfg.seed)
    g = Generator(cfg.blocks)
    d = Discriminator()
    opt_g = torch.optim.Adam(g.parameters(), lr=cfg.learning_rate)
    opt_d = torch.optim.Adam(d.parameters(), lr=cfg.learning_rate)
    bce = nn.BCEWithLogitsLoss()
    mse = nn.MSELoss()
    sampler = torch.Generator().manual_seed(cfg.seed)
    n = lr_windows.shape[0]

    result = TrainResult(generator=g, discriminator=d)
    g.train()
    d.train()
    for step in range(1, cfg.steps + 1):
        idx = torch.randint(0, n, (min(cfg.batch_size, n),), generator=sampler)
        lr_batch = lr_windows[idx]
        hr_batch = hr_windows[idx]
        ones = torch.ones(lr_batch.shape[0])
        zeros = torch.zeros(lr_batch.shape[0])

        fake = g(lr_batch)

        opt_d.zero_grad()
        d_loss = bce(d.logits(hr_batch), ones) + bce(d.logits(fake.detach()), zeros)
        d_loss.backward()
        opt_d.step()

        opt_g.zero_grad()
        content = mse(fake, hr_batch)
        g_loss = content + cfg.adversarial_weight * bce(d.logits(fake), ones)
        g_loss.backward()
        opt_g.step()

        result.history.append(
            StepRecord(
                step=step,
                d_loss=float(d_loss.detach()),
                g_loss=float(g_loss.detach()),
                mse=float(content.detach()),
            )
        )

    g.eval()
    d.eval()
    return result
