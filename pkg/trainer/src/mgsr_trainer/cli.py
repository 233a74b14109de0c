"""Command-line interface: train on a window dataset, emit parity fixtures.

Exit codes: 0 success, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from .dataio import load_pairs
from .fixtures import emit_fixtures
from .train import TrainConfig, train
from .weights_io import read_generator, write_generator

__all__ = ["main"]


def _cmd_train(args) -> int:
    lr_windows, hr_windows = load_pairs(args.data)
    cfg = TrainConfig(
        blocks=args.blocks,
        batch_size=args.batch_size,
        steps=args.steps,
        learning_rate=args.learning_rate,
        adversarial_weight=args.adv_weight,
        seed=args.seed,
    )
    result = train(lr_windows, hr_windows, cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_generator(result.generator, args.out)
    if result.history:
        first, last = result.history[0], result.history[-1]
        print(
            f"trained {cfg.steps} steps on {lr_windows.shape[0]} pairs: "
            f"mse {first.mse:.3e} -> {last.mse:.3e}, "
            f"g_loss {first.g_loss:.3e} -> {last.g_loss:.3e}, "
            f"d_loss {first.d_loss:.3e} -> {last.d_loss:.3e}"
        )
    else:
        print(f"trained 0 steps on {lr_windows.shape[0]} pairs (initialization only)")
    print(f"wrote {args.out}")
    return 0


def _cmd_fixtures(args) -> int:
    g = read_generator(args.weights)
    lr_windows, _ = load_pairs(args.data)
    count = min(args.count, lr_windows.shape[0])
    picker = torch.Generator().manual_seed(args.seed)
    idx = torch.randperm(lr_windows.shape[0], generator=picker)[:count]
    inputs = lr_windows[idx]
    if args.include_zero and count >= 1:
        inputs = inputs.clone()
        inputs[0].zero_()
    rel = Path(args.weights).resolve()
    out_dir = Path(args.out_dir).resolve()
    try:
        weights_rel = str(rel.relative_to(out_dir))
    except ValueError:
        import os

        weights_rel = os.path.relpath(rel, out_dir)
    manifest = emit_fixtures(g, inputs, args.out_dir, weights_rel)
    print(f"wrote {count} fixture pairs, manifest {manifest}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgsr-train",
        description="Train the x2 super-resolution generator and export weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_tr = sub.add_parser("train", help="train on an MGWP dataset, export MGSR1")
    p_tr.add_argument("--data", required=True, help="MGWP window dataset")
    p_tr.add_argument("--out", required=True, help="MGSR1 output path")
    p_tr.add_argument("--steps", type=int, default=500)
    p_tr.add_argument("--batch-size", type=int, default=32)
    p_tr.add_argument("--blocks", type=int, default=4)
    p_tr.add_argument("--learning-rate", type=float, default=1e-4)
    p_tr.add_argument("--adv-weight", type=float, default=1e-3)
    p_tr.add_argument("--seed", type=int, default=0)
    p_tr.set_defaults(func=_cmd_train)

    p_fx = sub.add_parser(
        "fixtures", help="record forward-pass parity fixtures for a weight file"
    )
    p_fx.add_argument("--weights", required=True, help="MGSR1 weight file")
    p_fx.add_argument("--data", required=True, help="MGWP dataset to draw inputs from")
    p_fx.add_argument("--out-dir", required=True)
    p_fx.add_argument("--count", type=int, default=10)
    p_fx.add_argument("--seed", type=int, default=0)
    p_fx.add_argument(
        "--include-zero",
        action="store_true",
        help="replace the first drawn input with an all-zero window",
    )
    p_fx.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
