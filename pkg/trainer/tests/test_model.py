"""Generator/discriminator architecture and tensor-map tests."""

import numpy as np
import pytest
import torch
from torch.nn import functional as F

from mgsr_trainer.model import (
    Discriminator,
    Generator,
    export_tensor_map,
    load_tensor_map,
    make_nearest_neighbor_generator,
)

from helpers import make_hr_windows, to_tensors


def expected_names(blocks: int) -> dict[str, tuple[int, ...]]:
    shapes = {
        "head.conv.weight": (64, 3, 9, 9),
        "head.prelu.alpha": (64,),
        "post.conv.weight": (64, 64, 3, 3),
        "up.conv.weight": (256, 64, 3, 3),
        "up.prelu.alpha": (64,),
        "tail.conv.weight": (3, 64, 9, 9),
        "tail.conv.bias": (3,),
    }
    for stat in ("gamma", "beta", "mean", "var"):
        shapes[f"post.bn.{stat}"] = (64,)
    for i in range(blocks):
        shapes[f"res{i}.conv1.weight"] = (64, 64, 3, 3)
        shapes[f"res{i}.conv2.weight"] = (64, 64, 3, 3)
        shapes[f"res{i}.prelu.alpha"] = (64,)
        for stat in ("gamma", "beta", "mean", "var"):
            shapes[f"res{i}.bn1.{stat}"] = (64,)
            shapes[f"res{i}.bn2.{stat}"] = (64,)
    return shapes


class TestArchitecture:
    def test_tensor_names_and_shapes_one_block(self):
        tensors = export_tensor_map(Generator(1))
        expected = expected_names(1)
        assert sorted(tensors) == sorted(expected)
        for name, shape in expected.items():
            assert tuple(tensors[name].shape) == shape, name

    def test_block_count_scales_tensor_count(self):
        base = len(export_tensor_map(Generator(1)))
        assert len(export_tensor_map(Generator(3))) == base + 2 * 11

    def test_rejects_zero_blocks(self):
        with pytest.raises(ValueError, match="residual block"):
            Generator(0)

    def test_rejects_small_output_scale(self):
        with pytest.raises(ValueError, match="output scale"):
            Generator(1, output_scale=0.5)

    def test_batchnorm_epsilon(self):
        g = Generator(1)
        assert g.post_bn.eps == 1e-5
        assert g.blocks[0].bn1.eps == 1e-5


class TestGeneratorForward:
    def test_doubles_spatial_side(self):
        g = Generator(1).eval()
        with torch.no_grad():
            y = g(torch.rand(2, 3, 6, 6) * 2 - 1)
        assert tuple(y.shape) == (2, 3, 12, 12)

    def test_output_within_tanh_bound(self):
        torch.manual_seed(3)
        g = Generator(2).eval()
        with torch.no_grad():
            y = g(torch.rand(4, 3, 6, 6) * 2 - 1)
        assert float(y.abs().max()) <= 1.0

    def test_head_conv_uses_replicate_padding(self):
        torch.manual_seed(1)
        g = Generator(1).eval()
        x = torch.rand(1, 3, 6, 6)
        with torch.no_grad():
            direct = g.head_conv(x)
            manual = F.conv2d(
                F.pad(x, (4, 4, 4, 4), mode="replicate"), g.head_conv.weight
            )
        assert torch.equal(direct, manual)

    def test_eval_forward_deterministic(self):
        torch.manual_seed(5)
        g = Generator(2).eval()
        x = torch.rand(1, 3, 6, 6)
        with torch.no_grad():
            assert torch.equal(g(x), g(x))


class TestNearestNeighborGenerator:
    def test_exact_x2_upsample(self):
        g = make_nearest_neighbor_generator(1).eval()
        torch.manual_seed(7)
        x = torch.rand(2, 3, 6, 6) * 2 - 1
        with torch.no_grad():
            y = g(x)
        ref = torch.repeat_interleave(torch.repeat_interleave(x, 2, dim=2), 2, dim=3)
        assert float((y - ref).abs().max()) < 1e-6

    def test_runs_at_large_output_scale(self):
        assert make_nearest_neighbor_generator(1).output_scale == 1e6

    def test_windows_from_smooth_fields(self):
        lr, hr = to_tensors(make_hr_windows(3, seed=2))
        g = make_nearest_neighbor_generator(1).eval()
        with torch.no_grad():
            y = g(lr)
        ref = torch.repeat_interleave(torch.repeat_interleave(lr, 2, dim=2), 2, dim=3)
        assert float((y - ref).abs().max()) < 1e-6
        # the NN upsample agrees with true HR exactly at aligned nodes
        assert torch.equal(hr[:, :, ::2, ::2], lr)


class TestDiscriminator:
    def test_outputs_are_probabilities(self):
        torch.manual_seed(11)
        d = Discriminator().eval()
        batch = torch.cat(
            [
                torch.rand(3, 3, 12, 12) * 2 - 1,
                torch.ones(1, 3, 12, 12),
                -torch.ones(1, 3, 12, 12),
                torch.zeros(1, 3, 12, 12),
            ]
        )
        with torch.no_grad():
            p = d(batch)
        assert tuple(p.shape) == (6,)
        assert bool(((p > 0.0) & (p < 1.0)).all())

    def test_forward_is_sigmoid_of_logits(self):
        torch.manual_seed(13)
        d = Discriminator().eval()
        x = torch.rand(2, 3, 12, 12)
        with torch.no_grad():
            assert torch.equal(d(x), torch.sigmoid(d.logits(x)))


class TestTensorMap:
    def test_roundtrip_preserves_forward(self):
        torch.manual_seed(17)
        src = Generator(2).eval()
        dst = Generator(2).eval()
        load_tensor_map(dst, export_tensor_map(src))
        x = torch.rand(1, 3, 6, 6)
        with torch.no_grad():
            assert torch.equal(src(x), dst(x))

    def test_missing_tensor_rejected(self):
        g = Generator(1)
        tensors = export_tensor_map(g)
        del tensors["tail.conv.bias"]
        with pytest.raises(ValueError, match="missing tensors"):
            load_tensor_map(g, tensors)

    def test_unexpected_tensor_rejected(self):
        g = Generator(1)
        tensors = export_tensor_map(g)
        tensors["blob"] = torch.zeros(1)
        with pytest.raises(ValueError, match="unexpected tensors"):
            load_tensor_map(g, tensors)

    def test_wrong_shape_rejected(self):
        g = Generator(1)
        tensors = export_tensor_map(g)
        tensors["tail.conv.bias"] = torch.zeros(4)
        with pytest.raises(ValueError, match="expected shape"):
            load_tensor_map(g, tensors)

    def test_exported_tensors_are_detached_copies(self):
        g = Generator(1)
        before = g.tail_conv.bias.detach().clone()
        tensors = export_tensor_map(g)
        tensors["tail.conv.bias"] += 1.0
        assert torch.equal(g.tail_conv.bias.detach(), before)
