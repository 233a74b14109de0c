"""Window-dataset reader and weight-file writer/reader tests."""

import struct

import numpy as np
import pytest
import torch

from mgsr_trainer.dataio import load_pairs
from mgsr_trainer.model import Generator, export_tensor_map, make_nearest_neighbor_generator
from mgsr_trainer.weights_io import read_generator, write_generator

from helpers import make_hr_windows, write_mgwp


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    hr = make_hr_windows(7, seed=1)
    path = tmp_path_factory.mktemp("data") / "pairs.mgwp"
    write_mgwp(path, hr)
    return path, hr


class TestWindowReader:

    def test_shapes_and_channel_replication(self, dataset):
        path, _ = dataset
        lr, hr = load_pairs(path)
        assert tuple(lr.shape) == (7, 3, 6, 6)
        assert tuple(hr.shape) == (7, 3, 12, 12)
        for c in (1, 2):
            assert torch.equal(lr[:, c], lr[:, 0])
            assert torch.equal(hr[:, c], hr[:, 0])

    def test_values_match_file(self, dataset):
        path, hr_src = dataset
        lr, hr = load_pairs(path)
        expected = hr_src.astype(np.float32)
        assert np.array_equal(hr[:, 0].numpy(), expected)
        assert np.array_equal(lr[:, 0].numpy(), expected[:, ::2, ::2])

    def test_lr_is_hr_injection(self, dataset):
        path, _ = dataset
        lr, hr = load_pairs(path)
        assert torch.equal(hr[:, :, ::2, ::2], lr)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mgwp"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="bad magic"):
            load_pairs(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "trunc.mgwp"
        path.write_bytes(b"MGWP\x01")
        with pytest.raises(ValueError, match="truncated header"):
            load_pairs(path)

    def test_truncated_payload(self, tmp_path):
        src = tmp_path / "ok.mgwp"
        write_mgwp(src, make_hr_windows(2, seed=0))
        blob = src.read_bytes()
        bad = tmp_path / "cut.mgwp"
        bad.write_bytes(blob[:-5])
        with pytest.raises(ValueError, match="truncated payload"):
            load_pairs(bad)

    def test_trailing_bytes(self, tmp_path):
        src = tmp_path / "ok.mgwp"
        write_mgwp(src, make_hr_windows(2, seed=0))
        bad = tmp_path / "fat.mgwp"
        bad.write_bytes(src.read_bytes() + b"\x00")
        with pytest.raises(ValueError, match="trailing bytes"):
            load_pairs(bad)

    def test_empty_dataset_rejected(self, tmp_path):
        path = tmp_path / "empty.mgwp"
        write_mgwp(path, np.zeros((0, 12, 12)))
        with pytest.raises(ValueError, match="no window pairs"):
            load_pairs(path)


def parse_record_names(blob: bytes) -> list[str]:
    pos = 20
    names = []
    while pos < len(blob):
        (name_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        name = blob[pos : pos + name_len].decode()
        pos += name_len
        dtype, ndim = struct.unpack_from("<BB", blob, pos)
        pos += 2
        dims = struct.unpack_from(f"<{ndim}I", blob, pos) if ndim else ()
        pos += 4 * ndim
        pos += 4 * int(np.prod(dims, dtype=np.int64)) if ndim else 4
        names.append(name)
    return names


class TestWeightsFile:
    def test_header_layout(self, tmp_path):
        path = tmp_path / "w.mgsr"
        write_generator(Generator(2), path)
        blob = path.read_bytes()
        assert blob[:4] == b"MGSR"
        version, upscale, blocks, count = struct.unpack_from("<IIII", blob, 4)
        assert (version, upscale, blocks) == (1, 2, 2)
        assert count == len(export_tensor_map(Generator(2)))

    def test_records_sorted_by_name(self, tmp_path):
        path = tmp_path / "w.mgsr"
        write_generator(Generator(1), path)
        names = parse_record_names(path.read_bytes())
        assert names == sorted(names)

    def test_roundtrip_forward_identical(self, tmp_path):
        torch.manual_seed(23)
        g = Generator(2).eval()
        path = tmp_path / "w.mgsr"
        write_generator(g, path)
        g2 = read_generator(path)
        x = torch.rand(1, 3, 6, 6) * 2 - 1
        with torch.no_grad():
            assert torch.equal(g(x), g2(x))

    def test_output_scale_roundtrip(self, tmp_path):
        g = make_nearest_neighbor_generator(1)
        path = tmp_path / "nn.mgsr"
        write_generator(g, path)
        assert b"tail.tanh_scale" in path.read_bytes()
        assert read_generator(path).output_scale == 1e6

    def test_unit_scale_writes_no_extra_record(self, tmp_path):
        path = tmp_path / "w.mgsr"
        write_generator(Generator(1), path)
        assert b"tail.tanh_scale" not in path.read_bytes()
        assert read_generator(path).output_scale == 1.0

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mgsr"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(ValueError, match="bad magic"):
            read_generator(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v9.mgsr"
        path.write_bytes(b"MGSR" + struct.pack("<IIII", 9, 2, 1, 0))
        with pytest.raises(ValueError, match="unsupported version"):
            read_generator(path)

    def test_truncated(self, tmp_path):
        src = tmp_path / "ok.mgsr"
        write_generator(Generator(1), src)
        blob = src.read_bytes()
        bad = tmp_path / "cut.mgsr"
        bad.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ValueError, match="truncated"):
            read_generator(bad)

    def test_trailing_bytes(self, tmp_path):
        src = tmp_path / "ok.mgsr"
        write_generator(Generator(1), src)
        bad = tmp_path / "fat.mgsr"
        bad.write_bytes(src.read_bytes() + b"\x00")
        with pytest.raises(ValueError, match="trailing bytes"):
            read_generator(bad)


class TestSolverSideLoad:
    """The exported file is the interface: the solver package must accept it."""

    def test_solver_loader_accepts_export(self, tmp_path):
        srmodel = pytest.importorskip("mgsr.srmodel")
        torch.manual_seed(29)
        g = Generator(2).eval()
        path = tmp_path / "w.mgsr"
        write_generator(g, path)
        w = srmodel.load_weights(path)
        assert w.num_residual_blocks == 2
        assert w.tanh_scale == 1.0
        ours = export_tensor_map(g)
        assert sorted(w.tensors) == sorted(ours)
        for name, value in ours.items():
            assert np.array_equal(
                w.tensors[name], value.numpy().astype(np.float64)
            ), name
