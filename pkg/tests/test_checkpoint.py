"""Checkpoint format: bit-exact round trips and corruption refusal."""

import struct
import zlib

import numpy as np
import pytest

from invmask.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from invmask.errors import CheckpointError
from invmask.network import MaskNetwork
from invmask.tensor import Tensor, no_grad

from test_coupling import randomize


def make_model(seed=0):
    net = MaskNetwork(num_blocks=2, image_channels=3, growth=8, clamp=1.5, seed=seed)
    randomize(net, np.random.default_rng(seed))
    return net


class TestRoundTrip:
    def test_parameters_bit_exact(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.imn"
        save_checkpoint(path, model)
        loaded = load_checkpoint(path)
        assert loaded.num_blocks == 2
        assert loaded.image_channels == 3
        assert loaded.growth == 8
        assert loaded.clamp == 1.5
        for (name_a, a), (name_b, b) in zip(model.named_parameters(), loaded.named_parameters()):
            assert name_a == name_b
            np.testing.assert_array_equal(a.values, b.values)

    def test_inference_identical(self, tmp_path):
        model = make_model(3)
        path = tmp_path / "model.imn"
        save_checkpoint(path, model)
        loaded = load_checkpoint(path)
        rng = np.random.default_rng(9)
        p = Tensor(rng.random((1, 3, 16, 16), dtype=np.float32))
        m = Tensor(rng.random((1, 3, 16, 16), dtype=np.float32))
        with no_grad():
            a = model.put_on(p, m)
            b = loaded.put_on(p, m)
        np.testing.assert_array_equal(a.masked.values, b.masked.values)
        np.testing.assert_array_equal(a.lost.values, b.lost.values)

    def test_second_save_identical_bytes(self, tmp_path):
        model = make_model(5)
        p1, p2 = tmp_path / "a.imn", tmp_path / "b.imn"
        save_checkpoint(p1, model)
        save_checkpoint(p2, load_checkpoint(p1))
        assert p1.read_bytes() == p2.read_bytes()


class TestCorruption:
    def test_flipped_byte_fails_crc(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.imn"
        save_checkpoint(path, model)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="CRC"):
            load_checkpoint(path)

    def test_wrong_magic_with_valid_crc(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.imn"
        save_checkpoint(path, model)
        body = bytearray(path.read_bytes()[:-4])
        body[:4] = b"XXXX"
        path.write_bytes(bytes(body) + struct.pack("<I", zlib.crc32(bytes(body))))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_unsupported_version(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.imn"
        save_checkpoint(path, model)
        body = bytearray(path.read_bytes()[:-4])
        body[4:6] = struct.pack("<H", 9)
        path.write_bytes(bytes(body) + struct.pack("<I", zlib.crc32(bytes(body))))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "tiny.imn"
        path.write_bytes(MAGIC + b"\x01")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.imn")
