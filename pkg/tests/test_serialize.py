import json

import numpy as np
import pytest

from edgesight.cnn.architecture import build_lite_cnn
from edgesight.cnn.serialize import load_model, save_model
from edgesight.errors import FormatError


@pytest.fixture(scope="module")
def small_model():
    return build_lite_cnn(width_mult=0.125, input_size=64, seed=5)


def test_round_trip_bitwise(tmp_path, small_model, rng):
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    back = load_model(path)

    for la, lb in zip(small_model.layers, back.layers):
        assert type(la) is type(lb)
        for k in la.params:
            assert np.array_equal(la.params[k], lb.params[k])
    x = rng.normal(size=(3, 64, 64)).astype(np.float32)
    l1, o1 = small_model.predict(x)
    l2, o2 = back.predict(x)
    assert np.array_equal(l1, l2)  # bitwise identical forward pass
    assert np.array_equal(o1, o2)

    save_model(back, tmp_path / "again.lcnn")
    assert (tmp_path / "again.lcnn").read_bytes() == path.read_bytes()


def test_sidecar_json_written(tmp_path, small_model):
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    sidecar = json.loads((tmp_path / "model.lcnn.json").read_text())
    assert sidecar["format"] == "LCNN"
    assert sidecar["conv_layers"] == 23
    assert len(sidecar["architecture"]["layers"]) == len(small_model.layers)


def test_truncated_file_rejected(tmp_path, small_model):
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    blob = path.read_bytes()
    (tmp_path / "short.lcnn").write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        load_model(tmp_path / "short.lcnn")
    (tmp_path / "tiny.lcnn").write_bytes(blob[:8])
    with pytest.raises(FormatError):
        load_model(tmp_path / "tiny.lcnn")


def test_corrupted_weight_byte_rejected(tmp_path, small_model):
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    (tmp_path / "corrupt.lcnn").write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_model(tmp_path / "corrupt.lcnn")


def test_bad_magic_and_version(tmp_path, small_model):
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    blob = bytearray(path.read_bytes())
    wrong_magic = bytearray(blob)
    wrong_magic[:4] = b"NOPE"
    (tmp_path / "magic.lcnn").write_bytes(bytes(wrong_magic))
    with pytest.raises(FormatError):
        load_model(tmp_path / "magic.lcnn")


def test_trailing_garbage_rejected(tmp_path, small_model):
    import struct
    import zlib
    path = tmp_path / "model.lcnn"
    save_model(small_model, path)
    blob = path.read_bytes()[:-4] + b"\x00\x00\x00\x00"
    blob = blob + struct.pack("<I", zlib.crc32(blob))
    (tmp_path / "junk.lcnn").write_bytes(blob)
    with pytest.raises(FormatError):
        load_model(tmp_path / "junk.lcnn")
