import numpy as np
import pytest

from texttiger.errors import ParseError
from texttiger.featureio import MAGIC, read_features, sidecar_path, write_features


def test_round_trip_exact(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(7, 5)).astype(np.float32)
    path = tmp_path / "feats.tfv1"
    write_features(path, x, kind="pool_features", source="unit", model="none")
    back = read_features(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, x)


def test_float64_input_stored_as_float32(tmp_path):
    x = np.array([[1.0 / 3.0, 2.0 / 3.0]])
    path = write_features(tmp_path / "f.tfv1", x)
    back = read_features(path)
    assert np.array_equal(back, x.astype(np.float32))


def test_sidecar_round_trip(tmp_path):
    path = write_features(
        tmp_path / "f.tfv1",
        np.zeros((2, 2)),
        kind="clip_img",
        source="imgs/",
        model="enc-a",
        created="2024-01-01T00:00:00Z",
    )
    _, sidecar = read_features(path, with_sidecar=True)
    assert sidecar == {
        "kind": "clip_img",
        "source": "imgs/",
        "model": "enc-a",
        "created": "2024-01-01T00:00:00Z",
    }
    assert sidecar_path(path).exists()


def test_header_layout(tmp_path):
    path = write_features(tmp_path / "f.tfv1", np.zeros((3, 4)))
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert int.from_bytes(raw[4:8], "little") == 3
    assert int.from_bytes(raw[8:12], "little") == 4
    assert len(raw) == 12 + 3 * 4 * 4


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.tfv1"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ParseError):
        read_features(path)


def test_truncated_payload(tmp_path):
    path = write_features(tmp_path / "f.tfv1", np.zeros((3, 4)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(ParseError):
        read_features(path)


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_features(tmp_path / "f.tfv1", np.zeros((1, 1)), kind="mystery")


def test_one_d_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_features(tmp_path / "f.tfv1", np.zeros(5))


def test_write_is_deterministic(tmp_path):
    x = np.random.default_rng(9).normal(size=(6, 3))
    a = write_features(tmp_path / "a.tfv1", x, kind="clip_txt")
    b = write_features(tmp_path / "b.tfv1", x, kind="clip_txt")
    assert a.read_bytes() == b.read_bytes()
