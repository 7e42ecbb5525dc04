import gzip
import struct

import numpy as np
import pytest

from fvtrain.data import load_idx, load_mnist, pool2x2, preprocess, RawDataset, write_idx
from fvtrain.errors import ConfigurationError, DataError, FormatError


def synthetic_raw(per_class=30, classes=range(3), seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.array(list(classes), dtype=np.uint8), per_class)
    images = rng.integers(0, 256, size=(labels.size, 28, 28), dtype=np.uint8)
    return RawDataset(images, labels)


@pytest.fixture
def idx_pair(tmp_path):
    raw = synthetic_raw()
    write_idx(tmp_path / "img.gz", raw.images)
    write_idx(tmp_path / "lab", raw.labels)
    return tmp_path / "img.gz", tmp_path / "lab", raw


def test_round_trip(idx_pair):
    img, lab, raw = idx_pair
    loaded = load_idx(img, lab)
    np.testing.assert_array_equal(loaded.images, raw.images)
    np.testing.assert_array_equal(loaded.labels, raw.labels)


def test_header_is_big_endian(tmp_path):
    write_idx(tmp_path / "lab", np.arange(5, dtype=np.uint8))
    blob = (tmp_path / "lab").read_bytes()
    assert blob[:8] == bytes([0, 0, 8, 1, 0, 0, 0, 5])


def test_wrong_magic(idx_pair, tmp_path):
    _, lab, _ = idx_pair
    with pytest.raises(FormatError, match="expected image magic"):
        load_idx(lab, lab)


def test_truncated_pixels(tmp_path, idx_pair):
    img, lab, _ = idx_pair
    blob = gzip.decompress(img.read_bytes())
    (tmp_path / "short").write_bytes(blob[:-100])
    with pytest.raises(FormatError, match="byte offset"):
        load_idx(tmp_path / "short", lab)


def test_count_mismatch(tmp_path, idx_pair):
    img, _, raw = idx_pair
    write_idx(tmp_path / "fewer", raw.labels[:-1])
    with pytest.raises(FormatError, match="count mismatch"):
        load_idx(img, tmp_path / "fewer")


def test_header_counts_honored(tmp_path):
    # trailing garbage beyond the advertised count is ignored
    payload = struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(2 * 784) + b"junk"
    (tmp_path / "img").write_bytes(payload)
    write_idx(tmp_path / "lab", np.array([3, 4], dtype=np.uint8))
    assert len(load_idx(tmp_path / "img", tmp_path / "lab")) == 2


def test_missing_directory(tmp_path):
    with pytest.raises(DataError, match="nope"):
        load_mnist(tmp_path / "nope")


def test_pooling_examples():
    assert not pool2x2(np.zeros((28, 28))).any()
    block = np.array([[0, 255], [255, 0]]) / 255.0
    assert pool2x2(block)[0, 0] == 0.5
    assert pool2x2(np.zeros((28, 28))).shape == (14, 14)


def test_preprocess_balance_and_disjointness():
    raw = synthetic_raw(per_class=50)
    train, test = preprocess(raw, (2, 0), 40, 20, seed=3)
    assert train.images.shape == (40, 14, 14)
    assert np.bincount(train.labels).tolist() == [20, 20]
    assert np.bincount(test.labels).tolist() == [10, 10]
    assert train.class_map == {2: 0, 0: 1}
    assert not set(train.source_index) & set(test.source_index)
    assert train.images.min() >= 0 and train.images.max() <= 1
    np.testing.assert_array_equal(raw.labels[train.source_index], np.where(train.labels == 0, 2, 0))


def test_preprocess_deterministic():
    raw = synthetic_raw()
    a, _ = preprocess(raw, (0, 1), 20, 10, seed=5)
    b, _ = preprocess(raw, (0, 1), 20, 10, seed=5)
    assert a.images.tobytes() == b.images.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()


def test_preprocess_insufficient():
    with pytest.raises(ConfigurationError):
        preprocess(synthetic_raw(per_class=10), (0, 1), 20, 10)


def test_bundled_subset(mnist_path):
    raw = load_mnist(mnist_path)
    assert raw.images.shape == (5000, 28, 28)
    assert np.bincount(raw.labels).tolist() == [500] * 10
