import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bnnkernel.binarize import (
    htanh,
    pack_cols,
    pack_rows,
    read_packed_blob,
    sign,
    unpack,
    write_packed_blob,
)
from bnnkernel.tensor_core import EncodingError, Orientation, PackedBitMatrix, ShapeError

from conftest import random_pm1

floats = st.floats(-1e6, 1e6, allow_nan=False, width=32)


def pack_line_reference(values):
    """Bit-by-bit packing: value i -> bit i % 32 of word i // 32, set for +1."""
    words = [0] * (-(-len(values) // 32))
    for i, v in enumerate(values):
        if v == 1:
            words[i // 32] |= 1 << (i % 32)
    return words


def test_sign_examples():
    np.testing.assert_array_equal(sign([-0.3, 0.7, 0.0]), [-1, 1, 1])
    assert sign(np.float32(-0.0)) == 1


@given(arrays(np.float32, st.integers(1, 50), elements=floats))
def test_sign_properties(x):
    s = sign(x)
    assert set(np.unique(s)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(sign(s), s)
    nz = x != 0
    np.testing.assert_array_equal(sign(-x)[nz], -s[nz])


def test_htanh_examples():
    np.testing.assert_array_equal(htanh([0.5, 3.2, -7.0]), np.float32([0.5, 1.0, -1.0]))


@given(arrays(np.float32, st.integers(1, 50), elements=floats))
def test_htanh_idempotent(x):
    h = htanh(x)
    np.testing.assert_array_equal(htanh(h), h)
    assert np.all(np.abs(h) <= 1)


def test_pack_rows_uniform():
    assert pack_rows(np.ones((1, 32), np.float32)).words[0, 0] == 0xFFFFFFFF
    assert pack_rows(-np.ones((1, 32), np.float32)).words[0, 0] == 0


def test_pack_rows_alternating():
    row = np.array([1 if j % 2 == 0 else -1 for j in range(32)], dtype=np.float32)
    assert pack_line_reference(row) == [0x55555555]
    assert pack_rows(row[None]).words[0, 0] == 0x55555555


def test_pack_rows_pad(rng):
    row = random_pm1(rng, (1, 40))
    p = pack_rows(row)
    assert p.words.shape == (1, 2) and p.pad_bits_per_line == 24
    assert list(p.words[0]) == pack_line_reference(row[0])
    assert p.words[0, 1] >> 8 == 0


def test_pack_cols_examples(rng):
    assert pack_cols(np.ones((32, 1), np.float32)).words[0, 0] == 0xFFFFFFFF
    col = np.ones((33, 1), np.float32)
    col[32] = -1
    assert pack_line_reference(col[:, 0]) == [0xFFFFFFFF, 0]
    assert list(pack_cols(col).words[0]) == [0xFFFFFFFF, 0]
    m = random_pm1(rng, (5, 45))
    np.testing.assert_array_equal(pack_cols(np.ascontiguousarray(m.T)).words, pack_rows(m).words)


def test_pack_rejects_non_pm1():
    m = np.ones((3, 4), np.float32)
    m[2, 1] = 0.5
    with pytest.raises(EncodingError, match=r"\(2, 1\)"):
        pack_rows(m)
    with pytest.raises(EncodingError, match=r"\(2, 1\)"):
        pack_cols(m)


def test_unpack_single_bit():
    p = PackedBitMatrix(1, 1, Orientation.ROW, np.array([[1]], np.uint32))
    np.testing.assert_array_equal(unpack(p), [[1.0]])


@settings(max_examples=200)
@given(st.integers(1, 7), st.integers(1, 70), st.integers(0, 2**32 - 1))
def test_roundtrip_and_pad_hygiene(rows, cols, seed):
    m = random_pm1(np.random.default_rng(seed), (rows, cols))
    for p in (pack_rows(m), pack_cols(m)):
        np.testing.assert_array_equal(unpack(p), m)
        assert int(p.words[:, -1].max(initial=0)) & p.pad_mask() == 0
        assert p.pad_bits_clear()


def test_unpack_ignores_pad_bits():
    p = PackedBitMatrix(1, 3, Orientation.ROW, np.array([[0xFFFFFFF9]], np.uint32))
    np.testing.assert_array_equal(unpack(p), [[1, -1, -1]])


def test_packed_blob_roundtrip(tmp_path, rng):
    m = random_pm1(rng, (6, 37))
    for p in (pack_rows(m), pack_cols(m)):
        write_packed_blob(tmp_path / "p.pbm", p)
        raw = (tmp_path / "p.pbm").read_bytes()
        assert raw[0] == (0 if p.orientation is Orientation.ROW else 1)
        assert len(raw) == 17 + p.words.nbytes
        assert read_packed_blob(tmp_path / "p.pbm") == p


def test_packed_blob_bad_header(tmp_path):
    (tmp_path / "bad.pbm").write_bytes(bytes([7]) + bytes(16))
    with pytest.raises(ShapeError):
        read_packed_blob(tmp_path / "bad.pbm")
