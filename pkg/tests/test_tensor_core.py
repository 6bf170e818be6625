import numpy as np
import pytest

from bnnkernel.tensor_core import (
    ConvGeometry,
    Orientation,
    PackedBitMatrix,
    ShapeError,
    derive_seed,
    fill_random,
    flat_index,
    output_dims,
    read_tensor_blob,
    write_tensor_blob,
)

M64 = (1 << 64) - 1


def splitmix_reference(seed, i):
    """Plain-int SplitMix64 of counter seed + (i+1)*golden, mapped to [-1, 1)."""
    z = (seed + (i + 1) * 0x9E3779B97F4A7C15) & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    z ^= z >> 31
    return (z >> 40) / 2**23 - 1.0


@pytest.mark.parametrize("k,s,p,expected", [(3, 1, 1, (32, 32)), (2, 2, 0, (16, 16))])
def test_output_dims(k, s, p, expected):
    assert output_dims(ConvGeometry.square(3, 8, k, s, p), 32, 32) == expected


def test_output_dims_non_integral():
    # (32 - 3) / 2 + 1 = 15.5
    assert (32 - 3) % 2 != 0
    with pytest.raises(ShapeError, match="height"):
        output_dims(ConvGeometry.square(3, 8, 3, 2, 0), 32, 32)
    with pytest.raises(ShapeError, match="width"):
        output_dims(ConvGeometry(3, 8, 3, 3, 1, 2, 0, 0), 32, 32)


def test_output_dims_kernel_too_large():
    with pytest.raises(ShapeError):
        output_dims(ConvGeometry.square(1, 1, 5), 3, 3)


def test_geometry_rejects_bad_values():
    with pytest.raises(ShapeError):
        ConvGeometry.square(0, 1, 3)
    with pytest.raises(ShapeError):
        ConvGeometry(1, 1, 3, 3, 1, 1, -1, 0)
    assert ConvGeometry.square(3, 8, 3).patch_size == 27


def test_fill_random_deterministic():
    a = fill_random((2, 3, 4, 5), 7)
    b = fill_random((2, 3, 4, 5), 7)
    assert a.dtype == np.float32
    assert a.tobytes() == b.tobytes()


def test_fill_random_seeds_differ():
    assert np.any(fill_random((1, 3, 8, 8), 1) != fill_random((1, 3, 8, 8), 2))


def test_fill_random_range():
    x = fill_random((1, 3, 32, 32), 123456789)
    assert x.size == 3072
    assert x.min() >= -1.0 and x.max() < 1.0


@pytest.mark.parametrize("seed", [0, 1, 2**63 + 5, M64])
def test_fill_random_matches_reference(seed):
    x = fill_random((50,), seed)
    expected = np.array([splitmix_reference(seed, i) for i in range(50)], dtype=np.float32)
    np.testing.assert_array_equal(x, expected)


def test_fill_random_zero_extent():
    with pytest.raises(ShapeError):
        fill_random((1, 0, 3, 3), 0)


def test_derive_seed_streams():
    assert derive_seed(5, 0) == derive_seed(5, 0)
    assert derive_seed(5, 0) != derive_seed(5, 1)
    assert derive_seed(5, 0) != derive_seed(6, 0)
    assert 0 <= derive_seed(M64, 3, 9) <= M64


def test_row_major_indexing(rng):
    shape = (2, 3, 4, 5)
    x = np.zeros(shape, dtype=np.float32)
    flat = x.reshape(-1)
    for _ in range(50):
        n, c, h, w = (int(rng.integers(e)) for e in shape)
        value = float(rng.random())
        flat[flat_index(shape, n, c, h, w)] = value
        assert x[n, c, h, w] == np.float32(value)


@pytest.mark.parametrize("rows,cols,orientation", [(3, 40, "row"), (70, 2, "col"), (1, 32, "row"), (1, 1, "col")])
def test_packed_matrix_capacity(rows, cols, orientation):
    extent = cols if orientation == "row" else rows
    lines = rows if orientation == "row" else cols
    wpl = -(-extent // 32)
    p = PackedBitMatrix(rows, cols, orientation, np.zeros((lines, wpl), np.uint32))
    assert p.orientation is Orientation(orientation)
    assert p.words.size == p.words_per_line * p.n_lines
    assert 0 <= p.pad_bits_per_line < 32
    assert 32 * p.words_per_line >= extent
    assert p.pad_bits_clear()


def test_packed_matrix_rejects_wrong_word_count():
    with pytest.raises(ShapeError):
        PackedBitMatrix(2, 40, "row", np.zeros((2, 1), np.uint32))


def test_packed_matrix_is_immutable():
    p = PackedBitMatrix(1, 8, "row", np.zeros((1, 1), np.uint32))
    with pytest.raises(ValueError):
        p.words[0, 0] = 1


def test_tensor_blob_roundtrip(tmp_path):
    x = fill_random((2, 3, 4, 5), 11)
    write_tensor_blob(tmp_path / "x.bin", x)
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[:8] == (2).to_bytes(8, "little")
    assert len(raw) == 32 + 4 * x.size
    np.testing.assert_array_equal(read_tensor_blob(tmp_path / "x.bin"), x)


def test_tensor_blob_truncated(tmp_path):
    x = fill_random((1, 1, 2, 2), 0)
    write_tensor_blob(tmp_path / "x.bin", x)
    path = tmp_path / "x.bin"
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ShapeError):
        read_tensor_blob(path)
