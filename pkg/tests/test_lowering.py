import numpy as np
import pytest

from bnnkernel.kernels import float_gemm, naive_conv
from bnnkernel.lowering import col2im, flatten_weights, im2col, reshape_output
from bnnkernel.tensor_core import ConvGeometry, ShapeError, fill_random, output_dims


def im2col_by_enumeration(x, geom):
    """Patch matrix straight from the definition, one element at a time."""
    C, H, W = x.shape
    oh_n, ow_n = output_dims(geom, H, W)
    out = np.zeros((geom.patch_size, oh_n * ow_n), dtype=np.float32)
    for c in range(C):
        for h in range(geom.kh):
            for w in range(geom.kw):
                for oh in range(oh_n):
                    for ow in range(ow_n):
                        ih = oh * geom.stride_h + h - geom.pad_h
                        iw = ow * geom.stride_w + w - geom.pad_w
                        if 0 <= ih < H and 0 <= iw < W:
                            out[(c * geom.kh + h) * geom.kw + w, oh * ow_n + ow] = x[c, ih, iw]
    return out


def test_im2col_hand_example():
    x = np.arange(1, 10, dtype=np.float32).reshape(1, 3, 3)
    m = im2col(x, ConvGeometry.square(1, 1, 2))
    assert m.shape == (4, 4)
    expected_cols = [[1, 2, 4, 5], [2, 3, 5, 6], [4, 5, 7, 8], [5, 6, 8, 9]]
    np.testing.assert_array_equal(m.T, np.array(expected_cols, dtype=np.float32))


def test_im2col_1x1_is_reshape():
    x = fill_random((5, 6, 7), 1)
    np.testing.assert_array_equal(im2col(x, ConvGeometry.square(5, 1, 1)), x.reshape(5, 42))


def test_im2col_cifar_shape():
    m = im2col(fill_random((3, 32, 32), 2), ConvGeometry.square(3, 8, 3, 1, 1))
    assert m.shape == (27, 1024)


@pytest.mark.parametrize("geom,hw", [
    (ConvGeometry.square(2, 1, 3, 1, 1), (5, 6)),
    (ConvGeometry.square(3, 1, 3, 2, 1), (7, 7)),
    (ConvGeometry(2, 1, 2, 3, 1, 2, 0, 1), (4, 5)),
    (ConvGeometry.square(1, 1, 5, 1, 2), (3, 3)),
])
def test_im2col_matches_enumeration(geom, hw):
    x = fill_random((geom.in_channels,) + hw, 3)
    m = im2col(x, geom)
    np.testing.assert_array_equal(m, im2col_by_enumeration(x, geom))
    assert m.shape[1] == np.prod(output_dims(geom, *hw))


def test_im2col_channel_mismatch():
    with pytest.raises(ShapeError):
        im2col(fill_random((2, 4, 4), 0), ConvGeometry.square(3, 1, 3))


def test_col2im_inverts_non_overlapping():
    x = fill_random((3, 6, 6), 4)
    geom = ConvGeometry.square(3, 1, 2, 2)
    np.testing.assert_array_equal(col2im(im2col(x, geom), geom, 6, 6), x)


def test_col2im_counts_patch_membership():
    geom = ConvGeometry.square(1, 1, 2)
    ones = np.ones((1, 3, 3), dtype=np.float32)
    counts = col2im(im2col(ones, geom), geom, 3, 3)[0]
    # enumerate how many 2x2 windows of a 3x3 grid cover each cell
    expected = np.zeros((3, 3))
    for oh in range(2):
        for ow in range(2):
            expected[oh:oh + 2, ow:ow + 2] += 1
    np.testing.assert_array_equal(counts, expected)
    assert counts[1, 1] == 4 and counts[0, 1] == 2 and counts[0, 0] == 1


def test_col2im_zero():
    geom = ConvGeometry.square(2, 1, 3, 1, 1)
    out = col2im(np.zeros((18, 16), np.float32), geom, 4, 4)
    assert out.shape == (2, 4, 4) and not out.any()


def test_col2im_shape_error():
    with pytest.raises(ShapeError):
        col2im(np.zeros((4, 5), np.float32), ConvGeometry.square(1, 1, 2), 3, 3)


def test_adjointness(rng):
    for _ in range(20):
        k = int(rng.integers(1, 4))
        s = int(rng.integers(1, 3))
        p = int(rng.integers(0, 2))
        c = int(rng.integers(1, 4))
        out = int(rng.integers(2, 6))
        n = (out - 1) * s + k - 2 * p
        while n < 1:
            n += s
        geom = ConvGeometry.square(c, 1, k, s, p)
        x = rng.standard_normal((c, n, n)).astype(np.float32)
        lowered = im2col(x, geom)
        y = rng.standard_normal(lowered.shape).astype(np.float32)
        lhs = np.dot(lowered.ravel().astype(np.float64), y.ravel())
        rhs = np.dot(x.ravel().astype(np.float64), col2im(y, geom, n, n).ravel())
        scale = np.abs(lowered.astype(np.float64) * y).sum()
        assert abs(lhs - rhs) <= 1e-5 * scale if scale else lhs == rhs


def test_reshape_output():
    m = np.array([[1, 2, 3, 4]], dtype=np.float32)
    np.testing.assert_array_equal(reshape_output(m, 2, 2), [[[1, 2], [3, 4]]])
    assert reshape_output(np.ones((2, 1), np.float32), 1, 1).shape == (2, 1, 1)
    m = fill_random((4, 12), 5)
    np.testing.assert_array_equal(reshape_output(m, 3, 4).reshape(4, -1), m)
    with pytest.raises(ShapeError):
        reshape_output(m, 5, 5)


def test_lowered_gemm_matches_direct_conv():
    geom = ConvGeometry.square(3, 4, 3, 1, 1)
    x = fill_random((3, 8, 8), 6)
    w = fill_random((4, 3, 3, 3), 7)
    lowered = reshape_output(float_gemm(flatten_weights(w), im2col(x, geom)), 8, 8)
    direct = naive_conv(x, w, geom)
    assert np.max(np.abs(lowered - direct)) <= 1e-4 * np.max(np.abs(direct))
