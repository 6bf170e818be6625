"""im2col / col2im lowering between convolution and matrix multiplication.

Row ``r`` of a lowered matrix is ``(c * kh + h) * kw + w``: channel-major, then
kernel row, then kernel column. Weight tensors of shape ``(D, C, kh, kw)``
flatten to ``(D, C*kh*kw)`` in exactly this order with a plain reshape.
Column ``j`` is output position ``(j // out_w, j % out_w)``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .tensor_core import ConvGeometry, ShapeError, check_matrix, check_tensor, output_dims


@njit(cache=True)
def _im2col(x, kh, kw, sh, sw, ph, pw, out_h, out_w, fill, out):
    C, H, W = x.shape
    for c in range(C):
        for h in range(kh):
            for w in range(kw):
                r = (c * kh + h) * kw + w
                for oh in range(out_h):
                    ih = oh * sh + h - ph
                    base = oh * out_w
                    if ih < 0 or ih >= H:
                        for ow in range(out_w):
                            out[r, base + ow] = fill
                        continue
                    for ow in range(out_w):
                        iw = ow * sw + w - pw
                        if iw < 0 or iw >= W:
                            out[r, base + ow] = fill
                        else:
                            out[r, base + ow] = x[c, ih, iw]


@njit(cache=True)
def _col2im(m, kh, kw, sh, sw, ph, pw, out_h, out_w, out):
    C, H, W = out.shape
    for c in range(C):
        for h in range(kh):
            for w in range(kw):
                r = (c * kh + h) * kw + w
                for oh in range(out_h):
                    ih = oh * sh + h - ph
                    if ih < 0 or ih >= H:
                        continue
                    for ow in range(out_w):
                        iw = ow * sw + w - pw
                        if 0 <= iw < W:
                            out[c, ih, iw] += m[r, oh * out_w + ow]


def _slice_dims(x: np.ndarray, geom: ConvGeometry) -> tuple[int, int]:
    if x.shape[0] != geom.in_channels:
        raise ShapeError(f"input has {x.shape[0]} channels, geometry expects {geom.in_channels}")
    return output_dims(geom, x.shape[1], x.shape[2])


def im2col(x, geom: ConvGeometry, fill: float = 0.0) -> np.ndarray:
    """Lower a ``(C, H, W)`` slice to a ``(K*K*C, out_h*out_w)`` patch matrix.

    Reads outside the input yield ``fill`` (zero padding by default).
    """
    x = check_tensor(x, ndim=3, name="im2col input")
    out_h, out_w = _slice_dims(x, geom)
    out = np.empty((geom.patch_size, out_h * out_w), dtype=np.float32)
    _im2col(x, geom.kh, geom.kw, geom.stride_h, geom.stride_w, geom.pad_h, geom.pad_w,
            out_h, out_w, np.float32(fill), out)
    return out


def col2im(m, geom: ConvGeometry, in_h: int, in_w: int) -> np.ndarray:
    """Scatter-add a patch matrix back onto a ``(C, in_h, in_w)`` slice.

    This is the adjoint of :func:`im2col`: positions covered by several
    patches receive the sum of their contributions, padding is dropped.
    """
    m = check_matrix(m, name="col2im input")
    out_h, out_w = output_dims(geom, in_h, in_w)
    if m.shape != (geom.patch_size, out_h * out_w):
        raise ShapeError(
            f"col2im expects {(geom.patch_size, out_h * out_w)} for a {in_h}x{in_w} target, got {m.shape}"
        )
    out = np.zeros((geom.in_channels, in_h, in_w), dtype=np.float32)
    _col2im(m, geom.kh, geom.kw, geom.stride_h, geom.stride_w, geom.pad_h, geom.pad_w,
            out_h, out_w, out)
    return out


def reshape_output(m, out_h: int, out_w: int) -> np.ndarray:
    """Unflatten a ``(D, N)`` GEMM result into a ``(D, out_h, out_w)`` feature map."""
    m = check_matrix(m, name="GEMM output")
    if m.shape[1] != out_h * out_w:
        raise ShapeError(f"GEMM output has {m.shape[1]} columns, expected {out_h}*{out_w}")
    return m.reshape(m.shape[0], out_h, out_w)


def flatten_weights(w) -> np.ndarray:
    """``(D, C, kh, kw)`` filters to the ``(D, C*kh*kw)`` matrix matching im2col rows."""
    w = check_tensor(w, ndim=4, name="conv weights")
    return w.reshape(w.shape[0], -1)
