"""Matrix engines: float GEMM (control group), XNOR-popcount GEMM, direct conv.

Both GEMMs are compiled by numba from plain loops; no BLAS is involved on
either side, so the speedup of the binary engine is measured against an
equally compiled, equally naive float loop.
"""
from __future__ import annotations

import numba
import numpy as np
from llvmlite import ir
from numba import njit, prange, types
from numba.extending import intrinsic

from .tensor_core import (
    WORD_BITS,
    ConvGeometry,
    Orientation,
    PackedBitMatrix,
    ShapeError,
    check_matrix,
    check_tensor,
    output_dims,
)

# uint32 popcount accumulator must not overflow: 32 * words_per_line <= 2**26.
MAX_WORDS_PER_LINE = 2**26 // WORD_BITS
_MASK32 = 0xFFFFFFFF


def _set_threads(threads: int) -> None:
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    available = numba.config.NUMBA_NUM_THREADS
    if threads > available:
        raise ValueError(f"threads={threads} exceeds the {available} numba worker threads available")
    numba.set_num_threads(threads)


# ---------------------------------------------------------------- float GEMM

@njit(cache=True)
def _float_gemm(w, x, out):
    D, L = w.shape
    N = x.shape[1]
    for i in range(D):
        for k in range(L):
            a = w[i, k]
            for j in range(N):
                out[i, j] += a * x[k, j]


@njit(parallel=True, cache=True)
def _float_gemm_par(w, x, out):
    D, L = w.shape
    N = x.shape[1]
    for i in prange(D):
        for k in range(L):
            a = w[i, k]
            for j in range(N):
                out[i, j] += a * x[k, j]


def float_gemm(w, x, threads: int = 1) -> np.ndarray:
    """``(D, L) @ (L, N)`` as an i-k-j triple loop in float32."""
    w = check_matrix(w, name="GEMM weights")
    x = check_matrix(x, name="GEMM input")
    if w.shape[1] != x.shape[0]:
        raise ShapeError(f"inner extents differ: weights {w.shape}, input {x.shape}")
    out = np.zeros((w.shape[0], x.shape[1]), dtype=np.float32)
    if threads == 1:
        _float_gemm(w, x, out)
    else:
        _set_threads(threads)
        _float_gemm_par(w, x, out)
    return out


# ------------------------------------------------------------------ popcount

@intrinsic
def _ctpop32(typingctx, v):
    """Native population count (``llvm.ctpop.i32``, POPCNT on x86)."""
    sig = types.uint32(types.uint32)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(32)])
        return builder.call(fn, args)

    return sig, codegen


@njit(cache=True)
def _swar32(v):
    v = v - ((v >> np.uint32(1)) & np.uint32(0x55555555))
    v = (v & np.uint32(0x33333333)) + ((v >> np.uint32(2)) & np.uint32(0x33333333))
    v = (v + (v >> np.uint32(4))) & np.uint32(0x0F0F0F0F)
    return np.uint32(v * np.uint32(0x01010101)) >> np.uint32(24)


@njit(cache=True)
def _popcount_native_words(a, out):
    for i in range(a.size):
        out[i] = _ctpop32(a[i])


@njit(cache=True)
def _popcount_portable_words(a, out):
    for i in range(a.size):
        out[i] = _swar32(a[i])


def popcount_words(a, native: bool = True) -> np.ndarray:
    """Elementwise popcount of a uint32 array with the compiled primitive."""
    a = np.ascontiguousarray(a, dtype=np.uint32).ravel()
    out = np.empty(a.size, dtype=np.uint32)
    (_popcount_native_words if native else _popcount_portable_words)(a, out)
    return out


def popcount32(v: int) -> int:
    return (int(v) & _MASK32).bit_count()


def word_dot(w_word: int, x_word: int) -> int:
    """±1 dot product of two packed 32-bit words: ``2*popcount(~(w ^ x)) - 32``."""
    return 2 * popcount32(~(int(w_word) ^ int(x_word))) - WORD_BITS


# ---------------------------------------------------------------- XNOR GEMM

@njit(cache=True)
def _xnor_gemm_native(w, x, correction, out):
    D, K = w.shape
    N = x.shape[0]
    for i in range(D):
        for j in range(N):
            acc = np.uint32(0)
            for k in range(K):
                acc += _ctpop32(~(w[i, k] ^ x[j, k]))
            out[i, j] = 2 * np.int64(acc) - correction


@njit(cache=True)
def _xnor_gemm_portable(w, x, correction, out):
    D, K = w.shape
    N = x.shape[0]
    for i in range(D):
        for j in range(N):
            acc = np.uint32(0)
            for k in range(K):
                acc += _swar32(~(w[i, k] ^ x[j, k]))
            out[i, j] = 2 * np.int64(acc) - correction


@njit(parallel=True, cache=True)
def _xnor_gemm_native_par(w, x, correction, out):
    D, K = w.shape
    N = x.shape[0]
    for i in prange(D):
        for j in range(N):
            acc = np.uint32(0)
            for k in range(K):
                acc += _ctpop32(~(w[i, k] ^ x[j, k]))
            out[i, j] = 2 * np.int64(acc) - correction


def xnor_gemm(w: PackedBitMatrix, x: PackedBitMatrix, L: int | None = None,
              threads: int = 1, native: bool = True) -> np.ndarray:
    """Exact ±1 product of a row-packed ``(D, L)`` and a column-packed ``(L, N)`` matrix.

    Each zero pad bit agrees with the other operand's zero pad bit and adds
    one spurious +1 to the raw sum, so the result is
    ``2 * sum_k popcount(~(w_k ^ x_k)) - 32 * words_per_line - pad_bits``.
    Returns int32 values in ``[-L, L]``.
    """
    if w.orientation is not Orientation.ROW or x.orientation is not Orientation.COL:
        raise ShapeError("xnor_gemm needs a row-packed weight and a column-packed input")
    if L is None:
        L = w.logical_cols
    if w.logical_cols != L or x.logical_rows != L:
        raise ShapeError(
            f"reduction length mismatch: weights {w.logical_cols}, input {x.logical_rows}, L={L}"
        )
    wpl = w.words_per_line
    if x.words_per_line != wpl:
        raise ShapeError(f"words per line differ: {wpl} vs {x.words_per_line}")
    if wpl > MAX_WORDS_PER_LINE:
        raise ShapeError(f"{wpl} words per line would overflow the 32-bit popcount accumulator")
    correction = WORD_BITS * wpl + w.pad_bits_per_line
    out = np.empty((w.logical_rows, x.logical_cols), dtype=np.int32)
    if threads != 1:
        if not native:
            raise ValueError("the portable popcount path is single-threaded")
        _set_threads(threads)
        _xnor_gemm_native_par(w.words, x.words, correction, out)
    elif native:
        _xnor_gemm_native(w.words, x.words, correction, out)
    else:
        _xnor_gemm_portable(w.words, x.words, correction, out)
    return out


# ------------------------------------------------------------------- helpers

def bias_add(a, bias) -> np.ndarray:
    """Add ``bias[d]`` to every column of row ``d``; integer input is cast to float32."""
    a = check_matrix(a, name="bias_add input")
    bias = np.asarray(bias, dtype=np.float32).ravel()
    if bias.size != a.shape[0]:
        raise ShapeError(f"bias has {bias.size} entries for {a.shape[0]} rows")
    return a + bias[:, None]


@njit(cache=True)
def _naive_conv(x, w, sh, sw, ph, pw, pad_value, out):
    D, C, kh, kw = w.shape
    _, H, W = x.shape
    _, out_h, out_w = out.shape
    for d in range(D):
        for i in range(out_h):
            for j in range(out_w):
                acc = np.float32(0.0)
                for h in range(kh):
                    for ww in range(kw):
                        ih = i * sh + h - ph
                        iw = j * sw + ww - pw
                        inside = 0 <= ih < H and 0 <= iw < W
                        for c in range(C):
                            v = x[c, ih, iw] if inside else pad_value
                            acc += w[d, c, h, ww] * v
                out[d, i, j] = acc


def naive_conv(x, w, geom: ConvGeometry, pad_value: float = 0.0) -> np.ndarray:
    """Direct convolution of a ``(C, H, W)`` slice with ``(D, C, kh, kw)`` filters.

    Evaluates ``a[d, i, j] = sum_{h, w, c} W[d, c, h, w] * x[c, i*s + h - p, j*s + w - p]``
    (cross-correlation, no kernel flip). Reads outside the input see
    ``pad_value``.
    """
    x = check_tensor(x, ndim=3, name="conv input")
    w = check_tensor(w, ndim=4, name="conv weights")
    if w.shape != (geom.out_channels, geom.in_channels, geom.kh, geom.kw):
        raise ShapeError(f"weights {w.shape} do not match geometry {geom}")
    if x.shape[0] != geom.in_channels:
        raise ShapeError(f"input has {x.shape[0]} channels, geometry expects {geom.in_channels}")
    out_h, out_w = output_dims(geom, x.shape[1], x.shape[2])
    out = np.empty((geom.out_channels, out_h, out_w), dtype=np.float32)
    _naive_conv(x, w, geom.stride_h, geom.stride_w, geom.pad_h, geom.pad_w,
                np.float32(pad_value), out)
    return out
