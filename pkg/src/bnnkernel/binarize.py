"""Sign / hard-tanh nonlinearities and the ±1 bit-packing encoders.

Encoding: +1 is bit 1, -1 is bit 0. Weights are packed along rows into a
``(D, ceil(L/32))`` word matrix; lowered inputs are packed along columns, one
line of ``ceil(L/32)`` words per output position. Pad bits are zero in both.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from numba import njit

from .tensor_core import (
    WORD_BITS,
    EncodingError,
    Orientation,
    PackedBitMatrix,
    ShapeError,
    check_matrix,
)


@njit(cache=True)
def _sign(flat, out):
    for i in range(flat.size):
        out[i] = np.float32(1.0) if flat[i] >= 0 else np.float32(-1.0)


def sign(x) -> np.ndarray:
    """Deterministic binarization: ``x >= 0`` maps to +1, everything else to -1."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    out = np.empty_like(x)
    _sign(x.reshape(-1), out.reshape(-1))
    return out


def htanh(x) -> np.ndarray:
    """Hard tanh, a clamp to [-1, 1]."""
    return np.clip(np.asarray(x, dtype=np.float32), np.float32(-1.0), np.float32(1.0))


@njit(cache=True)
def _pack_row_lines(m, out):
    rows, cols = m.shape
    for i in range(rows):
        for j in range(cols):
            if m[i, j] > 0:
                out[i, j >> 5] |= np.uint32(1) << np.uint32(j & 31)


@njit(cache=True)
def _pack_col_lines(m, out):
    rows, cols = m.shape
    acc = np.empty(cols, dtype=np.uint32)
    for k in range(out.shape[1]):
        acc[:] = 0
        for b in range(min(32, rows - 32 * k)):
            r = 32 * k + b
            for j in range(cols):
                acc[j] |= np.uint32(m[r, j] > 0) << np.uint32(b)
        for j in range(cols):
            out[j, k] = acc[j]


def _check_pm1(m: np.ndarray) -> None:
    bad = (m != 1.0) & (m != -1.0)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise EncodingError(f"entry ({i}, {j}) is {m[i, j]!r}; only -1 and +1 can be packed")


def pack_rows(w, check: bool = True) -> PackedBitMatrix:
    """Pack a ±1 ``(D, L)`` matrix line-per-row, for the weight operand."""
    w = check_matrix(w, name="pack_rows input")
    if check:
        _check_pm1(w)
    rows, cols = w.shape
    out = np.zeros((rows, -(-cols // WORD_BITS)), dtype=np.uint32)
    _pack_row_lines(w, out)
    return PackedBitMatrix(rows, cols, Orientation.ROW, out)


def pack_cols(x, check: bool = True) -> PackedBitMatrix:
    """Pack a ±1 ``(L, N)`` matrix line-per-column, for the lowered input operand.

    ``check=False`` skips the ±1 scan; only use it on :func:`sign` output.
    """
    x = check_matrix(x, name="pack_cols input")
    if check:
        _check_pm1(x)
    rows, cols = x.shape
    out = np.zeros((cols, -(-rows // WORD_BITS)), dtype=np.uint32)
    _pack_col_lines(x, out)
    return PackedBitMatrix(rows, cols, Orientation.COL, out)


def unpack(p: PackedBitMatrix) -> np.ndarray:
    """Inverse of the matching pack operation; pad bits are ignored."""
    raw = p.words.astype("<u4").view(np.uint8)
    bits = np.unpackbits(raw, axis=1, bitorder="little")[:, : p.packed_extent]
    values = bits.astype(np.float32) * 2 - 1
    if p.orientation is Orientation.COL:
        values = values.T
    return np.ascontiguousarray(values)


# Packed blob: orientation byte (0 row, 1 col), rows and cols as u64, then
# little-endian words, line-major.
_PACKED_HEADER = struct.Struct("<BQQ")
_ORIENT_CODE = {Orientation.ROW: 0, Orientation.COL: 1}


def write_packed_blob(path, p: PackedBitMatrix) -> None:
    with open(path, "wb") as fh:
        fh.write(_PACKED_HEADER.pack(_ORIENT_CODE[p.orientation], p.logical_rows, p.logical_cols))
        fh.write(p.words.astype("<u4").tobytes())


def read_packed_blob(path) -> PackedBitMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _PACKED_HEADER.size:
        raise ShapeError(f"{path}: truncated packed blob header")
    code, rows, cols = _PACKED_HEADER.unpack_from(raw)
    if code not in (0, 1):
        raise ShapeError(f"{path}: unknown orientation byte {code}")
    orientation = Orientation.ROW if code == 0 else Orientation.COL
    lines = rows if orientation is Orientation.ROW else cols
    extent = cols if orientation is Orientation.ROW else rows
    wpl = -(-extent // WORD_BITS)
    payload = raw[_PACKED_HEADER.size:]
    if len(payload) != 4 * lines * wpl:
        raise ShapeError(f"{path}: expected {4 * lines * wpl} payload bytes, found {len(payload)}")
    words = np.frombuffer(payload, dtype="<u4").astype(np.uint32).reshape(lines, wpl)
    return PackedBitMatrix(rows, cols, orientation, words)
