"""Dense tensor / packed bit-matrix containers and shared shape arithmetic.

Dense tensors are plain ``numpy`` float32 arrays in batch-channel-height-width
row-major order (width fastest). A "single-batch slice" is the 3-D
``(C, H, W)`` view of one batch element. Packed ±1 matrices get their own
container because they carry orientation and pad metadata.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

WORD_BITS = 32

# Aliases used in annotations; both are float32 ndarrays.
FloatTensor = np.ndarray
FloatMatrix = np.ndarray


class ShapeError(ValueError):
    """Raised when extents do not chain or an output extent is non-integral."""


class EncodingError(ValueError):
    """Raised when a matrix handed to a bit packer holds a value other than ±1."""


def check_tensor(x, ndim: int = 4, name: str = "tensor") -> np.ndarray:
    """Return ``x`` as a C-contiguous float32 array with ``ndim`` positive extents."""
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != ndim:
        raise ShapeError(f"{name}: expected {ndim}-D array, got shape {arr.shape}")
    if any(n < 1 for n in arr.shape):
        raise ShapeError(f"{name}: all extents must be >= 1, got {arr.shape}")
    return arr


def check_matrix(m, name: str = "matrix") -> np.ndarray:
    return check_tensor(m, ndim=2, name=name)


def flat_index(shape, n: int, c: int, h: int, w: int) -> int:
    """Row-major storage offset of element (n, c, h, w)."""
    _, C, H, W = shape
    return ((n * C + c) * H + h) * W + w


class Orientation(str, Enum):
    ROW = "row"  # one line per logical row, bits run along columns
    COL = "col"  # one line per logical column, bits run along rows


@dataclass(frozen=True)
class PackedBitMatrix:
    """A logical ±1 matrix stored as 32-bit words, bit 1 meaning +1.

    ``words`` has shape ``(lines, words_per_line)``. Logical index ``32*k + b``
    along the packed axis lives in bit ``b`` (LSB first) of word ``k``; bits
    past the logical extent are zero.
    """

    logical_rows: int
    logical_cols: int
    orientation: Orientation
    words: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if self.logical_rows < 1 or self.logical_cols < 1:
            raise ShapeError(
                f"packed matrix extents must be >= 1, got {self.logical_rows}x{self.logical_cols}"
            )
        words = np.ascontiguousarray(self.words, dtype=np.uint32)
        expected = (self.n_lines, self.words_per_line)
        if words.shape != expected:
            raise ShapeError(f"packed words have shape {words.shape}, expected {expected}")
        words.flags.writeable = False
        object.__setattr__(self, "words", words)

    @property
    def packed_extent(self) -> int:
        return self.logical_cols if self.orientation is Orientation.ROW else self.logical_rows

    @property
    def n_lines(self) -> int:
        return self.logical_rows if self.orientation is Orientation.ROW else self.logical_cols

    @property
    def words_per_line(self) -> int:
        return -(-self.packed_extent // WORD_BITS)

    @property
    def pad_bits_per_line(self) -> int:
        return WORD_BITS * self.words_per_line - self.packed_extent

    @property
    def nbytes(self) -> int:
        return self.words.nbytes

    def pad_mask(self) -> int:
        """Mask of the pad bits in the final word of every line."""
        used = WORD_BITS - self.pad_bits_per_line
        return (0xFFFFFFFF << used) & 0xFFFFFFFF

    def pad_bits_clear(self) -> bool:
        return not np.any(self.words[:, -1] & np.uint32(self.pad_mask()))

    def __eq__(self, other):
        if not isinstance(other, PackedBitMatrix):
            return NotImplemented
        return (
            self.logical_rows == other.logical_rows
            and self.logical_cols == other.logical_cols
            and self.orientation is other.orientation
            and np.array_equal(self.words, other.words)
        )

    __hash__ = None


@dataclass(frozen=True)
class ConvGeometry:
    """Kernel, stride, padding and channel counts of one convolution."""

    in_channels: int
    out_channels: int
    kh: int
    kw: int
    stride_h: int = 1
    stride_w: int = 1
    pad_h: int = 0
    pad_w: int = 0

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kh", "kw", "stride_h", "stride_w"):
            if getattr(self, name) < 1:
                raise ShapeError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.pad_h < 0 or self.pad_w < 0:
            raise ShapeError(f"padding must be >= 0, got ({self.pad_h}, {self.pad_w})")

    @classmethod
    def square(cls, in_channels: int, out_channels: int, k: int, stride: int = 1, pad: int = 0):
        return cls(in_channels, out_channels, k, k, stride, stride, pad, pad)

    @property
    def patch_size(self) -> int:
        """Rows of the lowered input matrix, K*K*C."""
        return self.in_channels * self.kh * self.kw


def _axis_extent(axis: str, size: int, k: int, stride: int, pad: int) -> int:
    span = size + 2 * pad - k
    if span < 0:
        raise ShapeError(f"{axis}: kernel {k} larger than padded input {size + 2 * pad}")
    if span % stride:
        raise ShapeError(
            f"{axis}: ({size} + 2*{pad} - {k}) / {stride} + 1 is not an integer"
        )
    return span // stride + 1


def output_dims(geom: ConvGeometry, in_h: int, in_w: int) -> tuple[int, int]:
    """Spatial extents of the convolution output; ``N = out_h * out_w``."""
    return (
        _axis_extent("height", in_h, geom.kh, geom.stride_h, geom.pad_h),
        _axis_extent("width", in_w, geom.kw, geom.stride_w, geom.pad_w),
    )


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(counter: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise (wrapping uint64 arithmetic)."""
    z = np.asarray(counter, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def fill_random(shape, seed: int) -> np.ndarray:
    """Deterministic float32 values in [-1, 1).

    Element ``i`` (row-major) is ``splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)``;
    its top 24 bits ``t`` give ``t / 2**23 - 1``, exactly representable in float32,
    so the output is bit-identical on every platform.
    """
    shape = tuple(int(n) for n in np.atleast_1d(shape))
    if not shape or any(n < 1 for n in shape):
        raise ShapeError(f"fill_random: all extents must be >= 1, got {shape}")
    count = int(np.prod(shape))
    base = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        counter = base + np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN
    top = splitmix64(counter) >> np.uint64(40)
    values = top.astype(np.float64) * 2.0**-23 - 1.0
    return values.astype(np.float32).reshape(shape)


def derive_seed(seed: int, *stream: int) -> int:
    """Independent 64-bit seed for a sub-stream (layer index, parameter slot...)."""
    value = int(seed) & 0xFFFFFFFFFFFFFFFF
    for s in stream:
        with np.errstate(over="ignore"):
            value = int(splitmix64(np.uint64(value) + np.uint64(s + 1) * _GOLDEN))
    return value


# Tensor blob: four little-endian u64 extents, then float32 LE row-major data.
_BLOB_HEADER = struct.Struct("<4Q")


def write_tensor_blob(path, x) -> None:
    x = np.asarray(x, dtype=np.float32)
    if x.ndim > 4:
        raise ShapeError(f"tensor blob holds at most 4 extents, got {x.shape}")
    x = x.reshape((1,) * (4 - x.ndim) + x.shape)
    with open(path, "wb") as fh:
        fh.write(_BLOB_HEADER.pack(*x.shape))
        fh.write(np.ascontiguousarray(x, dtype="<f4").tobytes())


def read_tensor_blob(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _BLOB_HEADER.size:
        raise ShapeError(f"{path}: truncated tensor blob header")
    dims = _BLOB_HEADER.unpack_from(raw)
    count = int(np.prod(dims))
    payload = raw[_BLOB_HEADER.size:]
    if len(payload) != 4 * count:
        raise ShapeError(f"{path}: header says {dims} ({4 * count} bytes), payload has {len(payload)}")
    return check_tensor(np.frombuffer(payload, dtype="<f4").reshape(dims))
