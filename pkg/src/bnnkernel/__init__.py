"""Bit-packed XNOR-popcount inference kernels for binarized neural networks."""

from .binarize import htanh, pack_cols, pack_rows, sign, unpack
from .kernels import bias_add, float_gemm, naive_conv, word_dot, xnor_gemm
from .lowering import col2im, im2col, reshape_output
from .network import (
    NetworkSpec,
    build_default_network,
    build_network,
    network_forward,
)
from .tensor_core import (
    ConvGeometry,
    EncodingError,
    Orientation,
    PackedBitMatrix,
    ShapeError,
    fill_random,
    output_dims,
)

__version__ = "0.1.0"
