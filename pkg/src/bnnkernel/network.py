"""Layer forward passes for the float and binary graphs, and network assembly.

A :class:`NetworkSpec` is the declarative layer list (loadable from YAML);
:func:`build_network` materializes its parameters once (weights are signed,
flattened and, for the binary kernel, packed at build time) and returns a
:class:`Network` that :func:`network_forward` runs.

Between layers activations are either a ``(B, C, H, W)`` tensor or, after the
first linear layer, a ``(features, B)`` matrix.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml
from numba import njit

from .binarize import htanh, pack_cols, pack_rows, sign, write_packed_blob
from .kernels import bias_add, float_gemm, naive_conv, xnor_gemm
from .lowering import flatten_weights, im2col, reshape_output
from .tensor_core import (
    WORD_BITS,
    ConvGeometry,
    PackedBitMatrix,
    ShapeError,
    check_matrix,
    check_tensor,
    derive_seed,
    fill_random,
    output_dims,
    read_tensor_blob,
)

LAYER_KINDS = ("conv", "linear", "maxpool", "affine_norm", "sign_act", "htanh_act")
KERNELS = ("binary", "float", "naive")
DEFAULT_SPEC_PATH = Path(__file__).with_name("data") / "default_network.yaml"


class SpecError(ValueError):
    """Malformed or inconsistent network description."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None,
                 layer_index: int | None = None):
        self.line = line
        self.source = source
        self.layer_index = layer_index
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


# ------------------------------------------------------------ layer forwards

def conv_forward_float(x, weights, bias, geom: ConvGeometry, binarize_input: bool = False,
                       threads: int = 1) -> np.ndarray:
    """Control-group convolution: im2col, float GEMM, bias add, reshape.

    ``weights`` may be ``(D, C, kh, kw)`` or already flattened ``(D, K*K*C)``.
    With ``binarize_input`` the lowered matrix is passed through :func:`sign`
    first, which is how a simulated BNN feeds the float GEMM (zero padding
    then binarizes to +1, exactly as in the binary path).
    """
    x = check_tensor(x, name="conv input")
    w_flat = flatten_weights(weights) if np.ndim(weights) == 4 else check_matrix(weights)
    if w_flat.shape != (geom.out_channels, geom.patch_size):
        raise ShapeError(f"weights {w_flat.shape} do not match geometry {geom}")
    out_h, out_w = output_dims(geom, x.shape[2], x.shape[3])
    out = np.empty((x.shape[0], geom.out_channels, out_h, out_w), dtype=np.float32)
    for n in range(x.shape[0]):
        cols = im2col(x[n], geom)
        if binarize_input:
            cols = sign(cols)
        a = bias_add(float_gemm(w_flat, cols, threads=threads), bias)
        out[n] = reshape_output(a, out_h, out_w)
    return out


def conv_forward_binary(x, packed_weights: PackedBitMatrix, bias, geom: ConvGeometry,
                        threads: int = 1) -> np.ndarray:
    """Binary convolution: im2col, sign, column packing, XNOR-popcount GEMM, bias, reshape."""
    x = check_tensor(x, name="conv input")
    if (packed_weights.logical_rows, packed_weights.logical_cols) != (geom.out_channels, geom.patch_size):
        raise ShapeError(
            f"packed weights {packed_weights.logical_rows}x{packed_weights.logical_cols} "
            f"do not match geometry {geom}"
        )
    out_h, out_w = output_dims(geom, x.shape[2], x.shape[3])
    out = np.empty((x.shape[0], geom.out_channels, out_h, out_w), dtype=np.float32)
    for n in range(x.shape[0]):
        packed = pack_cols(sign(im2col(x[n], geom)), check=False)
        a = xnor_gemm(packed_weights, packed, geom.patch_size, threads=threads)
        out[n] = reshape_output(bias_add(a, bias), out_h, out_w)
    return out


def conv_forward_naive(x, weights, bias, geom: ConvGeometry, binarize_input: bool = False) -> np.ndarray:
    """Direct-loop convolution with the same padding semantics as the lowered paths."""
    x = check_tensor(x, name="conv input")
    bias = np.asarray(bias, dtype=np.float32)
    pad_value = 0.0
    if binarize_input:
        x = sign(x)
        pad_value = 1.0
    return np.stack([
        naive_conv(x[n], weights, geom, pad_value=pad_value) + bias[:, None, None]
        for n in range(x.shape[0])
    ])


def linear_forward(x, weights, bias, kernel: str = "float", binarize_input: bool = False,
                   threads: int = 1) -> np.ndarray:
    """Fully connected layer on a ``(features, batch)`` matrix.

    ``weights`` is a ``(out, in)`` float matrix, or a row-packed
    :class:`PackedBitMatrix` for the binary kernel (which always binarizes
    its input).
    """
    x = check_matrix(x, name="linear input")
    if kernel == "binary":
        packed = pack_cols(sign(x), check=False)
        return bias_add(xnor_gemm(weights, packed, x.shape[0], threads=threads), bias)
    w = check_matrix(weights, name="linear weights")
    if binarize_input:
        x = sign(x)
    if kernel == "float":
        return bias_add(float_gemm(w, x, threads=threads), bias)
    if kernel == "naive":
        geom = ConvGeometry.square(w.shape[1], w.shape[0], 1)
        w4 = w.reshape(w.shape[0], w.shape[1], 1, 1)
        cols = [naive_conv(x[:, j].reshape(-1, 1, 1), w4, geom).ravel() for j in range(x.shape[1])]
        return bias_add(np.stack(cols, axis=1), bias)
    raise ValueError(f"unknown kernel {kernel!r}")


@njit(cache=True)
def _maxpool2(x, out):
    B, C, H, W = out.shape
    for n in range(B):
        for c in range(C):
            for i in range(H):
                for j in range(W):
                    out[n, c, i, j] = max(max(x[n, c, 2 * i, 2 * j], x[n, c, 2 * i, 2 * j + 1]),
                                          max(x[n, c, 2 * i + 1, 2 * j], x[n, c, 2 * i + 1, 2 * j + 1]))


def maxpool2(x) -> np.ndarray:
    """2x2 max pooling with stride 2."""
    x = check_tensor(x, name="maxpool input")
    B, C, H, W = x.shape
    if H % 2 or W % 2:
        raise ShapeError(f"maxpool2 needs even spatial extents, got {H}x{W}")
    out = np.empty((B, C, H // 2, W // 2), dtype=np.float32)
    _maxpool2(x, out)
    return out


def affine_norm(x, scale, shift) -> np.ndarray:
    """Per-channel ``scale * x + shift`` (inference-mode batch norm).

    Channels are axis 1 of a 4-D tensor or axis 0 of a ``(features, batch)`` matrix.
    """
    x = np.asarray(x, dtype=np.float32)
    scale = np.asarray(scale, dtype=np.float32).ravel()
    shift = np.asarray(shift, dtype=np.float32).ravel()
    axis = 1 if x.ndim == 4 else 0
    if x.ndim not in (2, 4) or not (scale.size == shift.size == x.shape[axis]):
        raise ShapeError(f"affine_norm: {scale.size} channel parameters for input {x.shape}")
    bshape = [1] * x.ndim
    bshape[axis] = -1
    return scale.reshape(bshape) * x + shift.reshape(bshape)


# --------------------------------------------------------------------- specs

@dataclass(frozen=True)
class LayerSpec:
    """One layer of a network description.

    ``geometry`` is set for conv layers, ``in_features``/``out_features`` for
    linear layers. ``binarize`` means weights and input activations are
    signed before the GEMM; the binary kernel requires it.
    """

    kind: str
    geometry: ConvGeometry | None = None
    in_features: int | None = None
    out_features: int | None = None
    kernel: str = "binary"
    binarize: bool = True
    seed: int | None = None
    weights_blob: str | None = None
    bias_blob: str | None = None

    @property
    def has_weights(self) -> bool:
        return self.kind in ("conv", "linear")

    @property
    def reduction_length(self) -> int:
        """Inner GEMM extent L (K*K*C for conv, in_features for linear)."""
        if self.kind == "conv":
            return self.geometry.patch_size
        return self.in_features

    @property
    def weight_rows(self) -> int:
        return self.geometry.out_channels if self.kind == "conv" else self.out_features

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "conv":
            g = self.geometry
            d.update(in_channels=g.in_channels, out_channels=g.out_channels,
                     kernel_size=g.kh if g.kh == g.kw else [g.kh, g.kw],
                     stride=g.stride_h if g.stride_h == g.stride_w else [g.stride_h, g.stride_w],
                     padding=g.pad_h if g.pad_h == g.pad_w else [g.pad_h, g.pad_w])
        elif self.kind == "linear":
            d.update(in_features=self.in_features, out_features=self.out_features)
        if self.has_weights:
            d.update(kernel=self.kernel, binarize=self.binarize)
            for key in ("seed", "weights_blob", "bias_blob"):
                if getattr(self, key) is not None:
                    d[key] = getattr(self, key)
        return d


def _pair(value, name: str) -> tuple[int, int]:
    if isinstance(value, int):
        return value, value
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return int(value[0]), int(value[1])
    raise ValueError(f"{name} must be an integer or a pair of integers, got {value!r}")


_LAYER_KEYS = {
    "conv": {"in_channels", "out_channels", "kernel_size", "stride", "padding"},
    "linear": {"in_features", "out_features"},
}
_WEIGHT_KEYS = {"kernel", "binarize", "seed", "weights_blob", "bias_blob"}


def _layer_from_dict(d: dict) -> LayerSpec:
    kind = d.get("kind")
    if kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind {kind!r}; expected one of {', '.join(LAYER_KINDS)}")
    allowed = {"kind"} | _LAYER_KEYS.get(kind, set())
    if kind in _LAYER_KEYS:
        allowed |= _WEIGHT_KEYS
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unexpected keys for {kind} layer: {', '.join(sorted(unknown))}")
    if kind not in _LAYER_KEYS:
        return LayerSpec(kind)
    missing = _LAYER_KEYS[kind] - {"stride", "padding"} - set(d)
    if missing:
        raise ValueError(f"{kind} layer is missing {', '.join(sorted(missing))}")
    kernel = d.get("kernel", "binary")
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {', '.join(KERNELS)}, got {kernel!r}")
    common = dict(kernel=kernel, binarize=bool(d.get("binarize", True)), seed=d.get("seed"),
                  weights_blob=d.get("weights_blob"), bias_blob=d.get("bias_blob"))
    if kind == "conv":
        kh, kw = _pair(d["kernel_size"], "kernel_size")
        sh, sw = _pair(d.get("stride", 1), "stride")
        ph, pw = _pair(d.get("padding", 0), "padding")
        geom = ConvGeometry(int(d["in_channels"]), int(d["out_channels"]), kh, kw, sh, sw, ph, pw)
        return LayerSpec("conv", geometry=geom, **common)
    return LayerSpec("linear", in_features=int(d["in_features"]),
                     out_features=int(d["out_features"]), **common)


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that records the 1-based source line of every mapping."""


def _construct_mapping(loader, node):
    mapping = loader.construct_mapping(node, deep=True)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list with a ``(batch, C, H, W)`` input shape."""

    name: str
    input_shape: tuple[int, int, int, int]
    layers: tuple[LayerSpec, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(n) for n in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.input_shape) != 4 or any(n < 1 for n in self.input_shape):
            raise SpecError(f"input_shape must be 4 positive extents, got {self.input_shape}")

    def layer_shapes(self) -> list[tuple[int, ...]]:
        """Validate the shape chain; return each layer's output shape without batch.

        Tensor activations are ``(C, H, W)``; matrix activations ``(features,)``.
        """
        shape: tuple[int, ...] = self.input_shape[1:]
        shapes = []
        for idx, layer in enumerate(self.layers):
            try:
                shape = _chain(layer, shape)
            except (ShapeError, ValueError) as exc:
                raise SpecError(f"layer {idx} ({layer.kind}): {exc}", layer_index=idx) from None
            shapes.append(shape)
        return shapes

    def validate(self) -> "NetworkSpec":
        self.layer_shapes()
        return self

    def with_kernel(self, kernel: str) -> "NetworkSpec":
        """Copy with every conv/linear layer switched to ``kernel``."""
        if kernel not in KERNELS:
            raise SpecError(f"kernel must be one of {', '.join(KERNELS)}, got {kernel!r}")
        layers = [replace(l, kernel=kernel) if l.has_weights else l for l in self.layers]
        return replace(self, layers=tuple(layers))

    def with_batch(self, batch: int) -> "NetworkSpec":
        return replace(self, input_shape=(batch,) + self.input_shape[1:])

    def param_count(self) -> int:
        total = 0
        shapes = self.layer_shapes()
        prev = (self.input_shape[1],) + tuple(self.input_shape[2:])
        for layer, out in zip(self.layers, shapes):
            if layer.has_weights:
                total += layer.weight_rows * (layer.reduction_length + 1)
            elif layer.kind == "affine_norm":
                total += 2 * prev[0]
            prev = out
        return total

    def weight_memory(self) -> list[dict]:
        """Float vs packed weight bytes for every conv/linear layer."""
        rows = []
        for idx, layer in enumerate(self.layers):
            if not layer.has_weights:
                continue
            D, L = layer.weight_rows, layer.reduction_length
            rows.append({
                "layer": idx,
                "kind": layer.kind,
                "rows": D,
                "reduction_length": L,
                "float_bytes": 4 * D * L,
                "packed_bytes": 4 * D * (-(-L // WORD_BITS)),
            })
        return rows

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "layers": [layer.to_dict() for layer in self.layers],
        }

    def to_yaml(self) -> str:
        lines = [
            f"name: {self.name}",
            f"input_shape: {list(self.input_shape)}",
            f"seed: {self.seed}",
            "layers:",
        ]
        for layer in self.layers:
            flow = yaml.safe_dump(layer.to_dict(), default_flow_style=True, sort_keys=False, width=10**6)
            lines.append(f"  - {flow.strip()}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())

    @classmethod
    def from_dict(cls, d: dict, source: str | None = None) -> "NetworkSpec":
        line = d.get("__line__")
        unknown = set(d) - {"name", "input_shape", "seed", "layers", "__line__"}
        if unknown:
            raise SpecError(f"unexpected top-level keys: {', '.join(sorted(unknown))}", line, source)
        for key in ("input_shape", "layers"):
            if key not in d:
                raise SpecError(f"missing required key {key!r}", line, source)
        if not isinstance(d["layers"], list) or not d["layers"]:
            raise SpecError("layers must be a non-empty list", line, source)
        layers = []
        for idx, entry in enumerate(d["layers"]):
            if not isinstance(entry, dict):
                raise SpecError(f"layer {idx} must be a mapping", line, source)
            entry = dict(entry)
            entry_line = entry.pop("__line__", line)
            try:
                layers.append(_layer_from_dict(entry))
            except (ShapeError, ValueError, TypeError) as exc:
                raise SpecError(f"layer {idx}: {exc}", entry_line, source) from None
        try:
            spec = cls(str(d.get("name", "network")), tuple(d["input_shape"]), tuple(layers),
                       int(d.get("seed", 0)))
        except (SpecError, TypeError, ValueError) as exc:
            raise SpecError(str(exc), line, source) from None
        try:
            spec.layer_shapes()
        except SpecError as exc:
            idx = exc.layer_index
            err_line = d["layers"][idx].get("__line__", line) if idx is not None else line
            raise SpecError(exc.args[0], err_line, source, idx) from None
        return spec

    @classmethod
    def loads(cls, text: str, source: str | None = None) -> "NetworkSpec":
        try:
            data = yaml.load(text, Loader=_LineLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise SpecError(f"cannot parse network spec: {getattr(exc, 'problem', exc)}",
                            mark.line + 1 if mark else None, source) from None
        if not isinstance(data, dict):
            raise SpecError("network spec must be a mapping", 1, source)
        return cls.from_dict(data, source)

    @classmethod
    def load(cls, path) -> "NetworkSpec":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise SpecError(f"cannot read network spec: {exc.strerror}", source=str(path)) from None
        spec = cls.loads(text, source=str(path))
        base = path.parent
        layers = []
        for l in spec.layers:
            blobs = {k: str(base / getattr(l, k)) for k in ("weights_blob", "bias_blob")
                     if getattr(l, k) is not None and not Path(getattr(l, k)).is_absolute()}
            layers.append(replace(l, **blobs) if blobs else l)
        return replace(spec, layers=tuple(layers))


def _chain(layer: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    if layer.kind == "conv":
        if len(shape) != 3:
            raise ShapeError("conv layer needs a (C, H, W) input, got a flattened feature vector")
        if shape[0] != layer.geometry.in_channels:
            raise ShapeError(f"input has {shape[0]} channels, layer expects {layer.geometry.in_channels}")
        if layer.kernel == "binary" and not layer.binarize:
            raise ValueError("the binary kernel requires binarize: true")
        return (layer.geometry.out_channels,) + output_dims(layer.geometry, shape[1], shape[2])
    if layer.kind == "linear":
        features = int(np.prod(shape))
        if features != layer.in_features:
            raise ShapeError(f"input has {features} features, layer expects {layer.in_features}")
        if layer.kernel == "binary" and not layer.binarize:
            raise ValueError("the binary kernel requires binarize: true")
        if layer.out_features < 1 or layer.in_features < 1:
            raise ShapeError("linear extents must be >= 1")
        return (layer.out_features,)
    if layer.kind == "maxpool":
        if len(shape) != 3:
            raise ShapeError("maxpool needs a (C, H, W) input")
        if shape[1] % 2 or shape[2] % 2:
            raise ShapeError(f"maxpool needs even spatial extents, got {shape[1]}x{shape[2]}")
        return (shape[0], shape[1] // 2, shape[2] // 2)
    return shape


# ------------------------------------------------------------ built network

@dataclass
class BuiltLayer:
    spec: LayerSpec
    params: dict = field(default_factory=dict)

    def forward(self, x: np.ndarray, threads: int = 1) -> np.ndarray:
        s = self.spec
        p = self.params
        if s.kind == "conv":
            if s.kernel == "binary":
                return conv_forward_binary(x, p["weights"], p["bias"], s.geometry, threads=threads)
            if s.kernel == "float":
                return conv_forward_float(x, p["weights"], p["bias"], s.geometry,
                                          binarize_input=s.binarize, threads=threads)
            return conv_forward_naive(x, p["weights"], p["bias"], s.geometry, binarize_input=s.binarize)
        if s.kind == "linear":
            if x.ndim == 4:
                x = np.ascontiguousarray(x.reshape(x.shape[0], -1).T)
            return linear_forward(x, p["weights"], p["bias"], s.kernel,
                                  binarize_input=s.binarize, threads=threads)
        if s.kind == "maxpool":
            return maxpool2(x)
        if s.kind == "affine_norm":
            return affine_norm(x, p["scale"], p["shift"])
        if s.kind == "sign_act":
            return sign(x)
        return htanh(x)


@dataclass
class Network:
    spec: NetworkSpec
    layers: list[BuiltLayer]
    threads: int = 1

    def forward(self, x, timings: list[float] | None = None) -> np.ndarray:
        """Run every layer; ``timings[i]`` accumulates layer ``i`` wall-clock seconds."""
        x = check_tensor(x, name="network input")
        if x.shape[1:] != self.spec.input_shape[1:]:
            raise ShapeError(f"input shape {x.shape} does not match network input {self.spec.input_shape}")
        for idx, layer in enumerate(self.layers):
            start = time.perf_counter()
            try:
                x = layer.forward(x, self.threads)
            except ShapeError as exc:
                raise ShapeError(f"layer {idx} ({layer.spec.kind}): {exc}") from exc
            if timings is not None:
                timings[idx] += time.perf_counter() - start
        if x.ndim == 4:
            return x.reshape(x.shape[0], -1)
        return np.ascontiguousarray(x.T)

    def packed_weights(self) -> list[tuple[int, PackedBitMatrix]]:
        return [(i, l.params["weights"]) for i, l in enumerate(self.layers)
                if isinstance(l.params.get("weights"), PackedBitMatrix)]

    def export_packed(self, directory) -> list[Path]:
        """Write every packed weight matrix as a packed blob file."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for idx, packed in self.packed_weights():
            path = directory / f"layer{idx:02d}_{self.layers[idx].spec.kind}.pbm"
            write_packed_blob(path, packed)
            paths.append(path)
        return paths


def _load_or_fill(blob: str | None, shape: tuple[int, ...], seed: int, scale: float = 1.0) -> np.ndarray:
    if blob is None:
        return fill_random(shape, seed) * np.float32(scale)
    values = read_tensor_blob(blob)
    if values.size != int(np.prod(shape)):
        raise ShapeError(f"{blob}: holds {values.size} values, layer needs {shape}")
    return values.reshape(shape)


def build_network(spec: NetworkSpec, threads: int = 1) -> Network:
    """Materialize parameters; weights are binarized/packed here, never per call."""
    shapes = spec.layer_shapes()
    layers = []
    channels = spec.input_shape[1]
    for idx, (layer, out_shape) in enumerate(zip(spec.layers, shapes)):
        lseed = layer.seed if layer.seed is not None else derive_seed(spec.seed, idx)
        params: dict = {}
        if layer.has_weights:
            if layer.kind == "conv":
                g = layer.geometry
                wshape = (g.out_channels, g.in_channels, g.kh, g.kw)
            else:
                wshape = (layer.out_features, layer.in_features)
            w = _load_or_fill(layer.weights_blob, wshape, derive_seed(lseed, 0))
            if layer.binarize:
                w = sign(w)
            w_flat = np.ascontiguousarray(w.reshape(wshape[0], -1))
            if layer.kernel == "binary":
                params["weights"] = pack_rows(w_flat)
            elif layer.kernel == "naive" and layer.kind == "conv":
                params["weights"] = np.ascontiguousarray(w)
            else:
                params["weights"] = w_flat
            params["bias"] = _load_or_fill(layer.bias_blob, (wshape[0],), derive_seed(lseed, 1), 0.1)
        elif layer.kind == "affine_norm":
            params["scale"] = 1.0 + 0.5 * fill_random((channels,), derive_seed(lseed, 2))
            params["shift"] = 0.1 * fill_random((channels,), derive_seed(lseed, 3))
        layers.append(BuiltLayer(layer, params))
        channels = out_shape[0]
    return Network(spec, layers, threads)


def network_forward(net: Network, x, timings: list[float] | None = None) -> np.ndarray:
    """Logits as a ``(batch, classes)`` matrix."""
    return net.forward(x, timings)


def _conv(cin, cout, kernel, k=3, pad=1) -> LayerSpec:
    return LayerSpec("conv", ConvGeometry.square(cin, cout, k, 1, pad), kernel=kernel)


def _post(pool: bool = False, last: bool = False) -> list[LayerSpec]:
    layers = [LayerSpec("maxpool")] if pool else []
    layers.append(LayerSpec("affine_norm"))
    if not last:
        layers += [LayerSpec("htanh_act"), LayerSpec("sign_act")]
    return layers


def build_default_network(kernel: str = "binary", seed: int = 0) -> NetworkSpec:
    """The CIFAR-10 BNN stack: 2x128C3, MP2, 2x256C3, MP2, 2x512C3, MP2, 2x1024FC, 10FC."""
    if kernel not in KERNELS:
        raise SpecError(f"kernel must be one of {', '.join(KERNELS)}, got {kernel!r}")
    layers: list[LayerSpec] = []
    cin = 3
    for cout in (128, 256, 512):
        layers += [_conv(cin, cout, kernel)] + _post()
        layers += [_conv(cout, cout, kernel)] + _post(pool=True)
        cin = cout
    features = 512 * 4 * 4
    for out, last in ((1024, False), (1024, False), (10, True)):
        layers += [LayerSpec("linear", in_features=features, out_features=out, kernel=kernel)]
        layers += _post(last=last)
        features = out
    return NetworkSpec("bnn-cifar10", (1, 3, 32, 32), tuple(layers), seed).validate()
