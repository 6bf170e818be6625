"""Benchmark and verification harness: binary kernel vs float control group.

Weights are binarized and packed when the network is built, outside the
timed region. Each timed iteration runs the whole forward graph on one batch
of deterministic CIFAR-10-shaped inputs, including im2col, sign, input
packing, the GEMM, bias and reshape.
"""
from __future__ import annotations

import hashlib
import json
import platform
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numba
import numpy as np

from .network import (
    DEFAULT_SPEC_PATH,
    KERNELS,
    LayerSpec,
    Network,
    NetworkSpec,
    build_network,
    network_forward,
)
from .tensor_core import ConvGeometry, PackedBitMatrix, fill_random, read_tensor_blob

VERIFY_TOLERANCE = 1e-4


class ConfigError(ValueError):
    """Invalid benchmark configuration."""


@dataclass
class BenchConfig:
    spec_path: str | None = None
    kernels: tuple[str, ...] = ("binary", "float")
    batch: int = 64
    iterations: int = 20
    warmup: int = 3
    threads: int = 1
    seed: int = 0
    output_path: str | None = None
    layer_timing: bool = True
    input_path: str | None = None

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        if not self.kernels:
            raise ConfigError("at least one kernel is required")
        for k in self.kernels:
            if k not in KERNELS:
                raise ConfigError(f"unknown kernel {k!r}; expected one of {', '.join(KERNELS)}")
        if len(set(self.kernels)) != len(self.kernels):
            raise ConfigError(f"duplicate kernels in {self.kernels}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0, got {self.warmup}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.threads > numba.config.NUMBA_NUM_THREADS:
            raise ConfigError(
                f"threads={self.threads} exceeds the {numba.config.NUMBA_NUM_THREADS} numba threads available"
            )
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def load_spec(self) -> NetworkSpec:
        path = self.spec_path or DEFAULT_SPEC_PATH
        return NetworkSpec.load(path)

    def make_input(self, spec: NetworkSpec) -> np.ndarray:
        if self.input_path is not None:
            try:
                x = read_tensor_blob(self.input_path)
            except OSError as exc:
                raise ConfigError(f"cannot read input blob {self.input_path}: {exc.strerror}") from None
            if x.shape[1:] != spec.input_shape[1:]:
                raise ConfigError(f"input blob shape {x.shape} does not match network input {spec.input_shape}")
            return x
        return fill_random((self.batch,) + spec.input_shape[1:], self.seed)


@dataclass
class KernelResult:
    kernel: str
    samples: list[float]
    median: float
    min: float
    mean: float
    layer_seconds: list[dict] = field(default_factory=list)
    logits_sha256: str = ""

    @classmethod
    def from_samples(cls, kernel: str, samples: list[float], **kw) -> "KernelResult":
        return cls(kernel, list(samples), statistics.median(samples), min(samples),
                   statistics.fmean(samples), **kw)


@dataclass
class BenchReport:
    config: dict
    environment: dict
    results: dict[str, KernelResult]
    weight_memory: dict
    speedup: dict[str, float] = field(default_factory=dict)
    verification: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verification.get("passed", True)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        results = {k: KernelResult(**v) for k, v in d["results"].items()}
        return cls(d["config"], d["environment"], results, d["weight_memory"],
                   d.get("speedup", {}), d.get("verification", {}))

    @classmethod
    def load(cls, path) -> "BenchReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def environment() -> dict:
    clock = time.get_clock_info("perf_counter")
    cpu = platform.processor()
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.startswith("model name"):
                cpu = line.split(":", 1)[1].strip()
                break
    except OSError:
        pass
    return {
        "platform": platform.platform(),
        "cpu": cpu,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba.__version__,
        "numba_threads_available": numba.config.NUMBA_NUM_THREADS,
        "timer": clock.implementation,
        "timer_monotonic": clock.monotonic,
        "timer_resolution_s": clock.resolution,
    }


def weight_memory(spec: NetworkSpec) -> dict:
    layers = spec.weight_memory()
    packed = sum(r["packed_bytes"] for r in layers)
    dense = sum(r["float_bytes"] for r in layers)
    return {"layers": layers, "packed_bytes": packed, "float_bytes": dense, "ratio": packed / dense}


def logits_digest(logits: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(logits, dtype="<f4").tobytes()).hexdigest()


def time_network(net: Network, x: np.ndarray, iterations: int, warmup: int,
                 layer_timing: bool = True) -> tuple[KernelResult, np.ndarray]:
    for _ in range(warmup):
        network_forward(net, x)
    n_layers = len(net.layers)
    totals = [0.0] * n_layers if layer_timing else None
    samples = []
    logits = None
    for _ in range(iterations):
        start = time.perf_counter()
        logits = network_forward(net, x, totals)
        samples.append(time.perf_counter() - start)
    layer_seconds = []
    if layer_timing:
        layer_seconds = [
            {"layer": i, "kind": net.layers[i].spec.kind, "seconds": totals[i] / iterations}
            for i in range(n_layers)
        ]
    kernel = next((l.spec.kernel for l in net.layers if l.spec.has_weights), "none")
    result = KernelResult.from_samples(kernel, samples, layer_seconds=layer_seconds,
                                       logits_sha256=logits_digest(logits))
    return result, logits


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    """Time every configured kernel on the same input, batch and thread count."""
    spec = cfg.load_spec()
    x = cfg.make_input(spec)
    results: dict[str, KernelResult] = {}
    logits: dict[str, np.ndarray] = {}
    for kernel in cfg.kernels:
        net = build_network(spec.with_kernel(kernel), threads=cfg.threads)
        results[kernel], logits[kernel] = time_network(net, x, cfg.iterations, cfg.warmup, cfg.layer_timing)
    speedup = {}
    if "binary" in results:
        for other in ("float", "naive"):
            if other in results:
                speedup[f"{other}/binary"] = results[other].median / results["binary"].median
    verification = {}
    if "binary" in logits and len(logits) > 1:
        worst = max(float(np.max(np.abs(logits[k] - logits["binary"]))) for k in logits if k != "binary")
        verification = {"max_abs_deviation": worst, "tolerance": VERIFY_TOLERANCE,
                        "passed": worst <= VERIFY_TOLERANCE}
    config = asdict(cfg)
    config["kernels"] = list(cfg.kernels)
    config["batch"] = int(x.shape[0])
    config["network"] = spec.name
    return BenchReport(config, environment(), results, weight_memory(spec), speedup, verification)


@dataclass
class VerifySummary:
    passed: bool
    max_abs_deviation: float
    tolerance: float
    batch: int
    odd_layers: list[int]
    corrupted: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def inject_odd_layer(spec: NetworkSpec) -> NetworkSpec:
    """Prepend a 5x5 conv (L = 25*C, not a multiple of 32 for C=3) that keeps the shape chain."""
    c = spec.input_shape[1]
    layer = LayerSpec("conv", ConvGeometry.square(c, c, 5, 1, 2))
    return replace(spec, layers=(layer, LayerSpec("htanh_act")) + spec.layers).validate()


def corrupt_packed_weights(net: Network) -> None:
    """Test hook: flip bit 0 of the first word of the last packed weight matrix."""
    idx, packed = net.packed_weights()[-1]
    words = packed.words.copy()
    words[0, 0] ^= np.uint32(1)
    net.layers[idx].params["weights"] = PackedBitMatrix(packed.logical_rows, packed.logical_cols,
                                                        packed.orientation, words)


def run_verify(cfg: BenchConfig, inject: bool = True, corrupt: bool = False) -> VerifySummary:
    """Binary vs float-kernel logits on the same ±1 parameters and input."""
    spec = cfg.load_spec()
    if inject:
        spec = inject_odd_layer(spec)
    x = cfg.make_input(spec)
    binary = build_network(spec.with_kernel("binary"), threads=cfg.threads)
    control = build_network(spec.with_kernel("float"), threads=cfg.threads)
    if corrupt:
        corrupt_packed_weights(binary)
    deviation = float(np.max(np.abs(network_forward(binary, x) - network_forward(control, x))))
    odd = [r["layer"] for r in spec.weight_memory() if r["reduction_length"] % 32]
    return VerifySummary(bool(deviation <= VERIFY_TOLERANCE), deviation, VERIFY_TOLERANCE,
                         int(x.shape[0]), odd, corrupt)


def format_table(r: BenchReport) -> str:
    rows = [f"{'kernel':<10} {'median s/batch':>15} {'min':>10} {'mean':>10} {'est. 10k images':>16} {'speedup':>8}"]
    batch = r.config.get("batch", 1)
    base = r.results.get("binary")
    for name, res in r.results.items():
        est = res.median / batch * 10_000
        ratio = f"{res.median / base.median:.2f}x" if base is not None else "-"
        rows.append(f"{name:<10} {res.median:>15.4f} {res.min:>10.4f} {res.mean:>10.4f} {est:>15.1f}s {ratio:>8}")
    wm = r.weight_memory
    rows.append(
        f"{'weights':<10} packed {wm['packed_bytes'] / 2**20:.2f} MiB / float {wm['float_bytes'] / 2**20:.2f} MiB"
        f" (ratio 1/{1 / wm['ratio']:.1f})"
    )
    for key, value in r.speedup.items():
        rows.append(f"speedup {key}: {value:.2f}x")
    if r.verification:
        v = r.verification
        rows.append(f"verification: {'PASS' if v['passed'] else 'FAIL'} "
                    f"(max |logit diff| {v['max_abs_deviation']:.3g}, tol {v['tolerance']:g})")
    return "\n".join(rows)


def emit_report(r: BenchReport, path=None, stream=None) -> str:
    """Write the JSON report (if ``path``) and print the results table."""
    if path is not None:
        Path(path).write_text(json.dumps(r.to_dict(), indent=2) + "\n")
    table = format_table(r)
    print(table, file=stream or sys.stdout)
    return table

