"""Command-line entry point: ``bnnkernel bench|verify|pack|spec``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .bench import BenchConfig, ConfigError, emit_report, run_benchmark, run_verify
from .network import KERNELS, SpecError, build_default_network, build_network
from .tensor_core import ShapeError

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _common(p: argparse.ArgumentParser, batch: int) -> None:
    p.add_argument("--spec", metavar="PATH", help="network spec YAML (default: shipped BNN CIFAR-10 spec)")
    p.add_argument("--batch", type=int, default=batch, metavar="N")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.add_argument("--seed", type=_u64, default=0, metavar="U64")
    p.add_argument("--input", metavar="PATH", help="tensor blob to use instead of random inputs")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnnkernel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="time binary vs float control-group inference")
    _common(bench, batch=64)
    bench.add_argument("--kernel", action="append", choices=KERNELS,
                       help="kernel to time; repeat for several (default: binary and float)")
    bench.add_argument("--iters", type=int, default=20, metavar="N")
    bench.add_argument("--warmup", type=int, default=3, metavar="N")
    bench.add_argument("--out", metavar="PATH", help="write the JSON report here")
    bench.add_argument("--no-layer-timing", action="store_true", help="skip the per-layer breakdown")

    verify = sub.add_parser("verify", help="check binary and float kernels give the same logits")
    _common(verify, batch=8)
    verify.add_argument("--out", metavar="PATH", help="write the JSON summary here")
    verify.add_argument("--no-inject", action="store_true",
                        help="do not prepend the odd-length (pad correction) conv layer")
    verify.add_argument("--corrupt-weights", action="store_true", help=argparse.SUPPRESS)

    pack = sub.add_parser("pack", help="export the packed binary weights as blob files")
    pack.add_argument("--spec", metavar="PATH")
    pack.add_argument("--seed", type=_u64, default=None, metavar="U64",
                      help="override the spec's parameter seed")
    pack.add_argument("--out", metavar="DIR", required=True)

    spec = sub.add_parser("spec", help="print the default network spec")
    spec.add_argument("--kernel", choices=KERNELS, default="binary")
    spec.add_argument("--seed", type=_u64, default=0, metavar="U64")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "spec":
            sys.stdout.write(build_default_network(args.kernel, args.seed).to_yaml())
            return EXIT_OK
        if args.command == "pack":
            cfg = BenchConfig(spec_path=args.spec)
            spec = cfg.load_spec().with_kernel("binary")
            if args.seed is not None:
                spec = replace(spec, seed=args.seed)
            for path in build_network(spec).export_packed(args.out):
                print(path)
            return EXIT_OK
        common = dict(spec_path=args.spec, batch=args.batch, threads=args.threads,
                      seed=args.seed, input_path=args.input)
        if args.command == "verify":
            summary = run_verify(BenchConfig(**common), inject=not args.no_inject,
                                 corrupt=args.corrupt_weights)
            if args.out:
                with open(args.out, "w") as fh:
                    json.dump(summary.to_dict(), fh, indent=2)
            status = "PASS" if summary.passed else "FAIL"
            print(f"verify: {status} max |logit diff| {summary.max_abs_deviation:.3g} "
                  f"(tol {summary.tolerance:g}, batch {summary.batch}, odd-length layers {summary.odd_layers})")
            return EXIT_OK if summary.passed else EXIT_VERIFY_FAILED
        cfg = BenchConfig(kernels=tuple(args.kernel or ("binary", "float")), iterations=args.iters,
                          warmup=args.warmup, output_path=args.out,
                          layer_timing=not args.no_layer_timing, **common)
        report = run_benchmark(cfg)
        emit_report(report, cfg.output_path)
        return EXIT_OK if report.passed else EXIT_VERIFY_FAILED
    except (ConfigError, SpecError, ShapeError) as exc:
        print(f"bnnkernel: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"bnnkernel: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
