"""Command line front end: finetune and generate.

Exit codes mirror the dataset CLI: 0 success, 2 configuration problems,
3 missing or unreadable files.
"""

from __future__ import annotations

import argparse
import sys

from .config import HarnessConfig
from .generate import generate
from .train import finetune
from .manifest import ManifestSchemaMismatch
from .model import MissingCheckpoint, ModelLoadFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest JSONL")
    p.add_argument("--out-dir", default="harness_run")
    p.add_argument("--model", default="tiny-vlm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--max-new-tokens", type=int, default=1024)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wattscope-harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="train the decoder on a manifest's train split")
    _add_common(p)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--micro-batch", type=int, default=6)
    p.add_argument("--accumulation", type=int, default=8)
    p.add_argument("--eta-max", type=float, default=1e-4)
    p.add_argument("--eta-min", type=float, default=0.0)
    p.add_argument("--t-warm", type=int, default=50)
    p.add_argument("--t-max", type=int, default=800)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--log-every", type=int, default=10)

    p = sub.add_parser("generate", help="decode the val split from a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    return parser


def _config(args) -> HarnessConfig:
    fields = dict(
        manifest=args.manifest,
        model=args.model,
        out_dir=args.out_dir,
        seed=args.seed,
        beam_width=args.beam_width,
        max_new_tokens=args.max_new_tokens,
    )
    if args.command == "finetune":
        fields.update(
            steps=args.steps,
            micro_batch=args.micro_batch,
            accumulation=args.accumulation,
            eta_max=args.eta_max,
            eta_min=args.eta_min,
            t_warm=args.t_warm,
            t_max=args.t_max,
            weight_decay=args.weight_decay,
            log_every=args.log_every,
        )
    return HarnessConfig(**fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "finetune":
            result = finetune(cfg)
            print(f"wrote {result.checkpoint_path} and {result.loss_log_path}")
        else:
            result = generate(cfg, args.checkpoint)
            print(f"wrote {result.count} generations -> {result.generations_path}")
    except (ManifestSchemaMismatch, ModelLoadFailure, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        name = exc.filename if getattr(exc, "filename", None) else exc
        print(f"error: missing file: {name}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
