"""Command-line pipeline: CSV in, images, manifests and reports out.

Exit codes: 0 success, 2 configuration or validation problem, 3 I/O
problem. Settings come from an optional TOML file overridden by flags,
and every run directory gets an exact echo of the resolved config.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import dataset, fixtures, ingest, metrics, recurrence, render, trainmath, wavelet

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


@dataclass
class RunConfig:
    """Everything a run needs, serializable as the run's config echo."""

    sample_period: float = ingest.DEFAULT_SAMPLE_PERIOD
    max_gap: float = ingest.DEFAULT_MAX_GAP
    window_length: float = ingest.DEFAULT_WINDOW_LENGTH
    stride: float = 0.0  # 0 means non-overlapping (stride = window_length)
    kinds: list = field(default_factory=lambda: ["cwt", "rp"])
    scale_count: int = 64
    omega0: float = 6.0
    target_rate: float = recurrence.DEFAULT_TARGET_RATE
    embedding_dimension: int = 1
    embedding_delay: int = 1
    width: int = 512
    height: int = 512
    mode: str = "heatmap"
    colormap: str = "viridis"
    value_scale: str = "linear"
    split_seed: int = 0
    train_fraction: float = dataset.TRAIN_FRACTION_DEFAULT
    caps: dict = field(default_factory=dict)


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    path = getattr(args, "config", None)
    if path:
        with open(path, "rb") as f:
            table = tomllib.load(f)
        names = {f.name for f in fields(RunConfig)}
        for key, value in table.items():
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    if isinstance(cfg.kinds, str):
        cfg.kinds = [k for k in cfg.kinds.split(",") if k]
    for kind in cfg.kinds:
        if kind not in ("cwt", "rp"):
            raise ValueError(f"unknown encoding kind {kind!r}")
    return cfg


def _render_config(cfg: RunConfig) -> render.RenderConfig:
    return render.RenderConfig(
        width=cfg.width,
        height=cfg.height,
        mode=cfg.mode,
        colormap=cfg.colormap,
        value_scale=cfg.value_scale,
    )


def _window_images(channel: str, token: str, w, sample_period: float, cfg: RunConfig):
    """Render the requested encodings of one normalized window."""
    out = {}
    rcfg = _render_config(cfg)
    prov = render.Provenance(channel, token)
    if "cwt" in cfg.kinds:
        grid = wavelet.ScaleGrid.default_for_window(len(w.samples), cfg.scale_count)
        sg = wavelet.cwt(
            w,
            grid,
            wavelet.MorletParams(omega0=cfg.omega0),
            method="fft",
            sample_rate=1.0 / sample_period,
        )
        out["cwt"] = render.render(sg.power, rcfg, "cwt", prov)
    if "rp" in cfg.kinds:
        spec = recurrence.EmbeddingSpec(cfg.embedding_dimension, cfg.embedding_delay)
        states = recurrence.embed(w, spec)
        rm = recurrence.recurrence_matrix(
            states, recurrence.ThresholdPolicy.at_rate(cfg.target_rate), spec
        )
        out["rp"] = render.render(rm.bits.astype(float), rcfg, "rp", prov)
    return out


def cmd_convert(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    with open(args.input, "rb") as f:
        channels = ingest.parse_csv(f, ingest.ColumnSpec(sample_period=cfg.sample_period))
    entries = []
    n_images = 0
    for ts in sorted(channels, key=lambda t: t.channel_id):
        ts = ingest.fill_gaps(ts, cfg.max_gap)
        stride = cfg.stride if cfg.stride > 0 else None
        windows = ingest.make_windows(ts, cfg.window_length, stride)
        for w in windows:
            w = ingest.normalize_minmax(w)
            start_epoch = ts.time_at(w.start_index).timestamp()
            token = dataset.window_start_token(start_epoch)
            end_epoch = ts.time_at(w.start_index + len(w.samples) - 1).timestamp()
            paths = {}
            images = _window_images(ts.channel_id, token, w, ts.sample_period, cfg)
            for kind, img in images.items():
                name = f"{ts.channel_id}_{token}_{kind}.png"
                (images_dir / name).write_bytes(render.encode_png(img))
                paths[kind] = f"images/{name}"
                n_images += 1
            entries.append(
                {
                    "channel": ts.channel_id,
                    "window_start": token,
                    "start_epoch": start_epoch,
                    "samples": len(w.samples),
                    "start_date": dataset.date_of(start_epoch),
                    "end_date": dataset.date_of(end_epoch),
                    "images": paths,
                }
            )
    entries.sort(key=lambda e: (e["channel"], e["window_start"]))
    with open(out_dir / "windows.jsonl", "w", encoding="utf-8") as f:
        for e in entries:
            f.write(json.dumps(e, ensure_ascii=False, separators=(",", ":")) + "\n")
    (out_dir / "config.json").write_text(
        json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"{n_images} images from {len(entries)} windows -> {out_dir}")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    cfg = _load_config(args)
    run_dir = Path(args.run_dir)
    windows_path = run_dir / "windows.jsonl"
    if not windows_path.is_file():
        raise FileNotFoundError(str(windows_path))
    images = []
    with open(windows_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            e = json.loads(line)
            for kind, rel in sorted(e["images"].items()):
                meta = dataset.WindowMeta(e["channel"], e["window_start"], kind)
                images.append((rel, meta, e["start_date"], e["end_date"]))
    answers = dataset.load_answers(args.answers)
    types = None
    if args.types:
        types = [dataset.AnalysisType(t) for t in args.types.split(",") if t]
    records = dataset.build_records(images, answers, analysis_types=types, caps=cfg.caps)
    manifest = dataset.split_dataset(records, cfg.split_seed, cfg.train_fraction)
    out_path = Path(args.out) if args.out else run_dir / "manifest.jsonl"
    dataset.emit_manifest(manifest, out_path)
    print(f"{manifest.counts['train']} train / {manifest.counts['val']} val")
    return EXIT_OK


def _format_report(report: dict) -> str:
    rows = [("task", "count", "rouge_l", "bleu", "ppl")]

    def fmt(name, block):
        ppl = f"{block['ppl']:.4f}" if "ppl" in block else "-"
        return (name, str(block["count"]), f"{block['rouge_l']:.4f}",
                f"{block['bleu']:.4f}", ppl)

    rows.append(fmt("overall", report["overall"]))
    for task, block in report["per_task"].items():
        rows.append(fmt(task, block))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    )


def cmd_eval(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    generations = metrics.load_generations(args.generations)
    report = metrics.evaluate_manifest(manifest, generations)
    out_path = Path(args.out) if args.out else Path(args.manifest).parent / "report.json"
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(_format_report(report))
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = trainmath.ScheduleConfig(
        eta_max=args.eta_max, eta_min=args.eta_min, t_warm=args.t_warm, t_max=args.t_max
    )
    trainmath.write_schedule_csv(args.out, cfg)
    print(f"wrote steps 0..{cfg.t_max} -> {args.out}")
    return EXIT_OK


def _parse_anomaly(text: str) -> fixtures.AnomalySpec:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"anomaly must be kind:start:duration[:magnitude], got {text!r}")
    magnitude = float(parts[3]) if len(parts) == 4 else 0.0
    return fixtures.AnomalySpec(parts[0], int(parts[1]), int(parts[2]), magnitude)


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = fixtures.SyntheticSpec(
        archetype=args.archetype,
        days=args.days,
        sample_period=cfg.sample_period,
        noise_level=args.noise_level,
        anomalies=tuple(_parse_anomaly(a) for a in args.anomaly or ()),
        seed=args.seed,
    )
    ts, truth = fixtures.generate(spec)
    fixtures.write_csv(ts, out_dir / f"{spec.channel}.csv")
    fixtures.write_ground_truth(spec, truth, out_dir / "ground_truth.jsonl")
    windows = ingest.make_windows(ts, cfg.window_length,
                                  cfg.stride if cfg.stride > 0 else None)
    answers = fixtures.synthesize_answers(ts, windows, truth, kinds=tuple(cfg.kinds))
    fixtures.write_answers(answers, out_dir / "answers.jsonl")
    print(
        f"{spec.channel}: {spec.n_samples} samples, {len(truth)} anomalies, "
        f"{len(answers)} answers -> {out_dir}"
    )
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--sample-period", dest="sample_period", type=float)
    p.add_argument("--max-gap", dest="max_gap", type=float)
    p.add_argument("--window-length", dest="window_length", type=float)
    p.add_argument("--stride", type=float)
    p.add_argument("--kinds", help="comma list out of: cwt,rp")
    p.add_argument("--scale-count", dest="scale_count", type=int)
    p.add_argument("--omega0", type=float)
    p.add_argument("--target-rate", dest="target_rate", type=float)
    p.add_argument("--embedding-dimension", dest="embedding_dimension", type=int)
    p.add_argument("--embedding-delay", dest="embedding_delay", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--mode", choices=("heatmap", "surface3d"))
    p.add_argument("--colormap")
    p.add_argument("--value-scale", dest="value_scale", choices=("linear", "log"))
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wattscope",
        description="Turn energy time series into scalogram/recurrence images, "
        "datasets, and metric reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="CSV -> per-window PNGs + sidecar metadata")
    p.add_argument("input", help="input CSV")
    p.add_argument("out_dir", help="run directory to create")
    _add_config_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("build-dataset", help="rendered run + answers -> manifest JSONL")
    p.add_argument("run_dir", help="directory produced by convert")
    p.add_argument("answers", help="answers JSONL of {id, answer}")
    p.add_argument("--types", help="comma list of analysis types to include")
    p.add_argument("--out", help="manifest path (default run_dir/manifest.jsonl)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("eval", help="manifest + generations -> metric report")
    p.add_argument("manifest")
    p.add_argument("generations")
    p.add_argument("--out", help="report path (default alongside manifest)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("schedule", help="dump the learning-rate schedule as CSV")
    p.add_argument("out", help="CSV path")
    p.add_argument("--eta-max", dest="eta_max", type=float, default=1e-4)
    p.add_argument("--eta-min", dest="eta_min", type=float, default=0.0)
    p.add_argument("--t-warm", dest="t_warm", type=int, default=50)
    p.add_argument("--t-max", dest="t_max", type=int, default=800)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("synth", help="generate a synthetic fixture corpus")
    p.add_argument("out_dir")
    p.add_argument("--archetype", choices=fixtures.ARCHETYPES, default="fridge")
    p.add_argument("--days", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-level", dest="noise_level", type=float, default=0.005)
    p.add_argument(
        "--anomaly",
        action="append",
        help="kind:start:duration[:magnitude], repeatable",
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: missing file: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
