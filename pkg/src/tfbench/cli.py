"""Command-line entry point: ``tfbench <subcommand> ...``.

Settings come from a JSON PipelineConfig file (``--config`` or the
``TFBENCH_CONFIG`` environment variable); explicit flags override it.
Exit status is 0 on success, 1 when the pipeline fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from tfbench import cnn
from tfbench.bench import bench_report, time_transform, write_report
from tfbench.cwt import CwtConfig
from tfbench.dataset import (
    FAMILIES,
    DatasetManifest,
    LabeledExample,
    generate_synthetic_dataset,
    load_example_signal,
    split,
)
from tfbench.demo import DemoConfig, run_demo
from tfbench.metrics import FAMILY_TO_MACHINE, paper_reference, write_comparison_csv
from tfbench.pipeline import ARMS, PipelineConfig, build_images, evaluate, transform
from tfbench.render import read_tfm, render, save_png, write_tfm
from tfbench.seeds import derive_seed, make_rng
from tfbench.signal import AudioSignal, SynthSpec, WavError, load_wav, peak_normalize, save_wav, synthesize
from tfbench.stft import StftConfig

CONFIG_ENV = "TFBENCH_CONFIG"
BENCH_SIGNAL_LENGTH = 160_000

log = logging.getLogger("tfbench")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_config(args) -> PipelineConfig:
    """Config file (flag, then environment), then flag overrides."""
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    cfg = PipelineConfig.load(path) if path else PipelineConfig()

    stft_kw = {k: v for k, v in (("frame_size_n", getattr(args, "n", None)), ("hop_size_h", getattr(args, "hop", None)), ("window", getattr(args, "window", None))) if v is not None}
    if stft_kw:
        if "frame_size_n" in stft_kw and "hop_size_h" not in stft_kw:
            stft_kw["hop_size_h"] = None
        cfg.stft = StftConfig(**{**asdict(cfg.stft), **stft_kw})
    cwt_kw = {
        k: v
        for k, v in (
            ("scale_min", getattr(args, "scale_min", None)),
            ("scale_max", getattr(args, "scale_max", None)),
            ("translation_step", getattr(args, "step", None)),
            ("omega0", getattr(args, "omega0", None)),
        )
        if v is not None
    }
    if cwt_kw:
        cfg.cwt = CwtConfig(**{**asdict(cfg.cwt), **cwt_kw})
    render_kw = {k: v for k, v in (("width", getattr(args, "width", None)), ("height", getattr(args, "height", None)), ("floor_db", getattr(args, "floor_db", None))) if v is not None}
    if render_kw:
        cfg.render = replace(cfg.render, **render_kw)
    train_kw = {k: v for k, v in (("epochs", getattr(args, "epochs", None)), ("learning_rate", getattr(args, "lr", None)), ("batch_size", getattr(args, "batch_size", None))) if v is not None}
    if train_kw:
        cfg.train = replace(cfg.train, **train_kw)
    for key in ("runs", "seed", "val_fraction"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg


# subcommands ----------------------------------------------------------------


def cmd_normalize(args) -> int:
    save_wav(args.output, peak_normalize(load_wav(args.input)))
    return 0


def cmd_transform(args) -> int:
    cfg = load_config(args)
    sig = load_wav(args.input)
    m = transform(sig, args.kind, cfg)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(f".{args.kind}.tfm")
    write_tfm(out, m)
    print(f"{out}: {m.values.shape[0]}x{m.values.shape[1]} {m.kind}")
    return 0


def cmd_render(args) -> int:
    cfg = load_config(args)
    m = read_tfm(args.input)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".png")
    save_png(out, render(m, cfg.render))
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        spec = SynthSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
        if not args.out:
            raise ValueError("--out is required with --spec")
        save_wav(args.out, synthesize(spec, args.fs))
        return 0
    if not (args.family and args.out_dir):
        raise ValueError("either --spec or both --family and --out-dir are required")
    seed = args.seed if args.seed is not None else 0
    manifest = generate_synthetic_dataset(args.n_per_class, args.family, args.snr, seed, args.duration, args.fs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.write_wav:
        examples = []
        for i, ex in enumerate(manifest.examples):
            wav = out / ex.label / f"{i:05d}.wav"
            wav.parent.mkdir(exist_ok=True)
            save_wav(wav, load_example_signal(ex))
            examples.append(LabeledExample(wav.as_posix(), ex.label, ex.machine_type, ex.snr_db))
        manifest = DatasetManifest(examples, manifest.split_seed, manifest.val_fraction, manifest.meta)
    manifest.save(out / "manifest.jsonl")
    print(f"{out / 'manifest.jsonl'}: {len(manifest)} examples")
    return 0


def cmd_split(args) -> int:
    m = DatasetManifest.load(args.manifest)
    if args.seed is not None:
        m.split_seed = args.seed
    if args.val_fraction is not None:
        m.val_fraction = args.val_fraction
    train_m, val_m = split(m)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_m.save(out / "train.jsonl")
    val_m.save(out / "val.jsonl")
    print(f"train {len(train_m)}, val {len(val_m)}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args)
    train_m = DatasetManifest.load(args.manifest)
    images = build_images(train_m, args.arm, cfg, args.jobs)
    val_images = val_labels = None
    if args.val_manifest:
        val_m = DatasetManifest.load(args.val_manifest)
        val_images, val_labels = build_images(val_m, args.arm, cfg, args.jobs), val_m.labels()
    model = cnn.build_model(cfg.model_config(), derive_seed(cfg.seed, "init"))
    tcfg = replace(cfg.train, seed=derive_seed(cfg.seed, "train"))
    model, report = cnn.train(model, images, train_m.labels(), tcfg, val_images, val_labels)
    if report.diverged:
        raise FloatingPointError(f"training diverged: {report.message}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cnn.save_model(out, model)
    out.with_name(out.name + ".report.json").write_text(report.to_json(), encoding="utf-8")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args)
    manifest = DatasetManifest.load(args.manifest)
    out = Path(args.out_dir) if args.out_dir else None
    summary, _ = evaluate(manifest, args.arm, cfg, out_dir=out, jobs=args.jobs)
    if out is not None:
        (out / f"{args.arm}_summary.json").write_text(summary.to_json(), encoding="utf-8")
    print(summary.to_json(), end="")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args)
    if args.signal:
        sig = load_wav(args.signal)
    else:
        # pinned workload: 10 s of seeded white noise at 16 kHz
        sig = AudioSignal(make_rng(derive_seed(cfg.seed, "bench")).standard_normal(BENCH_SIGNAL_LENGTH), 16000)
    kinds = ARMS if args.kind == "both" else (args.kind,)
    results = []
    for kind in kinds:
        conf = cfg.stft if kind == "spectrogram" else cfg.cwt
        results.append(time_transform(kind, sig, conf, repeats=args.repeats))
        log.info("%s: median %.4f s", kind, results[-1].median_s)
    report = bench_report(results)
    if args.out:
        write_report(args.out, report)
    print(json.dumps({r["label"]: r["median_s"] for r in report["rows"]}, sort_keys=True))
    return 0


def cmd_demo(args) -> int:
    cfg = DemoConfig()
    if args.omega0 is not None:
        cfg.cwt = CwtConfig(omega0=args.omega0)
    verdict = run_demo(cfg, args.out)
    print(json.dumps({"pass": verdict["pass"], "checks": verdict["checks"]}, indent=2, sort_keys=True))
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        manifest = DatasetManifest.load(args.manifest)
        family = manifest.meta.get("family", manifest.examples[0].machine_type)
        snr = manifest.examples[0].snr_db
    else:
        family, snr = args.family, args.snr
        manifest = generate_synthetic_dataset(args.n_per_class, family, snr, derive_seed(cfg.seed, "dataset"), args.duration)
    manifest.save(out / "manifest.jsonl")
    _write_json(out / "config.json", cfg.to_dict())
    rows = []
    for arm in ARMS:
        summary, _ = evaluate(manifest, arm, cfg, out_dir=out / arm, jobs=args.jobs)
        (out / arm / "summary.json").write_text(summary.to_json(), encoding="utf-8")
        rows.append(
            {
                "config": arm,
                "machine_or_family": family,
                "snr_db": snr,
                "mean_auc": summary.mean_auc,
                "paper_reference_auc": paper_reference(arm, FAMILY_TO_MACHINE.get(family, family)),
            }
        )
        log.info("%s on %s: mean AUC %.4f", arm, family, summary.mean_auc)
    write_comparison_csv(out / "comparison.csv", rows)
    print((out / "comparison.csv").read_text(encoding="utf-8"), end="")
    return 0


# parser -----------------------------------------------------------------------


def _add_stft_flags(p):
    p.add_argument("--n", type=int, help="STFT frame size N")
    p.add_argument("--hop", type=int, help="STFT hop size H (default N/2)")
    p.add_argument("--window", choices=("hann", "rectangular"))


def _add_cwt_flags(p):
    p.add_argument("--scale-min", type=int)
    p.add_argument("--scale-max", type=int)
    p.add_argument("--step", type=int, help="CWT translation step in samples")
    p.add_argument("--omega0", type=float)


def _add_render_flags(p):
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--floor-db", type=float)


def _add_train_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for transform/render")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfbench", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help=f"PipelineConfig JSON (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="peak-normalize a WAV file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("transform", help="WAV -> energy matrix (.tfm + sidecar)")
    p.add_argument("input")
    p.add_argument("--kind", choices=ARMS, required=True)
    p.add_argument("-o", "--out")
    _add_stft_flags(p)
    _add_cwt_flags(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("render", help=".tfm -> PNG heatmap")
    p.add_argument("input")
    p.add_argument("-o", "--out")
    _add_render_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("synth", help="synthesize a WAV or a labeled synthetic dataset")
    p.add_argument("--spec", help="SynthSpec JSON file (single-signal mode)")
    p.add_argument("-o", "--out", help="output WAV for --spec")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n-per-class", type=int, default=64)
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--fs", type=int, default=16000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--write-wav", action="store_true", help="materialize WAV files and list them in the manifest")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="stratified train/validation split of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--val-fraction", type=float)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one CNN on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--val-manifest")
    p.add_argument("--arm", choices=ARMS, required=True)
    p.add_argument("-o", "--out", required=True, help="weights file")
    _add_stft_flags(p)
    _add_cwt_flags(p)
    _add_render_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="seeded train/evaluate runs -> mean AUC")
    p.add_argument("--manifest", required=True)
    p.add_argument("--arm", choices=ARMS, required=True)
    p.add_argument("--runs", type=int)
    p.add_argument("--out-dir")
    _add_stft_flags(p)
    _add_cwt_flags(p)
    _add_render_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time spectrogram and scalogram generation")
    p.add_argument("--kind", choices=(*ARMS, "both"), default="both")
    p.add_argument("--signal", help="WAV file (default: 10 s seeded white noise)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", help="directory for bench.json and bench.csv")
    p.add_argument("--seed", type=int)
    _add_stft_flags(p)
    _add_cwt_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("demo-resolution", help="two-tone + two-impulse multiresolution demo")
    p.add_argument("--out", required=True)
    p.add_argument("--omega0", type=float, help="wavelet centre frequency for the demo scalogram")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("compare", help="both arms on the same data, splits and seeds")
    p.add_argument("--manifest", help="existing manifest (default: generate a synthetic one)")
    p.add_argument("--family", choices=FAMILIES, default="stationary")
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--n-per-class", type=int, default=64)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--runs", type=int)
    p.add_argument("--out", required=True)
    _add_render_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (WavError, ValueError, OSError, FloatingPointError, KeyError) as exc:
        print(f"tfbench {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
