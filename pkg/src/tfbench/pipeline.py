"""End-to-end experiment: normalize, transform, render, split, train, evaluate.

Randomness for run r is derived from the root seed as
``derive_seed(root, "run", r, <stream>)`` with streams ``split``, ``init``
and ``train``; both comparison arms therefore see identical splits,
initial weights, shuffles and dropout masks.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from tfbench import cnn
from tfbench.cwt import CwtConfig, cwt, scalogram
from tfbench.dataset import DatasetManifest, load_example_signal, split
from tfbench.metrics import EvalSummary, aggregate_runs, auc_trapezoid
from tfbench.render import RenderConfig, render
from tfbench.seeds import derive_seed
from tfbench.signal import AudioSignal, peak_normalize
from tfbench.stft import StftConfig, TfMatrix, power_spectrogram, stft

log = logging.getLogger(__name__)

ARMS = ("spectrogram", "scalogram")


@dataclass
class PipelineConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    cwt: CwtConfig = field(default_factory=CwtConfig)
    render: RenderConfig = field(default_factory=lambda: RenderConfig(width=64, height=64))
    train: cnn.TrainConfig = field(default_factory=lambda: cnn.TrainConfig(epochs=80, batch_size=16, learning_rate=3e-4))
    conv_filters: tuple[int, int, int] = (16, 32, 64)
    dense_units: tuple[int, int] = (128, 256)
    runs: int = 10
    seed: int = 0
    val_fraction: float = 0.2

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    def model_config(self) -> cnn.ModelConfig:
        return cnn.ModelConfig(
            input_height=self.render.height,
            input_width=self.render.width,
            conv_filters=self.conv_filters,
            dense_units=self.dense_units,
        )

    def to_dict(self) -> dict:
        d = {
            "stft": asdict(self.stft),
            "cwt": asdict(self.cwt),
            "render": {
                "width": self.render.width,
                "height": self.render.height,
                "floor_db": self.render.floor_db,
                "colormap": [[p, list(c)] for p, c in zip(self.render.colormap.positions, self.render.colormap.colors)],
            },
            "train": asdict(self.train),
            "conv_filters": list(self.conv_filters),
            "dense_units": list(self.dense_units),
            "runs": self.runs,
            "seed": self.seed,
            "val_fraction": self.val_fraction,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        from tfbench.render import ColorMap

        base = cls()
        kw = {}
        if "stft" in d:
            stft_d = dict(d["stft"])
            if "frame_size_n" in stft_d:
                stft_d.setdefault("hop_size_h", None)
            kw["stft"] = StftConfig(**{**asdict(base.stft), **stft_d})
        if "cwt" in d:
            kw["cwt"] = CwtConfig(**{**asdict(base.cwt), **d["cwt"]})
        if "render" in d:
            r = dict(d["render"])
            if "colormap" in r:
                r["colormap"] = ColorMap.from_points(r["colormap"])
            kw["render"] = replace(base.render, **r)
        if "train" in d:
            kw["train"] = cnn.TrainConfig(**{**asdict(base.train), **d["train"]})
        for key in ("conv_filters", "dense_units"):
            if key in d:
                kw[key] = tuple(d[key])
        for key in ("runs", "seed", "val_fraction"):
            if key in d:
                kw[key] = d[key]
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def transform(signal: AudioSignal, arm: str, config: PipelineConfig) -> TfMatrix:
    if arm == "spectrogram":
        return power_spectrogram(stft(signal, config.stft), config.stft, signal.sample_rate_hz)
    if arm == "scalogram":
        return scalogram(cwt(signal, config.cwt), config.cwt, signal.sample_rate_hz)
    raise ValueError(f"unknown arm {arm!r}; expected one of {ARMS}")


def example_image(signal: AudioSignal, arm: str, config: PipelineConfig) -> np.ndarray:
    """Normalize, transform and render one signal; returns uint8 (H, W, 3)."""
    return render(transform(peak_normalize(signal), arm, config), config.render).pixels


def _image_for(args) -> np.ndarray:
    example, arm, config = args
    return example_image(load_example_signal(example), arm, config)


def build_images(manifest: DatasetManifest, arm: str, config: PipelineConfig, jobs: int = 1) -> np.ndarray:
    """Render every example; with ``jobs > 1`` a process pool shares the work, order preserved."""
    tasks = [(ex, arm, config) for ex in manifest.examples]
    if jobs <= 1:
        return np.stack([_image_for(t) for t in tasks])
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return np.stack(list(pool.map(_image_for, tasks, chunksize=8)))


def run_seeds(root: int, run: int) -> dict[str, int]:
    return {s: derive_seed(root, "run", run, s) for s in ("split", "init", "train")}


@dataclass
class RunResult:
    run: int
    seeds: dict
    auc: float
    report: cnn.TrainReport
    model: cnn.Model
    train_sources: list[str]
    val_sources: list[str]


def run_once(
    manifest: DatasetManifest, images: np.ndarray, config: PipelineConfig, run: int
) -> RunResult:
    """One seeded split/train/evaluate cycle on pre-rendered images."""
    seeds = run_seeds(config.seed, run)
    manifest = DatasetManifest(manifest.examples, seeds["split"], config.val_fraction, dict(manifest.meta))
    train_m, val_m = split(manifest)
    index = {ex.source: i for i, ex in enumerate(manifest.examples)}
    tr = np.array([index[ex.source] for ex in train_m.examples])
    va = np.array([index[ex.source] for ex in val_m.examples])
    labels = manifest.labels()
    model = cnn.build_model(config.model_config(), seeds["init"])
    tcfg = replace(config.train, seed=seeds["train"])
    model, report = cnn.train(model, images[tr], labels[tr], tcfg, images[va], labels[va])
    if report.diverged:
        raise FloatingPointError(f"run {run} diverged: {report.message}")
    auc = auc_trapezoid(cnn.predict(model, images[va]), labels[va])
    return RunResult(run, seeds, auc, report, model, [ex.source for ex in train_m.examples], [ex.source for ex in val_m.examples])


def evaluate(
    manifest: DatasetManifest,
    arm: str,
    config: PipelineConfig,
    images: np.ndarray | None = None,
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> tuple[EvalSummary, list[RunResult]]:
    """Average validation AUC over ``config.runs`` seeded runs."""
    if images is None:
        images = build_images(manifest, arm, config, jobs)
    results = []
    for r in range(config.runs):
        res = run_once(manifest, images, config, r)
        log.info("%s run %d: auc=%.4f final loss=%.4f", arm, r, res.auc, res.report.epoch_loss[-1])
        results.append(res)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            cnn.save_model(out / f"{arm}_run{r:02d}.weights", res.model)
            (out / f"{arm}_run{r:02d}.report.json").write_text(res.report.to_json(), encoding="utf-8")
    summary = aggregate_runs([r.auc for r in results], [r.seeds["init"] for r in results])
    return summary, results
