"""Labeled example manifests: MIMII directory scanning, synthetic datasets, splits.

Manifests are stored as JSON lines, one example per line, with split
settings in a ``<manifest>.meta.json`` sidecar. Synthetic examples carry a
``synth://<family>/<label>?...`` source string that fully determines their
audio, so no WAV files are needed to regenerate them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from urllib.parse import parse_qs, urlencode, urlparse

import numpy as np

from tfbench.seeds import derive_seed, make_rng
from tfbench.signal import AudioSignal, SynthSpec, load_wav, synthesize

LABELS = ("normal", "abnormal")
MACHINE_TYPES = ("fan", "pump", "slider", "valve", "synth_stationary", "synth_impulsive")
FAMILIES = ("stationary", "impulsive")

# Total file count of the public MIMII corpus at one SNR, all four machines.
MIMII_FILES_PER_SNR = 18019

DEFAULT_NORMAL_GLOB = "**/normal/*.wav"
DEFAULT_ABNORMAL_GLOB = "**/abnormal/*.wav"


@dataclass(frozen=True)
class LabeledExample:
    source: str
    label: str
    machine_type: str
    snr_db: float | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.machine_type not in MACHINE_TYPES:
            raise ValueError(f"unknown machine_type {self.machine_type!r}")

    @property
    def y(self) -> int:
        return LABELS.index(self.label)


@dataclass
class DatasetManifest:
    examples: list[LabeledExample]
    split_seed: int = 0
    val_fraction: float = 0.2
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> np.ndarray:
        return np.array([ex.y for ex in self.examples], dtype=int)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(ex), sort_keys=True) + "\n" for ex in self.examples)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        meta = {"split_seed": self.split_seed, "val_fraction": self.val_fraction, **self.meta}
        meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        examples = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                d = json.loads(line)
                examples.append(LabeledExample(d["source"], d["label"], d["machine_type"], d.get("snr_db")))
        meta = {}
        if meta_path(path).exists():
            meta = json.loads(meta_path(path).read_text(encoding="utf-8"))
        return cls(
            examples,
            split_seed=int(meta.pop("split_seed", 0)),
            val_fraction=float(meta.pop("val_fraction", 0.2)),
            meta=meta,
        )


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def scan_mimii(
    root: str | Path,
    machine_type: str,
    snr_db: float | None = None,
    normal_glob: str = DEFAULT_NORMAL_GLOB,
    abnormal_glob: str = DEFAULT_ABNORMAL_GLOB,
) -> DatasetManifest:
    """Collect WAV files under ``root``; the label comes from which glob matched.

    The default globs fit the MIMII layout ``<snr>_<machine>/<machine>/id_XX/{normal,abnormal}/*.wav``.
    Files are ordered lexicographically by path.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"MIMII root {root} is not a directory")
    found: dict[str, str] = {}
    for label, pattern in (("normal", normal_glob), ("abnormal", abnormal_glob)):
        for p in root.glob(pattern):
            if p.is_file():
                found.setdefault(p.as_posix(), label)
    if not found:
        raise FileNotFoundError(f"no files found under {root} matching {normal_glob!r} or {abnormal_glob!r}")
    examples = [LabeledExample(src, found[src], machine_type, snr_db) for src in sorted(found)]
    return DatasetManifest(examples)


def synth_source(family: str, label: str, seed: int, index: int, snr_db: float, duration_s: float, fs: int) -> str:
    query = urlencode({"seed": seed, "index": index, "snr_db": snr_db, "duration_s": duration_s, "fs": fs})
    return f"synth://{family}/{label}?{query}"


def synth_spec_for(source: str) -> tuple[SynthSpec, int]:
    """Recover the SynthSpec and sample rate encoded in a ``synth://`` source."""
    u = urlparse(source)
    if u.scheme != "synth":
        raise ValueError(f"not a synthetic source: {source!r}")
    family, label = u.netloc, u.path.strip("/")
    q = {k: v[0] for k, v in parse_qs(u.query).items()}
    seed, index = int(q["seed"]), int(q["index"])
    snr_db = float(q["snr_db"])
    duration_s, fs = float(q["duration_s"]), int(q["fs"])
    audio_seed = derive_seed(seed, family, label, index, "audio")
    if family == "stationary":
        f0 = make_rng(derive_seed(seed, family, label, index, "f0")).uniform(140.0, 160.0)
        params = {"fundamental_hz": f0, "harmonic_amplitudes": [1.0, 0.5, 0.25]}
        if label == "abnormal":
            params["extra_tones"] = [[2.37 * f0, 0.4]]
        return SynthSpec("stationary_machine", duration_s, params, snr_db, audio_seed), fs
    if family == "impulsive":
        params = {"period_s": 0.1, "jitter_s": 0.002, "ring_hz": 1500.0, "decay_s": 0.003}
        if label == "abnormal":
            params.update(double_every=2, double_gap_s=0.01)
        return SynthSpec("impulsive_machine", duration_s, params, snr_db, audio_seed), fs
    raise ValueError(f"unknown synthetic family {family!r}")


def generate_synthetic_dataset(
    n_per_class: int,
    family: str,
    snr_db: float,
    seed: int,
    duration_s: float = 1.0,
    sample_rate_hz: int = 16000,
) -> DatasetManifest:
    """Balanced synthetic stand-in for a stationary (fan-like) or impulsive (valve-like) machine.

    stationary: harmonics 1-3 of f0 ~ U[140, 160] Hz with amplitudes 1, 0.5,
    0.25; abnormal adds an inharmonic tone at 2.37*f0 with amplitude 0.4.
    impulsive: 1.5 kHz decaying rings every 100 +/- 2 ms; abnormal replaces
    every second ring by a pair 10 ms apart. Everything is mixed with white
    noise at ``snr_db``.
    """
    if n_per_class < 2:
        raise ValueError(f"n_per_class must be >= 2, got {n_per_class}")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    examples = []
    for label in LABELS:
        for i in range(n_per_class):
            src = synth_source(family, label, seed, i, float(snr_db), duration_s, sample_rate_hz)
            examples.append(LabeledExample(src, label, f"synth_{family}", float(snr_db)))
    return DatasetManifest(examples, meta={"family": family, "generator_seed": seed})


def load_example_signal(example: LabeledExample) -> AudioSignal:
    if example.source.startswith("synth://"):
        spec, fs = synth_spec_for(example.source)
        return synthesize(spec, fs)
    return load_wav(example.source)


def split(manifest: DatasetManifest) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified, seeded train/validation split.

    Each label's examples are permuted with a PCG64 stream derived from
    ``split_seed`` and the label; the first ``round(n * val_fraction)``
    (clamped to [1, n-1]) go to validation. Original order is kept within
    each part.
    """
    if not manifest.examples:
        raise ValueError("manifest is empty")
    if not 0.0 < manifest.val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    train_idx, val_idx = [], []
    for label in LABELS:
        idx = [i for i, ex in enumerate(manifest.examples) if ex.label == label]
        if len(idx) < 2:
            raise ValueError(f"label {label!r} has {len(idx)} examples; need at least 2 to split")
        n_val = min(max(int(round(len(idx) * manifest.val_fraction)), 1), len(idx) - 1)
        perm = make_rng(derive_seed(manifest.split_seed, "split", label)).permutation(len(idx))
        val_idx += [idx[j] for j in perm[:n_val]]
        train_idx += [idx[j] for j in perm[n_val:]]

    def part(indices):
        return DatasetManifest(
            [manifest.examples[i] for i in sorted(indices)],
            manifest.split_seed,
            manifest.val_fraction,
            dict(manifest.meta),
        )

    return part(train_idx), part(val_idx)
