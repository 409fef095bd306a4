"""Wall-clock cost of spectrogram vs scalogram generation.

Only the transform and the energy matrix are timed; rendering and file I/O
stay outside the timed region. Each measurement discards one warmup call
and reports every repeat plus the median.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from tfbench.cwt import CwtConfig, cwt, scalogram
from tfbench.dataset import MIMII_FILES_PER_SNR
from tfbench.signal import AudioSignal
from tfbench.stft import StftConfig, power_spectrogram, stft

# Single-file seconds on the original hardware; kept for side-by-side reporting only.
PAPER_SECONDS = {"spectrogram": 0.58, "scalogram": 22.38}
PAPER_DATASET_SECONDS = {"spectrogram": 10_451.02, "scalogram": 392_814.2, "deviation": 392_814.2}


@dataclass
class BenchResult:
    label: str
    signal_length: int
    repeats: int
    times_s: list[float]
    median_s: float
    mean_s: float

    def __post_init__(self):
        if self.repeats < 3 or len(self.times_s) != self.repeats:
            raise ValueError("need at least 3 repeats and one time per repeat")

    @classmethod
    def from_times(cls, label: str, signal_length: int, times_s: list[float]) -> "BenchResult":
        return cls(label, signal_length, len(times_s), list(times_s), statistics.median(times_s), statistics.fmean(times_s))


def _runner(kind: str, signal: AudioSignal, config):
    fs = signal.sample_rate_hz
    if kind == "spectrogram":
        config = config or StftConfig(1024, 512)
        return lambda: power_spectrogram(stft(signal, config), config, fs)
    if kind == "scalogram":
        config = config or CwtConfig()
        return lambda: scalogram(cwt(signal, config), config, fs)
    raise ValueError(f"kind must be 'spectrogram' or 'scalogram', got {kind!r}")


def time_transform(kind: str, signal: AudioSignal, config=None, repeats: int = 5, label: str | None = None) -> BenchResult:
    """Median-of-``repeats`` timing of one transform after a discarded warmup."""
    if repeats < 3:
        raise ValueError(f"repeats must be >= 3, got {repeats}")
    fn = _runner(kind, signal, config)
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return BenchResult.from_times(label or kind, len(signal), times)


def bench_report(results: list[BenchResult], n_files: int = MIMII_FILES_PER_SNR) -> dict:
    """Per-label medians, whole-dataset extrapolation and spectrogram/scalogram ratio.

    The deviation is computed by subtraction. In the source table the
    whole-dataset scalogram cell equals the deviation (21.8 s x 18,019); the
    single-file scalogram time extrapolates to about 403,265 s instead.
    """
    if not results:
        raise ValueError("no benchmark results")
    rows = []
    for r in results:
        rows.append(
            {
                "label": r.label,
                "signal_length": r.signal_length,
                "repeats": r.repeats,
                "median_s": r.median_s,
                "mean_s": r.mean_s,
                "dataset_s": r.median_s * n_files,
                "paper_single_file_s": PAPER_SECONDS.get(r.label),
            }
        )
    report: dict = {"n_files": n_files, "rows": rows, "results": [asdict(r) for r in results]}
    by_label = {r.label: r for r in results}
    if "spectrogram" in by_label and "scalogram" in by_label:
        spec, scal = by_label["spectrogram"].median_s, by_label["scalogram"].median_s
        report["comparison"] = {
            "ratio_scalogram_over_spectrogram": scal / spec,
            "deviation_single_s": scal - spec,
            "deviation_dataset_s": (scal - spec) * n_files,
            "paper_ratio": PAPER_SECONDS["scalogram"] / PAPER_SECONDS["spectrogram"],
            "paper_deviation_single_s": PAPER_SECONDS["scalogram"] - PAPER_SECONDS["spectrogram"],
            "paper_dataset_s": PAPER_DATASET_SECONDS,
            "paper_scalogram_dataset_from_single_s": PAPER_SECONDS["scalogram"] * n_files,
            "note": "paper's whole-dataset scalogram cell repeats the deviation; 22.38 s x 18,019 is about 403,265 s",
        }
    return report


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    fields = ["label", "signal_length", "repeats", "median_s", "mean_s", "dataset_s", "paper_single_file_s"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in report["rows"]:
        w.writerow({k: "" if row[k] is None else row[k] for k in fields})
    return buf.getvalue()


def write_report(out_dir: str | Path, report: dict) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath, cpath = out / "bench.json", out / "bench.csv"
    jpath.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    cpath.write_text(report_csv(report), encoding="utf-8")
    return jpath, cpath
