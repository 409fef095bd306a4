"""AUC-ROC (trapezoidal sweep plus a pairwise oracle) and run aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

# Mean AUC-ROC as reported in the published comparison; shown next to our
# numbers in reports, never used as reproduction targets.
PAPER_AUC_BY_SNR = {
    -6.0: {"baseline": 0.893, "scalogram": 0.921, "spectrogram": 0.981},
    0.0: {"baseline": 0.942, "scalogram": 0.964, "spectrogram": 0.992},
    6.0: {"baseline": 0.975, "scalogram": 0.988, "spectrogram": 0.997},
}
PAPER_AUC_BY_MACHINE = {
    "fan": {"scalogram": 0.934, "spectrogram": 0.988},
    "pump": {"scalogram": 0.962, "spectrogram": 0.991},
    "slider": {"scalogram": 0.947, "spectrogram": 0.995},
    "valve": {"scalogram": 0.987, "spectrogram": 0.984},
}
# synthetic families stand in for the stationary fan and impulsive valve
FAMILY_TO_MACHINE = {"stationary": "fan", "impulsive": "valve"}


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(int)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.size} vs {y.size}")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0 (normal) or 1 (abnormal)")
    if y.sum() == 0 or y.sum() == y.size:
        raise ValueError("AUC needs at least one example of each label")
    return s, y


def auc_trapezoid(scores, labels) -> float:
    """Area under the ROC curve by a threshold sweep with trapezoids.

    Thresholds descend through the distinct scores; tied scores move TPR and
    FPR together in a single step.
    """
    s, y = _check(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last_of_group = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(y)[last_of_group]
    fp = np.cumsum(1 - y)[last_of_group]
    tpr = np.r_[0.0, tp / tp[-1]]
    fpr = np.r_[0.0, fp / fp[-1]]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def auc_pairwise(scores, labels) -> float:
    """P(abnormal score > normal score) over all pairs, ties counting 1/2."""
    s, y = _check(scores, labels)
    pos, neg = s[y == 1], s[y == 0]
    wins = 0.0
    for p in pos:
        wins += np.count_nonzero(p > neg) + 0.5 * np.count_nonzero(p == neg)
    return float(wins / (pos.size * neg.size))


@dataclass
class EvalSummary:
    per_run_auc: list[float]
    run_seeds: list[int] = field(default_factory=list)
    mean_auc: float = float("nan")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def aggregate_runs(aucs, run_seeds=None) -> EvalSummary:
    aucs = [float(a) for a in aucs]
    if not aucs:
        raise ValueError("need at least one run to aggregate")
    return EvalSummary(per_run_auc=aucs, run_seeds=list(run_seeds or []), mean_auc=float(np.mean(aucs)))


def paper_reference(arm: str, family_or_machine: str | None = None, snr_db: float | None = None) -> float | None:
    machine = FAMILY_TO_MACHINE.get(family_or_machine, family_or_machine)
    if machine in PAPER_AUC_BY_MACHINE:
        return PAPER_AUC_BY_MACHINE[machine].get(arm)
    if snr_db is not None and float(snr_db) in PAPER_AUC_BY_SNR:
        return PAPER_AUC_BY_SNR[float(snr_db)].get(arm)
    return None


COMPARISON_COLUMNS = ("config", "machine_or_family", "snr_db", "mean_auc", "paper_reference_auc")


def write_comparison_csv(path: str | Path, rows: list[dict]) -> None:
    """Rows carry config, machine_or_family, snr_db, mean_auc and optional paper_reference_auc."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            ref = r.get("paper_reference_auc")
            w.writerow(
                {
                    "config": r["config"],
                    "machine_or_family": r["machine_or_family"],
                    "snr_db": "" if r.get("snr_db") is None else f"{float(r['snr_db']):g}",
                    "mean_auc": f"{float(r['mean_auc']):.6f}",
                    "paper_reference_auc": "" if ref is None else f"{ref:.3f}",
                }
            )
