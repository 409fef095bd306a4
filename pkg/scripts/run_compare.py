"""Spectrogram vs scalogram comparison over signal families and SNRs.

Runs ``tfbench compare`` for every (family, SNR) cell into
``<out>/<family>_<snr>dB/`` and collects all cells into one
``<out>/comparison.csv``. Each cell takes roughly 15-20 minutes on one core
with the defaults (64 clips per class, 10 runs per arm).

    python scripts/run_compare.py --out results/compare
    python scripts/run_compare.py --families impulsive --snrs 0 --runs 3
"""

import argparse
import csv
import sys
from pathlib import Path

from tfbench.cli import main as tfbench_main
from tfbench.dataset import FAMILIES


def cell_dir(out: Path, family: str, snr: float) -> Path:
    return out / f"{family}_{snr:+g}dB"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/compare")
    p.add_argument("--families", nargs="+", default=list(FAMILIES), choices=FAMILIES)
    p.add_argument("--snrs", nargs="+", type=float, default=[-6.0, 0.0, 6.0])
    p.add_argument("--n-per-class", type=int, default=64)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args(argv)

    out = Path(args.out)
    rows, header = [], None
    for family in args.families:
        for snr in args.snrs:
            d = cell_dir(out, family, snr)
            rc = tfbench_main([
                "compare", "--family", family, "--snr", str(snr),
                "--n-per-class", str(args.n_per_class), "--runs", str(args.runs),
                "--seed", str(args.seed), "--jobs", str(args.jobs), "--out", str(d),
            ])
            if rc != 0:
                return rc
            with open(d / "comparison.csv", newline="", encoding="utf-8") as f:
                reader = csv.DictReader(f)
                header = reader.fieldnames
                rows += list(reader)
            print(f"{family} {snr:+g} dB done", flush=True)

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {out / 'comparison.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
