"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line (see ``acceptance_log``); the lines
are repeated in a terminal summary section at the end of the session.
Criteria 9-11 train 100 small CNNs and take on the order of two hours on
one CPU core.
"""

import json
import time

import numpy as np
import pytest

from acceptance_log import record
from oracles import auc_by_enumeration, cwt_bruteforce, finite_difference_check, stft_bruteforce
from tfbench import cnn
from tfbench.bench import time_transform
from tfbench.cli import main
from tfbench.cwt import CwtConfig, cwt, cwt_fft, scalogram
from tfbench.dataset import generate_synthetic_dataset
from tfbench.metrics import auc_pairwise, auc_trapezoid
from tfbench.pipeline import ARMS, PipelineConfig, build_images
from tfbench.signal import AudioSignal, SynthSpec, synthesize
from tfbench.stft import StftConfig, power_spectrogram, stft

PAPER_LENGTH = 160_000
FS = 16_000


def check(number, name, ok, detail):
    record(number, name, bool(ok), detail)
    assert ok, detail


def noise(n, seed=0):
    return AudioSignal(np.random.default_rng(seed).standard_normal(n), FS)


def test_c01_shapes():
    t0 = time.perf_counter()
    sig = noise(PAPER_LENGTH)
    spec_shape = stft(sig, StftConfig(1024, 512)).shape
    cwt_shape = cwt(sig, CwtConfig(2, 129)).shape
    elapsed = time.perf_counter() - t0
    ok = spec_shape == (513, 313) and cwt_shape[0] == 128 and elapsed < 60
    check(1, "shape reproduction", ok, f"STFT {spec_shape}, CWT rows {cwt_shape[0]} ({cwt_shape}), {elapsed:.1f} s")


def test_c02_bruteforce_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_stft, worst_cwt = 0.0, 0.0
    for _ in range(100):
        m = int(rng.integers(1, 257))
        x = rng.standard_normal(m)
        n = int(rng.choice([8, 16, 32, 64]))
        h = int(rng.integers(1, n + 1))
        ours = stft(AudioSignal(x, FS), StftConfig(n, h))
        worst_stft = max(worst_stft, float(np.max(np.abs(ours - stft_bruteforce(x, n, h)))))
        smin = int(rng.integers(1, 9))
        cfg = CwtConfig(smin, smin + int(rng.integers(1, 9)), translation_step=int(rng.integers(1, 5)))
        ref = cwt_bruteforce(x, list(cfg.scales), cfg.translation_step)
        fast = cwt_fft(AudioSignal(x, FS), cfg)
        scale = max(float(np.max(np.abs(ref))), 1e-300)
        worst_cwt = max(worst_cwt, float(np.max(np.abs(fast - ref))) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst_stft <= 1e-9 and worst_cwt <= 1e-6 and elapsed < 300
    check(2, "transforms vs brute force", ok, f"max STFT abs err {worst_stft:.2e} (<=1e-9), max CWT rel err {worst_cwt:.2e} (<=1e-6), {elapsed:.0f} s")


def test_c03_tone_localization():
    tone_1k = synthesize(SynthSpec("tone", 1.0, {"frequency_hz": 1000.0}), FS)
    p = power_spectrogram(stft(tone_1k, StftConfig(1024, 512)), StftConfig(1024, 512), FS).values
    bin_ = int(np.argmax(p[:, 1:-1].mean(axis=1)))
    tone_500 = synthesize(SynthSpec("tone", 1.0, {"frequency_hz": 500.0}), FS)
    cfg = CwtConfig()
    energy = scalogram(cwt(tone_500, cfg), cfg, FS).values.mean(axis=1)
    scale = int(cfg.scales[int(np.argmax(energy))])
    check(3, "tone localization", bin_ == 64 and scale in (30, 31), f"1 kHz -> bin {bin_} (64), 500 Hz -> scale {scale} (30 or 31)")


def test_c04_resolution_demo(tmp_path):
    t0 = time.perf_counter()
    rc = main(["demo-resolution", "--out", str(tmp_path)])
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    elapsed = time.perf_counter() - t0
    pngs = sorted(p.name for p in tmp_path.glob("*.png"))
    failed = [k for k, v in verdict["checks"].items() if not v]
    ok = rc == 0 and verdict["pass"] and len(pngs) == 4 and elapsed < 120
    obs = verdict["observed"]
    detail = (
        f"N=64 impulses {obs['spectrogram_short']['impulse_maxima']}/tones {obs['spectrogram_short']['tone_maxima']}, "
        f"N=2048 impulses {obs['spectrogram_long']['impulse_maxima']}/tones {obs['spectrogram_long']['tone_maxima']}, "
        f"scalogram (omega0={verdict['config']['cwt']['omega0']}) impulses {obs['scalogram']['impulse_maxima']}/ridges {obs['scalogram']['tone_maxima']}"
        + (f"; failed {failed}" if failed else "")
        + f", {elapsed:.1f} s"
    )
    check(4, "multiresolution demo", ok, detail)


def test_c05_cost_ordering():
    sig = noise(PAPER_LENGTH, seed=5)
    spec = time_transform("spectrogram", sig, StftConfig(1024, 512), repeats=5)
    scal = time_transform("scalogram", sig, CwtConfig(), repeats=5)
    ratio = scal.median_s / spec.median_s
    check(5, "computational expense ordering", ratio > 10, f"scalogram {scal.median_s:.3f} s / spectrogram {spec.median_s:.4f} s = {ratio:.0f}x (>10; paper 38.6x)")


def test_c06_gradient_check():
    t0 = time.perf_counter()
    with pytest.raises(ValueError):
        cnn.build_model(cnn.ModelConfig(input_height=8, input_width=8))
    cfg = cnn.ModelConfig(input_height=22, input_width=22, conv_filters=(2, 3, 4), dense_units=(5, 6))
    model = cnn.build_model(cfg, seed=1)
    x = np.random.default_rng(1).integers(0, 256, (4, 22, 22, 3)).astype(float)
    res = finite_difference_check(model, x, [0, 1, 1, 0], seed=3)
    elapsed = time.perf_counter() - t0
    ok = res["max_rel_error"] <= 1e-4 and res["kink_violations"] == 0 and res["checked"] + res["on_kink"] == model.n_params() and elapsed < 120
    check(
        6,
        "CNN gradient check",
        ok,
        f"22x22 tiny stack (8x8 collapses to 0x0 under three valid conv+pool stages), {model.n_params()} params, "
        f"max rel err {res['max_rel_error']:.1e} (<=1e-4), {res['on_kink']} on a ReLU kink checked as subgradients, {elapsed:.1f} s",
    )


def test_c07_overfit():
    t0 = time.perf_counter()
    manifest = generate_synthetic_dataset(8, "stationary", 0.0, seed=3)
    images = build_images(manifest, "spectrogram", PipelineConfig())
    model = cnn.build_model(cnn.ModelConfig(), seed=0)
    cfg = cnn.TrainConfig(epochs=200, batch_size=16, learning_rate=1e-3, seed=0)
    _, report = cnn.train(model, images, manifest.labels(), cfg, stop_at_accuracy=1.0)
    elapsed = time.perf_counter() - t0
    ok = report.train_accuracy == 1.0 and elapsed < 600
    check(7, "overfit sanity", ok, f"16 stationary spectrogram images, accuracy {report.train_accuracy:.3f} after {report.epochs_run} epochs (<=200), {elapsed:.0f} s")


def test_c08_auc_equivalence():
    rng = np.random.default_rng(8)
    worst, worst_enum = 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 80))
        labels = rng.integers(0, 2, n)
        labels[:2] = (0, 1)
        scores = rng.integers(0, int(rng.integers(2, 12)), n).astype(float)
        a, b = auc_trapezoid(scores, labels), auc_pairwise(scores, labels)
        worst = max(worst, abs(a - b))
        worst_enum = max(worst_enum, abs(b - auc_by_enumeration(scores, labels)))
    check(8, "AUC oracle equivalence", worst <= 1e-9 and worst_enum <= 1e-12, f"1000 tied instances, max |trapezoid - pairwise| {worst:.1e} (<=1e-9)")


# criteria 9-11: full comparison pipeline -------------------------------------


@pytest.fixture(scope="module")
def compare_cell(tmp_path_factory):
    cache = {}

    def run(family, snr, tag="a"):
        key = (family, snr, tag)
        if key not in cache:
            out = tmp_path_factory.mktemp(f"{family}_{snr:+.0f}_{tag}")
            t0 = time.perf_counter()
            rc = main(["compare", "--family", family, "--snr", str(snr), "--out", str(out)])
            assert rc == 0
            means = {arm: json.loads((out / arm / "summary.json").read_text()) for arm in ARMS}
            cache[key] = (out, means, time.perf_counter() - t0)
        return cache[key]

    return run


def _fmt(means):
    return ", ".join(f"{arm} {means[arm]['mean_auc']:.4f}" for arm in ARMS)


@pytest.mark.slow
def test_c09_directional_table_v(compare_cell):
    _, st, t_st = compare_cell("stationary", 0.0)
    _, im, t_im = compare_cell("impulsive", 0.0)
    s = {a: st[a]["mean_auc"] for a in ARMS}
    i = {a: im[a]["mean_auc"] for a in ARMS}
    runs = {len(st[a]["per_run_auc"]) for a in ARMS} | {len(im[a]["per_run_auc"]) for a in ARMS}
    stationary_ok = s["spectrogram"] >= s["scalogram"] - 0.01
    impulsive_ok = i["scalogram"] >= i["spectrogram"] - 0.01 and min(i.values()) > 0.7
    ok = stationary_ok and impulsive_ok and runs == {10}
    check(
        9,
        "directional Table V",
        ok,
        f"0 dB, 10 runs/arm; stationary: {_fmt(st)} (spec >= scal - 0.01: {stationary_ok}); "
        f"impulsive: {_fmt(im)} (scal >= spec - 0.01 and both > 0.7: {impulsive_ok}); {(t_st + t_im) / 60:.0f} min",
    )


@pytest.mark.slow
def test_c10_snr_monotonic(compare_cell):
    cells = {snr: compare_cell("stationary", snr)[1] for snr in (-6.0, 0.0, 6.0)}
    parts, ok = [], True
    for arm in ARMS:
        seq = [cells[snr][arm]["mean_auc"] for snr in (-6.0, 0.0, 6.0)]
        mono = all(a <= b for a, b in zip(seq, seq[1:]))
        ok &= mono
        parts.append(f"{arm} " + " <= ".join(f"{v:.4f}" for v in seq) + ("" if mono else " (not monotone)"))
    check(10, "SNR monotonicity", ok, "stationary, -6/0/6 dB: " + "; ".join(parts))


@pytest.mark.slow
def test_c11_determinism(compare_cell):
    first, _, _ = compare_cell("impulsive", 0.0)
    second, _, elapsed = compare_cell("impulsive", 0.0, tag="b")
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    differing = [str(f) for f in files if (first / f).read_bytes() != (second / f).read_bytes()]
    extra = {p.relative_to(second) for p in second.rglob("*") if p.is_file()} - set(files)
    kinds = {f.suffix for f in files}
    ok = not differing and not extra and {".jsonl", ".weights", ".json", ".csv"} <= kinds
    check(11, "determinism", ok, f"compare rerun: {len(files)} artifacts byte-identical" if ok else f"differing: {differing[:5]} extra: {sorted(map(str, extra))[:5]}")
