import json

import numpy as np
import pytest

from tfbench.dataset import (
    DatasetManifest,
    LabeledExample,
    generate_synthetic_dataset,
    load_example_signal,
    scan_mimii,
    split,
    synth_spec_for,
)
from tfbench.signal import AudioSignal, save_wav, synthesize_components


def write_tree(root, n_normal, n_abnormal):
    sig = AudioSignal(np.sin(np.arange(160) / 3.0) * 0.5, 16000)
    for label, n in (("normal", n_normal), ("abnormal", n_abnormal)):
        d = root / "0_dB_fan" / "fan" / "id_00" / label
        d.mkdir(parents=True, exist_ok=True)
        for i in range(n):
            save_wav(d / f"{i:08d}.wav", sig)


class TestScan:
    def test_labels_from_directories(self, tmp_path):
        write_tree(tmp_path, 3, 2)
        m = scan_mimii(tmp_path, "fan", 0.0)
        assert len(m) == 5
        assert sorted(ex.label for ex in m.examples) == ["abnormal"] * 2 + ["normal"] * 3
        assert all(ex.machine_type == "fan" and ex.snr_db == 0.0 for ex in m.examples)
        assert [ex.source for ex in m.examples] == sorted(ex.source for ex in m.examples)

    def test_empty_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="no files found"):
            scan_mimii(tmp_path, "fan")

    def test_custom_globs(self, tmp_path):
        write_tree(tmp_path, 2, 2)
        m = scan_mimii(tmp_path, "fan", normal_glob="**/normal/00000000.wav", abnormal_glob="**/abnormal/*.wav")
        assert len(m) == 3

    def test_bad_label(self):
        with pytest.raises(ValueError):
            LabeledExample("x.wav", "broken", "fan")


class TestSynthetic:
    def test_counts(self):
        m = generate_synthetic_dataset(8, "stationary", 0.0, seed=3)
        assert len(m) == 16
        assert int(m.labels().sum()) == 8

    def test_deterministic(self):
        a = generate_synthetic_dataset(4, "impulsive", 6.0, seed=3)
        b = generate_synthetic_dataset(4, "impulsive", 6.0, seed=3)
        assert a.to_jsonl() == b.to_jsonl()
        x = load_example_signal(a.examples[5]).samples
        y = load_example_signal(b.examples[5]).samples
        assert x.tobytes() == y.tobytes()

    def test_seed_changes_audio(self):
        a = load_example_signal(generate_synthetic_dataset(2, "stationary", 0.0, seed=1).examples[0])
        b = load_example_signal(generate_synthetic_dataset(2, "stationary", 0.0, seed=2).examples[0])
        assert not np.array_equal(a.samples, b.samples)

    def test_snr_exact(self):
        ex = generate_synthetic_dataset(2, "stationary", -6.0, seed=0).examples[0]
        spec, fs = synth_spec_for(ex.source)
        clean, noise = synthesize_components(spec, fs)
        snr = 10 * np.log10(np.mean(clean**2) / np.mean(noise**2))
        assert snr == pytest.approx(-6.0, abs=1e-9)

    def test_duration_and_rate(self):
        s = load_example_signal(generate_synthetic_dataset(2, "impulsive", 0.0, seed=0).examples[0])
        assert (len(s), s.sample_rate_hz) == (16000, 16000)

    def _onsets(self, label, index):
        m = generate_synthetic_dataset(3, "impulsive", 0.0, seed=7)
        ex = [e for e in m.examples if e.label == label][index]
        spec, fs = synth_spec_for(ex.source)
        clean, _ = synthesize_components(spec, fs)
        # onset = first sample of each ring, rings never overlap in the normal class
        above = np.abs(clean) > 1e-9
        starts = np.flatnonzero(above & ~np.r_[False, above[:-1]])
        gaps = np.diff(starts)
        return starts[np.r_[True, gaps > 0.005 * fs]] / fs

    @pytest.mark.parametrize("index", [0, 1, 2])
    def test_impulsive_period(self, index):
        onsets = self._onsets("normal", index)
        assert 9 <= len(onsets) <= 11
        intervals = np.diff(onsets)
        assert np.all(np.abs(intervals - 0.1) <= 0.002 + 1 / 16000)

    def test_abnormal_has_double_rings(self):
        m = generate_synthetic_dataset(2, "impulsive", 0.0, seed=7)
        ex = [e for e in m.examples if e.label == "abnormal"][0]
        spec, fs = synth_spec_for(ex.source)
        assert spec.params["double_every"] == 2 and spec.params["double_gap_s"] == 0.01

    def test_stationary_abnormal_extra_tone(self):
        m = generate_synthetic_dataset(2, "stationary", 0.0, seed=7)
        normal, abnormal = (synth_spec_for(m.examples[i].source)[0] for i in (0, 2))
        assert "extra_tones" not in normal.params
        f0 = abnormal.params["fundamental_hz"]
        assert 140 <= f0 <= 160
        assert abnormal.params["extra_tones"] == [[2.37 * f0, 0.4]]

    def test_bad_family(self):
        with pytest.raises(ValueError):
            generate_synthetic_dataset(4, "bursty", 0.0, seed=0)


class TestSplit:
    def test_sizes(self):
        m = generate_synthetic_dataset(10, "stationary", 0.0, seed=0)
        tr, va = split(m)
        assert (len(tr), len(va)) == (16, 4)
        assert int(va.labels().sum()) == 2

    def test_disjoint_union(self):
        m = generate_synthetic_dataset(10, "stationary", 0.0, seed=0)
        tr, va = split(m)
        a = {ex.source for ex in tr.examples}
        b = {ex.source for ex in va.examples}
        assert not a & b
        assert a | b == {ex.source for ex in m.examples}

    def test_seeded(self):
        m = generate_synthetic_dataset(10, "stationary", 0.0, seed=0)
        m2 = DatasetManifest(m.examples, split_seed=1)
        assert split(m)[1].to_jsonl() == split(m)[1].to_jsonl()
        assert split(m)[1].to_jsonl() != split(m2)[1].to_jsonl()

    def test_too_few(self):
        ex = [LabeledExample("a.wav", "normal", "fan"), LabeledExample("b.wav", "abnormal", "fan")]
        with pytest.raises(ValueError):
            split(DatasetManifest(ex))


def test_manifest_roundtrip(tmp_path):
    m = generate_synthetic_dataset(3, "impulsive", 6.0, seed=5)
    m.split_seed = 11
    m.save(tmp_path / "m.jsonl")
    back = DatasetManifest.load(tmp_path / "m.jsonl")
    assert back.to_jsonl() == m.to_jsonl()
    assert back.split_seed == 11 and back.meta["family"] == "impulsive"
    first = json.loads((tmp_path / "m.jsonl").read_text().splitlines()[0])
    assert set(first) == {"source", "label", "machine_type", "snr_db"}
