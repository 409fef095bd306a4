"""Audio signals: WAV I/O, peak normalization and synthetic test signals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.io import wavfile

from tfbench.seeds import make_rng

SYNTH_KINDS = ("tone", "multi_tone_plus_impulses", "stationary_machine", "impulsive_machine")


class WavError(Exception):
    """Base class for WAV decoding failures."""


class WavUnreadableError(WavError):
    pass


class UnsupportedEncodingError(WavError):
    pass


class EmptyWavError(WavError):
    pass


class SilentSignalError(ValueError):
    """Raised when peak normalization meets an all-zero signal."""


@dataclass(frozen=True)
class AudioSignal:
    """Mono real-valued waveform with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size == 0:
            raise ValueError("samples must be non-empty")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def load_wav(path: str | Path) -> AudioSignal:
    """Read a 16-bit integer or 32-bit float PCM WAV as a mono signal.

    Multichannel files are averaged across channels. Integer samples are
    divided by 32768.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(12)
    except OSError as exc:
        raise WavUnreadableError(f"{path}: {exc}") from exc
    if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX", b"RF64") or head[8:12] != b"WAVE":
        raise WavUnreadableError(f"{path}: not a RIFF/WAVE file")
    try:
        rate, data = wavfile.read(path)
    except (ValueError, NotImplementedError) as exc:
        if "format" in str(exc).lower() or isinstance(exc, NotImplementedError):
            raise UnsupportedEncodingError(f"{path}: {exc}") from exc
        raise WavUnreadableError(f"{path}: {exc}") from exc
    except (OSError, EOFError) as exc:
        raise WavUnreadableError(f"{path}: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported sample type {data.dtype}; expected int16 or float32 PCM"
        )
    if samples.shape[0] == 0:
        raise EmptyWavError(f"{path}: WAV has no sample frames")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioSignal(samples, int(rate))


def save_wav(path: str | Path, signal: AudioSignal) -> None:
    """Write ``signal`` as 16-bit mono PCM, clipping to the int16 range."""
    ints = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(Path(path), signal.sample_rate_hz, ints)


def peak_normalize(signal: AudioSignal) -> AudioSignal:
    """Divide every sample by the peak absolute amplitude."""
    peak = float(np.max(np.abs(signal.samples)))
    if peak == 0.0:
        raise SilentSignalError(
            "cannot peak-normalize a silent signal: max|y_n| = 0 makes y_n / max|y_n| a division by zero"
        )
    return AudioSignal(signal.samples / peak, signal.sample_rate_hz)


@dataclass
class SynthSpec:
    """Recipe for a deterministic synthetic signal.

    ``params`` by kind:

    * ``tone``: ``frequency_hz``, optional ``amplitude`` (1.0).
    * ``multi_tone_plus_impulses``: ``frequencies_hz`` (two values),
      ``impulse_times_s`` (two values), optional ``amplitudes``.
    * ``stationary_machine``: ``fundamental_hz``, ``harmonic_amplitudes``
      (one per harmonic 1..K), optional ``extra_tones`` as ``[[hz, amp], ...]``.
      Phases are drawn from the seed.
    * ``impulsive_machine``: ``period_s``, ``jitter_s``, optional
      ``ring_hz`` (1500), ``decay_s`` (0.003), ``double_every`` (0 = never),
      ``double_gap_s`` (0.01). Successive ring onsets are separated by
      ``period_s`` plus a uniform draw in ``[-jitter_s, jitter_s]``; when
      ``double_every`` is k > 0, every k-th ring is replaced by two rings
      ``double_gap_s`` apart.
    """

    kind: str
    duration_s: float
    params: dict[str, Any] = field(default_factory=dict)
    noise_snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SYNTH_KINDS:
            raise ValueError(f"unknown synth kind {self.kind!r}; expected one of {SYNTH_KINDS}")
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "duration_s": self.duration_s,
                "params": self.params,
                "noise_snr_db": self.noise_snr_db,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        d = json.loads(text)
        return cls(
            kind=d["kind"],
            duration_s=float(d["duration_s"]),
            params=d.get("params", {}),
            noise_snr_db=d.get("noise_snr_db"),
            seed=int(d.get("seed", 0)),
        )


def _check_freq(f: float, fs: int) -> None:
    if not 0 < f < fs / 2:
        raise ValueError(f"frequency {f} Hz must lie in (0, {fs / 2}) for sample rate {fs}")


def _ring(n: int, fs: int, ring_hz: float, decay_s: float) -> np.ndarray:
    t = np.arange(n) / fs
    return np.exp(-t / decay_s) * np.sin(2 * np.pi * ring_hz * t)


def _clean_component(spec: SynthSpec, fs: int, rng: np.random.Generator) -> np.ndarray:
    n = int(round(spec.duration_s * fs))
    if n < 1:
        raise ValueError("duration too short for one sample")
    t = np.arange(n) / fs
    p = spec.params

    if spec.kind == "tone":
        f = float(p["frequency_hz"])
        _check_freq(f, fs)
        return float(p.get("amplitude", 1.0)) * np.sin(2 * np.pi * f * t)

    if spec.kind == "multi_tone_plus_impulses":
        freqs = [float(f) for f in p["frequencies_hz"]]
        amps = p.get("amplitudes", [1.0] * len(freqs))
        x = np.zeros(n)
        for f, a in zip(freqs, amps):
            _check_freq(f, fs)
            x += a * np.sin(2 * np.pi * f * t)
        for ti in p["impulse_times_s"]:
            if not 0 <= ti < spec.duration_s:
                raise ValueError(f"impulse time {ti} s outside [0, {spec.duration_s})")
            x[int(round(ti * fs))] += 1.0
        return x

    if spec.kind == "stationary_machine":
        f0 = float(p["fundamental_hz"])
        x = np.zeros(n)
        tones = [(k * f0, float(a)) for k, a in enumerate(p["harmonic_amplitudes"], start=1)]
        tones += [(float(f), float(a)) for f, a in p.get("extra_tones", [])]
        phases = rng.uniform(0.0, 2 * np.pi, size=len(tones))
        for (f, a), ph in zip(tones, phases):
            _check_freq(f, fs)
            x += a * np.sin(2 * np.pi * f * t + ph)
        return x

    # impulsive_machine
    period = float(p["period_s"])
    jitter = float(p.get("jitter_s", 0.0))
    ring_hz = float(p.get("ring_hz", 1500.0))
    decay_s = float(p.get("decay_s", 0.003))
    double_every = int(p.get("double_every", 0))
    double_gap = float(p.get("double_gap_s", 0.01))
    if period <= 0 or jitter < 0 or jitter >= period:
        raise ValueError("need period_s > 0 and 0 <= jitter_s < period_s")
    _check_freq(ring_hz, fs)

    ring_len = min(n, int(math.ceil(8 * decay_s * fs)) + 1)
    ring = _ring(ring_len, fs, ring_hz, decay_s)
    x = np.zeros(n)

    def add_ring(onset_s: float) -> None:
        i = int(round(onset_s * fs))
        if 0 <= i < n:
            m = min(ring_len, n - i)
            x[i : i + m] += ring[:m]

    onset = rng.uniform(0.0, period)
    idx = 0
    while onset < spec.duration_s:
        add_ring(onset)
        if double_every > 0 and idx % double_every == double_every - 1:
            add_ring(onset + double_gap)
        idx += 1
        onset += period + rng.uniform(-jitter, jitter)
    return x


def synthesize_components(spec: SynthSpec, sample_rate_hz: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(clean, noise)`` arrays; the synthesized signal is their sum.

    The noise is white Gaussian, rescaled so that its mean power is exactly
    ``P_clean / 10**(snr/10)``. Without ``noise_snr_db`` the noise is zeros.
    """
    fs = int(sample_rate_hz)
    rng = make_rng(spec.seed)
    clean = _clean_component(spec, fs, rng)
    if spec.noise_snr_db is None:
        return clean, np.zeros_like(clean)
    noise = rng.standard_normal(clean.size)
    p_clean = float(np.mean(clean**2))
    p_target = p_clean / 10.0 ** (float(spec.noise_snr_db) / 10.0)
    noise *= math.sqrt(p_target / float(np.mean(noise**2)))
    return clean, noise


def synthesize(spec: SynthSpec, sample_rate_hz: int) -> AudioSignal:
    """Render ``spec`` at ``sample_rate_hz``; bit-reproducible for a fixed seed."""
    clean, noise = synthesize_components(spec, sample_rate_hz)
    return AudioSignal(clean + noise, sample_rate_hz)
