"""Short-time Fourier transform and power spectrograms.

Frames follow the centred convention: the signal is zero-padded by N//2
samples on each side and frame m covers padded samples [m*H, m*H + N). For
M input samples this yields floor(M/H) + 1 frames, so 160,000 samples at
N=1024, H=512 give 313 columns. The DFT phase is referenced to the start of
each frame.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from tfbench.signal import AudioSignal

WINDOWS = ("hann", "rectangular")


@dataclass(frozen=True)
class StftConfig:
    frame_size_n: int = 1024
    hop_size_h: int | None = None
    window: str = "hann"
    center_pad: bool = True

    def __post_init__(self):
        if self.frame_size_n < 1:
            raise ValueError(f"frame_size_n must be positive, got {self.frame_size_n}")
        if self.hop_size_h is None:
            object.__setattr__(self, "hop_size_h", max(1, self.frame_size_n // 2))
        if not 0 < self.hop_size_h <= self.frame_size_n:
            raise ValueError(
                f"hop_size_h must satisfy 0 < H <= N, got H={self.hop_size_h}, N={self.frame_size_n}"
            )
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; expected one of {WINDOWS}")

    @property
    def n_bins(self) -> int:
        return self.frame_size_n // 2 + 1

    def n_frames(self, m: int) -> int:
        if self.center_pad:
            return m // self.hop_size_h + 1
        if m < self.frame_size_n:
            return 0
        return (m - self.frame_size_n) // self.hop_size_h + 1

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class TfMatrix:
    """Time-frequency energy matrix, rows = frequency bins or scales, cols = time.

    ``units`` is ``"power"`` for energies (non-negative) or ``"db"`` after
    log scaling.
    """

    values: np.ndarray
    row_axis: str
    row_coords: np.ndarray
    time_step_s: float
    kind: str
    units: str = "power"
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.row_coords = np.asarray(self.row_coords, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {self.values.shape}")
        if self.row_axis not in ("frequency_hz", "scale"):
            raise ValueError(f"bad row_axis {self.row_axis!r}")
        if self.kind not in ("spectrogram", "scalogram"):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.units not in ("power", "db"):
            raise ValueError(f"bad units {self.units!r}")
        if len(self.row_coords) != self.values.shape[0]:
            raise ValueError("row_coords length must equal the number of rows")
        if len(self.row_coords) > 1:
            d = np.diff(self.row_coords)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("row_coords must be strictly monotonic")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.units == "power" and np.any(self.values < 0):
            raise ValueError("power values must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def make_window(kind: str, n: int) -> np.ndarray:
    """Periodic Hann (``0.5 * (1 - cos(2*pi*i/n))``) or rectangular window."""
    if n < 1:
        raise ValueError(f"window length must be >= 1, got {n}")
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        i = np.arange(n)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * i / n))
    raise ValueError(f"unknown window {kind!r}")


def frame_signal(samples: np.ndarray, config: StftConfig) -> np.ndarray:
    """Windowed frames, shape (n_frames, N)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 1:
        raise ValueError("signal must contain at least one sample")
    n, h = config.frame_size_n, config.hop_size_h
    n_frames = config.n_frames(x.size)
    if n_frames < 1:
        raise ValueError(f"signal of {x.size} samples is shorter than one frame of {n}")
    if config.center_pad:
        left = n // 2
        # enough right padding for the last frame starting at floor(M/H)*H
        right = (n_frames - 1) * h + n - left - x.size
        x = np.pad(x, (left, max(right, 0)))
    windows = np.lib.stride_tricks.sliding_window_view(x, n)[:: h][:n_frames]
    return windows * make_window(config.window, n)


def stft_full(signal: AudioSignal, config: StftConfig) -> np.ndarray:
    """Two-sided spectrum of every frame, shape (N, n_frames)."""
    return np.fft.fft(frame_signal(signal.samples, config), axis=1).T


def stft(signal: AudioSignal, config: StftConfig) -> np.ndarray:
    """Complex STFT coefficients, shape (N//2 + 1, floor(M/H) + 1) with centring."""
    frames = frame_signal(signal.samples, config)
    return np.fft.rfft(frames, axis=1).T


def power_spectrogram(coeffs: np.ndarray, config: StftConfig, sample_rate_hz: int) -> TfMatrix:
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2 or coeffs.shape[0] != config.n_bins:
        raise ValueError(
            f"expected coefficients with {config.n_bins} rows for N={config.frame_size_n}, got {coeffs.shape}"
        )
    power = coeffs.real**2 + coeffs.imag**2
    freqs = np.arange(config.n_bins) * sample_rate_hz / config.frame_size_n
    return TfMatrix(
        values=power,
        row_axis="frequency_hz",
        row_coords=freqs,
        time_step_s=config.hop_size_h / sample_rate_hz,
        kind="spectrogram",
        config={"transform": "stft", **config.to_dict(), "sample_rate_hz": int(sample_rate_hz)},
    )


def spectrogram(signal: AudioSignal, config: StftConfig | None = None) -> TfMatrix:
    config = config or StftConfig()
    return power_spectrogram(stft(signal, config), config, signal.sample_rate_hz)
