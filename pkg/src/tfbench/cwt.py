"""Discrete-time continuous wavelet transform with an analytic Morlet wavelet.

For scale a and translation k the coefficient is

    X(a, k) = a**-0.5 * sum_n x[n] * conj(psi((n - k) / a))

with psi(t) = pi**-0.25 * exp(1j*omega0*t) * exp(-t**2/2), the sum truncated
to |n - k| <= support_radius * a and x taken as zero outside the signal.
Translations run over 0, step, 2*step, ... < M.

Two evaluation paths share this contract: ``cwt_direct`` forms the sum per
output column and ``cwt_fft`` convolves each scale's kernel with the signal
via FFT. ``cwt`` picks whichever is cheaper for the requested step.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
import scipy.fft

from tfbench.signal import AudioSignal
from tfbench.stft import TfMatrix

# columns per block in the direct path; bounds the window buffer to ~32 MB
_DIRECT_BLOCK_ELEMS = 1 << 22


@dataclass(frozen=True)
class CwtConfig:
    scale_min: int = 2
    scale_max: int = 129
    translation_step: int = 1
    wavelet: str = "analytic_morlet"
    omega0: float = 6.0
    support_radius: float = 4.0

    def __post_init__(self):
        if self.scale_min < 1:
            raise ValueError(f"scale_min must be >= 1, got {self.scale_min}")
        if self.scale_max <= self.scale_min:
            raise ValueError(f"scale_max ({self.scale_max}) must exceed scale_min ({self.scale_min})")
        if self.translation_step < 1:
            raise ValueError(f"translation_step must be >= 1, got {self.translation_step}")
        if self.wavelet != "analytic_morlet":
            raise ValueError(f"unsupported wavelet {self.wavelet!r}")
        if not self.support_radius > 0:
            raise ValueError("support_radius must be positive")

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.scale_min, self.scale_max + 1)

    def n_columns(self, m: int) -> int:
        return -(-m // self.translation_step)

    def half_width(self, scale: int) -> int:
        return int(math.floor(self.support_radius * scale))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def wavelet_eval(t, omega0: float = 6.0):
    """Analytic Morlet wavelet pi**-0.25 * exp(j*omega0*t) * exp(-t**2/2)."""
    t = np.asarray(t, dtype=np.float64)
    out = np.pi**-0.25 * np.exp(1j * omega0 * t) * np.exp(-0.5 * t * t)
    return out if out.ndim else complex(out)


def scale_to_frequency(scale, omega0: float, sample_rate_hz: float):
    """Centre frequency in Hz of a scale; used for axis labels only."""
    return omega0 / (2 * np.pi) * sample_rate_hz / np.asarray(scale, dtype=np.float64)


def kernel(scale: int, config: CwtConfig) -> np.ndarray:
    """``conj(psi(j/a)) / sqrt(a)`` for offsets j = -J..J."""
    half = config.half_width(scale)
    j = np.arange(-half, half + 1)
    return np.conj(wavelet_eval(j / scale, config.omega0)) / math.sqrt(scale)


def _validate(signal: AudioSignal, config: CwtConfig) -> np.ndarray:
    x = np.asarray(signal.samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("signal must be non-empty")
    return x


def _scale_groups(config: CwtConfig, group_size: int = 16) -> list[np.ndarray]:
    scales = config.scales
    return [scales[i : i + group_size] for i in range(0, len(scales), group_size)]


def _group_taps(group: np.ndarray, config: CwtConfig) -> np.ndarray:
    """Kernels of one scale group as real columns [re_0, im_0, re_1, ...], centred."""
    half_g = config.half_width(int(group[-1]))
    taps = np.zeros((2 * half_g + 1, 2 * len(group)))
    for i, a in enumerate(group):
        ker = kernel(int(a), config)
        off = half_g - (ker.size - 1) // 2
        taps[off : off + ker.size, 2 * i] = ker.real
        taps[off : off + ker.size, 2 * i + 1] = ker.imag
    return taps


def cwt_direct(signal: AudioSignal, config: CwtConfig) -> np.ndarray:
    """Coefficients by explicit summation, shape (n_scales, ceil(M/step)).

    Each output column is the dot product of the zero-padded signal window
    around the translation with the sampled kernel. Scales are batched in
    groups so a block of columns costs one matrix product per group.
    """
    x = _validate(signal, config)
    step = config.translation_step
    n_cols = config.n_columns(x.size)
    max_half = config.half_width(config.scale_max)
    xp = np.pad(x, (max_half, max_half))
    out = np.empty((len(config.scales), n_cols), dtype=np.complex128)
    row = 0
    for group in _scale_groups(config):
        taps = _group_taps(group, config)
        width = taps.shape[0]
        off = max_half - (width - 1) // 2
        windows = np.lib.stride_tricks.sliding_window_view(xp[off:], width)[::step][:n_cols]
        block = max(1, _DIRECT_BLOCK_ELEMS // width)
        for start in range(0, n_cols, block):
            stop = min(n_cols, start + block)
            res = np.ascontiguousarray(windows[start:stop]) @ taps
            out[row : row + len(group), start:stop] = (res[:, 0::2] + 1j * res[:, 1::2]).T
        row += len(group)
    return out


def cwt_fft(signal: AudioSignal, config: CwtConfig) -> np.ndarray:
    """Coefficients by FFT convolution with the time-reversed conjugate kernel."""
    x = _validate(signal, config)
    m = x.size
    step = config.translation_step
    max_half = config.half_width(config.scale_max)
    length = scipy.fft.next_fast_len(m + 2 * max_half)
    x_f = scipy.fft.fft(x, length)
    out = np.empty((len(config.scales), config.n_columns(m)), dtype=np.complex128)
    for row, a in enumerate(config.scales):
        ker = kernel(int(a), config)
        half = (ker.size - 1) // 2
        y = scipy.fft.ifft(x_f * scipy.fft.fft(ker[::-1], length))
        out[row] = y[half : half + m : step]
    return out


def _direct_cost(m: int, config: CwtConfig) -> float:
    dense_taps = sum((2 * config.half_width(int(g[-1])) + 1) * len(g) for g in _scale_groups(config))
    return config.n_columns(m) * dense_taps


def _fft_cost(m: int, config: CwtConfig) -> float:
    length = scipy.fft.next_fast_len(m + 2 * config.half_width(config.scale_max))
    # one FFT/IFFT pair per scale costs ~12x a dense tap per L*log2(L) (measured)
    return len(config.scales) * length * math.log2(length) * 12.0


def choose_method(m: int, config: CwtConfig) -> str:
    return "direct" if _direct_cost(m, config) <= _fft_cost(m, config) else "fft"


def cwt(signal: AudioSignal, config: CwtConfig, method: str = "auto") -> np.ndarray:
    """Dispatch to ``cwt_direct`` or ``cwt_fft``; ``method`` may force either."""
    if method == "auto":
        method = choose_method(len(signal.samples), config)
    if method == "direct":
        return cwt_direct(signal, config)
    if method == "fft":
        return cwt_fft(signal, config)
    raise ValueError(f"unknown method {method!r}")


def scalogram(coeffs: np.ndarray, config: CwtConfig, sample_rate_hz: int) -> TfMatrix:
    coeffs = np.asarray(coeffs)
    n_scales = len(config.scales)
    if coeffs.ndim != 2 or coeffs.shape[0] != n_scales:
        raise ValueError(f"expected coefficients with {n_scales} rows, got shape {coeffs.shape}")
    return TfMatrix(
        values=coeffs.real**2 + coeffs.imag**2,
        row_axis="scale",
        row_coords=config.scales.astype(np.float64),
        time_step_s=config.translation_step / sample_rate_hz,
        kind="scalogram",
        config={"transform": "cwt", **config.to_dict(), "sample_rate_hz": int(sample_rate_hz)},
    )


def scalogram_of(signal: AudioSignal, config: CwtConfig | None = None, method: str = "auto") -> TfMatrix:
    config = config or CwtConfig()
    return scalogram(cwt(signal, config, method), config, signal.sample_rate_hz)
