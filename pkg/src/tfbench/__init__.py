"""Spectrogram vs scalogram comparison toolkit.

Normalization, STFT and CWT energy matrices, heatmap rendering, a small
numpy CNN, AUC-ROC evaluation and transform cost benchmarks.
"""

from tfbench.signal import AudioSignal, SynthSpec, load_wav, peak_normalize, save_wav, synthesize
from tfbench.stft import StftConfig, TfMatrix, power_spectrogram, stft
from tfbench.cwt import CwtConfig, cwt, cwt_direct, cwt_fft, scalogram

__version__ = "0.1.0"

__all__ = [
    "AudioSignal",
    "SynthSpec",
    "load_wav",
    "save_wav",
    "peak_normalize",
    "synthesize",
    "StftConfig",
    "TfMatrix",
    "stft",
    "power_spectrogram",
    "CwtConfig",
    "cwt",
    "cwt_direct",
    "cwt_fft",
    "scalogram",
]
