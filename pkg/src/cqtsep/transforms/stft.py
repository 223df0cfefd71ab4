from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from ..errors import InvalidInput, InvalidParameters, NonInvertibleParameters
from ..signal import Signal
from .tfrep import TFRep

STFT_WINDOWS = ("hann", "hamming", "blackman", "cosine", "boxcar")


@dataclass(frozen=True)
class StftConfig:
    window_size: int = 256
    hop: int = 64
    window_kind: str = "hann"

    def __post_init__(self):
        if int(self.window_size) != self.window_size or self.window_size < 2:
            raise InvalidParameters(f"window_size must be an integer >= 2, got {self.window_size}")
        if int(self.hop) != self.hop or not 0 < self.hop <= self.window_size:
            raise InvalidParameters(f"hop must satisfy 0 < hop <= window_size, got {self.hop}")
        if self.window_kind not in STFT_WINDOWS:
            raise InvalidParameters(f"window_kind must be one of {STFT_WINDOWS}, got {self.window_kind!r}")
        object.__setattr__(self, "window_size", int(self.window_size))
        object.__setattr__(self, "hop", int(self.hop))

    def window(self) -> np.ndarray:
        # periodic (DFT-even) windows are the ones that overlap-add to a constant
        return get_window(self.window_kind, self.window_size, fftbins=True)

    def describe(self) -> str:
        return f"stft(window={self.window_kind},size={self.window_size},hop={self.hop})"


def check_overlap_add(config: StftConfig) -> None:
    """Raise unless the overlapped squared window stays positive at this hop.

    That is exactly the condition for the least-squares overlap-add inverse
    to recover every sample.
    """
    w2 = config.window() ** 2
    hop = config.hop
    period = np.zeros(hop)
    for start in range(0, config.window_size, hop):
        chunk = w2[start : start + hop]
        period[: chunk.size] += chunk
    if period.min() <= 1e-10 * period.max():
        raise NonInvertibleParameters(
            f"{config.window_kind} window of {config.window_size} samples with hop {config.hop} "
            "leaves samples uncovered by the overlapped windows"
        )


def _layout(length: int, config: StftConfig) -> tuple[int, int, int]:
    pad = config.window_size // 2
    span = length + 2 * pad
    n_frames = 1 + max(0, -(-(span - config.window_size) // config.hop))
    total = (n_frames - 1) * config.hop + config.window_size
    return pad, n_frames, total


def stft(signal: Signal, window_size: int = 256, hop: int = 64, window_kind: str = "hann") -> TFRep:
    """Centered STFT; the signal is zero-padded by half a window at both ends."""
    config = StftConfig(window_size, hop, window_kind)
    x = signal.samples
    pad, n_frames, total = _layout(x.size, config)
    padded = np.zeros(total)
    padded[pad : pad + x.size] = x
    frames = np.lib.stride_tricks.sliding_window_view(padded, config.window_size)[:: config.hop]
    coeffs = np.fft.rfft(frames * config.window(), axis=1).T
    return TFRep(
        coeffs=coeffs,
        axis="linear",
        sample_rate=signal.sample_rate,
        signal_length=x.size,
        frame_rate=signal.sample_rate / config.hop,
        frequencies=np.arange(config.window_size // 2 + 1) * signal.sample_rate / config.window_size,
        stft=config,
    )


def istft(tf: TFRep, window_size: int = 256, hop: int = 64, window_kind: str = "hann",
          length: int | None = None) -> Signal:
    """Least-squares overlap-add inverse of :func:`stft`."""
    config = StftConfig(window_size, hop, window_kind)
    check_overlap_add(config)
    length = tf.signal_length if length is None else int(length)
    pad, n_frames, total = _layout(length, config)
    if tf.coeffs.shape != (config.window_size // 2 + 1, n_frames):
        raise InvalidInput(
            f"coefficient shape {tf.coeffs.shape} does not match "
            f"{(config.window_size // 2 + 1, n_frames)} for length {length}"
        )
    w = config.window()
    frames = np.fft.irfft(tf.coeffs.T, config.window_size, axis=1) * w
    out = np.zeros(total)
    envelope = np.zeros(total)
    for i in range(n_frames):
        start = i * config.hop
        out[start : start + config.window_size] += frames[i]
        envelope[start : start + config.window_size] += w**2
    nonzero = envelope > 1e-12 * envelope.max()
    out[nonzero] /= envelope[nonzero]
    out[~nonzero] = 0.0
    return Signal(out[pad : pad + length], tf.sample_rate)
