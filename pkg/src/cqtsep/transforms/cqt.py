"""Invertible constant-Q transform built on a painless nonstationary Gabor frame.

Band windows live in the frequency domain. Band ``k`` is centred at
``center_freqs[k]`` with support ``bandwidths[k]`` (never narrower than
``min_support_bins`` FFT bins), and every band is resampled to the same number
of time frames, so the coefficients form a rectangular ``(K + 2, frames)``
matrix. Only bands 0..K+1 (DC up to Nyquist) are kept; the mirrored bands of
a real signal follow from Hermitian symmetry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import next_fast_len

from ..errors import (
    InvalidInput,
    InvalidParameters,
    NonInvertibleDesign,
    NonInvertibleFrame,
    WindowTooLong,
)
from ..signal import Signal
from .tfrep import TFRep
from .windows import WINDOW_KINDS, symmetric_window, window_shape

FRAME_EPS = 1e-10
MIN_SUPPORT_BINS = 4


@dataclass(frozen=True)
class CqtParams:
    bins_per_octave: int = 24
    gamma: float = 0.0
    f_min: float = 27.5
    sample_rate: float = 8000.0
    window_kind: str = "hann"
    block_length: float | None = None  # seconds; None transforms the whole signal

    def __post_init__(self):
        if int(self.bins_per_octave) != self.bins_per_octave or self.bins_per_octave < 1:
            raise InvalidParameters(f"bins_per_octave must be an integer >= 1, got {self.bins_per_octave}")
        object.__setattr__(self, "bins_per_octave", int(self.bins_per_octave))
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise InvalidParameters(f"gamma must be finite and >= 0, got {self.gamma}")
        if not self.sample_rate > 0:
            raise InvalidParameters(f"sample_rate must be positive, got {self.sample_rate}")
        if not 0 < self.f_min < self.sample_rate / 2:
            raise InvalidParameters(
                f"f_min must lie in (0, {self.sample_rate / 2}) Hz, got {self.f_min}"
            )
        if self.window_kind not in WINDOW_KINDS:
            raise InvalidParameters(f"window_kind must be one of {WINDOW_KINDS}, got {self.window_kind!r}")
        if self.block_length is not None:
            if not self.block_length > 0 or round(self.block_length * self.sample_rate) < 1:
                raise InvalidParameters(f"block_length must be positive, got {self.block_length}")

    @property
    def block_samples(self) -> int | None:
        if self.block_length is None:
            return None
        return int(round(self.block_length * self.sample_rate))

    @property
    def alpha(self) -> float:
        b = self.bins_per_octave
        return 2.0 ** (1.0 / b) - 2.0 ** (-1.0 / b)

    def describe(self) -> str:
        block = "whole" if self.block_length is None else f"{self.block_length:g}s"
        return (
            f"cqt(B={self.bins_per_octave},gamma={self.gamma:g},window={self.window_kind},"
            f"f_min={self.f_min:g},block={block})"
        )


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Band layout for real signals: index 0 is DC, 1..K geometric, K+1 Nyquist.

    ``band_gains`` scales each band's window; a gain of zero removes the band.
    """

    params: CqtParams
    center_freqs: np.ndarray
    bandwidths: np.ndarray
    K: int
    q_factor: float
    alpha: float
    band_gains: np.ndarray
    min_support_bins: int = MIN_SUPPORT_BINS
    grid_length: int | None = None  # FFT length the default windows are sampled on

    @property
    def sample_rate(self) -> float:
        return self.params.sample_rate

    @property
    def n_bands(self) -> int:
        return self.K + 2

    def sampled(self, n_fft: int) -> "SampledFrame":
        return _sample_frame(self, int(n_fft))

    def _default_frame(self) -> "SampledFrame":
        if self.grid_length is None:
            raise InvalidInput(
                "filterbank has no default grid; pass signal_length to design_filterbank "
                "or call sampled(n_fft)"
            )
        return self.sampled(self.grid_length)

    @property
    def freq_windows(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per band, (FFT bin indices, window values) on the default grid."""
        return self._default_frame().windows

    @property
    def per_band_frames(self) -> np.ndarray:
        return self._default_frame().support_bins

    def with_band_gains(self, gains) -> "FilterBank":
        gains = np.asarray(gains, dtype=np.float64)
        if gains.shape != (self.n_bands,):
            raise InvalidInput(f"need {self.n_bands} gains, got shape {gains.shape}")
        return FilterBank(
            self.params, self.center_freqs, self.bandwidths, self.K, self.q_factor,
            self.alpha, gains, self.min_support_bins, self.grid_length,
        )


@dataclass(frozen=True, eq=False)
class SampledFrame:
    n_fft: int
    n_frames: int
    band_idx: np.ndarray
    slot_idx: np.ndarray
    bin_idx: np.ndarray
    weights: np.ndarray
    diagonal: np.ndarray
    support_bins: np.ndarray
    windows: list
    hz_per_bin: float

    def dual_weights(self) -> np.ndarray:
        s = self.diagonal
        threshold = FRAME_EPS * s.max() if s.max() > 0 else FRAME_EPS
        bad = np.flatnonzero(s < threshold)
        if bad.size:
            hz = bad * self.hz_per_bin
            raise NonInvertibleFrame(
                f"frame diagonal vanishes at {bad.size} of {s.size} bins "
                f"(first at {hz[0]:.3f} Hz)"
            )
        return self.weights / s[self.bin_idx]


def design_filterbank(params: CqtParams, signal_length: int | None = None) -> FilterBank:
    """Lay out the band centres and bandwidths for ``params``.

    Geometric bands run from ``f_min`` upward in steps of 2**(1/B) while they
    stay at or below Nyquist. Bandwidths follow ``alpha * f + gamma``.
    """
    fs = params.sample_rate
    nyq = fs / 2
    B = params.bins_per_octave
    # integer count, then guard against log2 round-off at an exact boundary
    K = int(math.floor(B * math.log2(nyq / params.f_min))) + 1
    while K > 1 and params.f_min * 2.0 ** ((K - 1) / B) > nyq:
        K -= 1
    while params.f_min * 2.0 ** (K / B) <= nyq:
        K += 1

    k = np.arange(1, K + 1)
    ladder = params.f_min * 2.0 ** ((k - 1) / B)
    alpha = params.alpha
    centers = np.concatenate(([0.0], ladder, [nyq]))
    nyq_width = fs - 2 * ladder[-1]
    if nyq_width <= 0:
        # top geometric band sits exactly on Nyquist
        nyq_width = alpha * ladder[-1] + params.gamma
    widths = np.concatenate(([2 * params.f_min], alpha * ladder + params.gamma, [nyq_width]))

    grid = None
    if params.block_samples is not None:
        grid = next_fast_len(params.block_samples, real=True)
    elif signal_length is not None:
        grid = next_fast_len(int(signal_length), real=True)

    fb = FilterBank(
        params=params,
        center_freqs=centers,
        bandwidths=widths,
        K=K,
        q_factor=1.0 / alpha,
        alpha=alpha,
        band_gains=np.ones(K + 2),
        grid_length=grid,
    )
    _check_coverage(fb)
    return fb


def _check_coverage(fb: FilterBank) -> None:
    # open supports must overlap; merely touching edges leaves a zero in the diagonal
    lo = fb.center_freqs - fb.bandwidths / 2
    hi = fb.center_freqs + fb.bandwidths / 2
    active = fb.band_gains > 0
    nyq = fb.sample_rate / 2
    reach = 0.0
    for a, b in sorted(zip(lo[active], hi[active])):
        if reach > nyq:
            break
        if a >= reach:
            raise NonInvertibleDesign(f"no band covers {reach:.4f} Hz")
        reach = max(reach, b)
    if reach <= nyq:
        raise NonInvertibleDesign(f"bands stop at {reach:.4f} Hz, below Nyquist")


@lru_cache(maxsize=64)
def _sample_frame(fb: FilterBank, n_fft: int) -> SampledFrame:
    fs = fb.sample_rate
    hz = fs / n_fft
    n_bins = n_fft // 2 + 1
    freqs = np.arange(n_bins) * hz
    kind = fb.params.window_kind

    windows = []
    support = np.zeros(fb.n_bands, dtype=int)
    for k in range(fb.n_bands):
        width = max(fb.bandwidths[k], fb.min_support_bins * hz)
        center = fb.center_freqs[k]
        lo = max(0, int(math.floor((center - width / 2) / hz)))
        hi = min(n_bins - 1, int(math.ceil((center + width / 2) / hz)))
        j = np.arange(lo, hi + 1)
        u = (freqs[j] - center) / width + 0.5
        keep = (u > 0) & (u < 1)
        j = j[keep]
        g = fb.band_gains[k] * window_shape(kind, u[keep])
        windows.append((j, g))
        # slots needed to hold the full two-sided support without aliasing
        support[k] = int(math.ceil(width / hz)) + 1

    n_frames = next_fast_len(int(support.max()))
    band_idx, slot_idx, bin_idx, weights = [], [], [], []
    for k, (j, g) in enumerate(windows):
        center_bin = int(round(fb.center_freqs[k] / hz))
        band_idx.append(np.full(j.size, k))
        slot_idx.append((j - center_bin) % n_frames)
        bin_idx.append(j)
        weights.append(g)
    band_idx = np.concatenate(band_idx)
    bin_idx = np.concatenate(bin_idx)
    weights = np.concatenate(weights)
    diagonal = np.bincount(bin_idx, weights=weights**2, minlength=n_bins)
    return SampledFrame(
        n_fft=n_fft,
        n_frames=n_frames,
        band_idx=band_idx,
        slot_idx=np.concatenate(slot_idx),
        bin_idx=bin_idx,
        weights=weights,
        diagonal=diagonal,
        support_bins=support,
        windows=windows,
        hz_per_bin=hz,
    )


def _blocks(x: np.ndarray, params: CqtParams) -> tuple[np.ndarray, int]:
    """Split ``x`` into rows of equal length (zero-padding the last one)."""
    size = params.block_samples or x.size
    n_blocks = -(-x.size // size)
    padded = np.zeros(n_blocks * size)
    padded[: x.size] = x
    return padded.reshape(n_blocks, size), size


def forward_cqt(signal: Signal, fb: FilterBank) -> TFRep:
    if signal.sample_rate != fb.sample_rate:
        raise InvalidInput(
            f"signal sample rate {signal.sample_rate} does not match filterbank {fb.sample_rate}"
        )
    blocks, size = _blocks(signal.samples, fb.params)
    frame = fb.sampled(next_fast_len(size, real=True))
    n_blocks = blocks.shape[0]
    M = frame.n_frames

    spectrum = np.fft.rfft(blocks, frame.n_fft, axis=1, norm="forward")
    stacked = np.zeros((n_blocks, fb.n_bands, M), dtype=complex)
    stacked[:, frame.band_idx, frame.slot_idx] = spectrum[:, frame.bin_idx] * frame.weights
    coeffs = np.fft.ifft(stacked, axis=2, norm="forward")
    coeffs = coeffs.transpose(1, 0, 2).reshape(fb.n_bands, n_blocks * M)

    return TFRep(
        coeffs=coeffs,
        axis="cq",
        sample_rate=signal.sample_rate,
        signal_length=len(signal),
        frame_rate=M * fb.sample_rate / frame.n_fft,
        frequencies=fb.center_freqs.copy(),
        filterbank=fb,
    )


def inverse_cqt(tf: TFRep, fb: FilterBank, length: int | None = None) -> Signal:
    length = tf.signal_length if length is None else int(length)
    if length < 1:
        raise InvalidInput(f"length must be positive, got {length}")
    size = fb.params.block_samples or length
    n_blocks = -(-length // size)
    frame = fb.sampled(next_fast_len(size, real=True))
    M = frame.n_frames
    expected = (fb.n_bands, n_blocks * M)
    if tf.coeffs.shape != expected:
        raise InvalidInput(f"coefficient shape {tf.coeffs.shape} does not match filterbank {expected}")
    if tf.sample_rate != fb.sample_rate:
        raise InvalidInput("TFRep sample rate does not match filterbank")
    dual = frame.dual_weights()

    stacked = tf.coeffs.reshape(fb.n_bands, n_blocks, M).transpose(1, 0, 2)
    slices = np.fft.fft(stacked, axis=2, norm="forward")
    picked = slices[:, frame.band_idx, frame.slot_idx] * dual
    n_bins = frame.n_fft // 2 + 1
    flat = (np.arange(n_blocks)[:, None] * n_bins + frame.bin_idx[None, :]).ravel()
    total = n_blocks * n_bins
    spectrum = (
        np.bincount(flat, weights=picked.real.ravel(), minlength=total)
        + 1j * np.bincount(flat, weights=picked.imag.ravel(), minlength=total)
    ).reshape(n_blocks, n_bins)
    blocks = np.fft.irfft(spectrum, frame.n_fft, axis=1, norm="forward")[:, :size]
    return Signal(blocks.ravel()[:length], fb.sample_rate)


def frame_diagonal(fb: FilterBank, grid_size: int) -> np.ndarray:
    """Frame operator diagonal on ``grid_size`` uniform points over [0, fs/2]."""
    if grid_size < 2 * fb.n_bands:
        raise InvalidInput(f"grid_size must be at least {2 * fb.n_bands}, got {grid_size}")
    return fb.sampled(2 * (int(grid_size) - 1)).diagonal.copy()


def direct_cqt_reference(signal: Signal, fb: FilterBank, frame_centers) -> np.ndarray:
    """Brute-force constant-Q coefficients, one windowed kernel per band.

    Row ``i`` holds geometric band ``k = i + 1``. Band ``k`` uses a window of
    ``round(fs * Q / f_k)`` samples centred on each frame position, a kernel
    completing exactly Q cycles across it, and a 1/N normalisation. Samples
    outside the signal count as zero.
    """
    if fb.params.gamma != 0:
        raise InvalidParameters("direct reference is only defined for gamma = 0")
    if signal.sample_rate != fb.sample_rate:
        raise InvalidInput("signal sample rate does not match filterbank")
    x = signal.samples
    centers = np.atleast_1d(np.asarray(frame_centers, dtype=int))
    if centers.size and (centers.min() < 0 or centers.max() >= x.size):
        raise InvalidInput("frame centres must lie inside the signal")

    Q = fb.q_factor
    geometric = fb.center_freqs[1 : fb.K + 1]
    lengths = np.round(fb.sample_rate * Q / geometric).astype(int)
    if lengths.max() > x.size:
        raise WindowTooLong(
            f"band at {geometric[lengths.argmax()]:.2f} Hz needs {lengths.max()} samples, "
            f"signal has {x.size}"
        )
    pad = int(lengths.max())
    xp = np.concatenate((np.zeros(pad), x, np.zeros(pad)))
    out = np.zeros((fb.K, centers.size), dtype=complex)
    for i, N in enumerate(lengths):
        n = np.arange(N)
        kernel = symmetric_window(fb.params.window_kind, N) * np.exp(-2j * np.pi * Q * n / N) / N
        starts = centers - N // 2 + pad
        segments = xp[starts[:, None] + n[None, :]]
        out[i] = segments @ kernel
    return out
