"""Time-frequency coefficient container and its on-disk format.

Binary layout (all little-endian)::

    offset  size  field
    0       4     magic b"TFR1"
    4       1     axis kind: 0 = linear (STFT), 1 = cq
    5       1     flags: bit 0 set = real payload (masks), else complex
    6       2     reserved, zero
    8       4     rows (uint32)
    12      4     cols (uint32)
    16      8     sample rate, Hz (float64)
    24      8     signal length, samples (uint64)
    32      8     frame rate, frames per second (float64)
    40      40    five float64 axis parameters
                    linear: bin spacing Hz, window size, hop, window code, 0
                    cq:     bins per octave, gamma, f_min, block seconds (0 = whole), window code
    80      8*rows  row centre frequencies, Hz (float64)
    ...     payload, row-major; complex entries as interleaved (re, im) float64

Window codes: 0 hann, 1 hamming, 2 blackman, 3 cosine, 4 boxcar.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import FormatError, InvalidInput

MAGIC = b"TFR1"
HEADER = struct.Struct("<4sBBHIIdQd5d")
AXES = ("linear", "cq")
WINDOW_CODES = ("hann", "hamming", "blackman", "cosine", "boxcar")
FLAG_REAL = 1


@dataclass(frozen=True, eq=False)
class TFRep:
    """Complex coefficients, rows = frequency bands, columns = frames.

    For the ``cq`` axis ``filterbank`` points at the design that produced the
    coefficients; for ``linear`` the STFT settings sit in ``stft``.
    """

    coeffs: np.ndarray
    axis: str
    sample_rate: float
    signal_length: int
    frame_rate: float
    frequencies: np.ndarray
    filterbank: Any = None
    stft: Any = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidInput(f"axis must be one of {AXES}, got {self.axis!r}")
        c = np.asarray(self.coeffs)
        if c.ndim != 2 or c.shape[1] < 1:
            raise InvalidInput(f"coefficients must be a (bands, frames>=1) matrix, got {c.shape}")
        if self.signal_length < 1:
            raise InvalidInput("signal_length must be positive")
        if len(self.frequencies) != c.shape[0]:
            raise InvalidInput("one frequency per coefficient row is required")
        if self.axis == "cq" and self.filterbank is not None and c.shape[0] != self.filterbank.n_bands:
            raise InvalidInput(
                f"cq coefficients need {self.filterbank.n_bands} rows, got {c.shape[0]}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)

    def with_coeffs(self, coeffs) -> "TFRep":
        coeffs = np.asarray(coeffs)
        if coeffs.shape != self.coeffs.shape:
            raise InvalidInput(f"shape {coeffs.shape} does not match {self.coeffs.shape}")
        return TFRep(
            coeffs, self.axis, self.sample_rate, self.signal_length, self.frame_rate,
            self.frequencies, self.filterbank, self.stft,
        )

    def same_grid(self, other) -> bool:
        return self.axis == other.axis and tuple(self.shape) == tuple(other.shape)


def _axis_params(tf) -> tuple[float, ...]:
    if tf.axis == "linear" and tf.stft is not None:
        s = tf.stft
        return (tf.sample_rate / s.window_size, s.window_size, s.hop, WINDOW_CODES.index(s.window_kind), 0.0)
    if tf.axis == "cq" and tf.filterbank is not None:
        p = tf.filterbank.params
        return (p.bins_per_octave, p.gamma, p.f_min, p.block_length or 0.0, WINDOW_CODES.index(p.window_kind))
    return (0.0,) * 5


def to_bytes(tf, real: bool = False) -> bytes:
    """Serialize a TFRep (or a Mask, with ``real=True``) to the container format."""
    data = np.asarray(tf.gains if real else tf.coeffs)
    rows, cols = data.shape
    header = HEADER.pack(
        MAGIC, AXES.index(tf.axis), FLAG_REAL if real else 0, 0, rows, cols,
        float(tf.sample_rate), int(tf.signal_length), float(tf.frame_rate), *_axis_params(tf),
    )
    freqs = np.asarray(tf.frequencies, dtype="<f8").tobytes()
    if real:
        payload = np.ascontiguousarray(data, dtype="<f8").tobytes()
    else:
        payload = np.ascontiguousarray(data, dtype="<c16").tobytes()
    return header + freqs + payload


@dataclass(frozen=True)
class Container:
    """Decoded container contents."""

    axis: str
    real: bool
    sample_rate: float
    signal_length: int
    frame_rate: float
    axis_params: tuple
    frequencies: np.ndarray
    data: np.ndarray

    @property
    def window_kind(self) -> str:
        code = int(self.axis_params[3] if self.axis == "linear" else self.axis_params[4])
        return WINDOW_CODES[code]


def from_bytes(blob: bytes) -> Container:
    if len(blob) < HEADER.size or blob[:4] != MAGIC:
        raise FormatError("not a TFR1 container")
    magic, axis, flags, _, rows, cols, sr, length, rate, *axis_params = HEADER.unpack_from(blob)
    if axis >= len(AXES):
        raise FormatError(f"unknown axis code {axis}")
    real = bool(flags & FLAG_REAL)
    width = 8 if real else 16
    expected = HEADER.size + 8 * rows + width * rows * cols
    if len(blob) != expected:
        raise FormatError(f"container size {len(blob)} does not match header ({expected})")
    off = HEADER.size
    freqs = np.frombuffer(blob, dtype="<f8", count=rows, offset=off).astype(np.float64)
    off += 8 * rows
    dtype = "<f8" if real else "<c16"
    data = np.frombuffer(blob, dtype=dtype, count=rows * cols, offset=off).reshape(rows, cols)
    return Container(
        AXES[axis], real, sr, length, rate, tuple(axis_params), freqs,
        data.astype(np.float64 if real else np.complex128),
    )


def save_tfrep(path, tf) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(tf))


def load_tfrep(path) -> Container:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def magnitude_csv(tf) -> str:
    """Magnitudes as CSV: first column row frequency in Hz, then one column per frame."""
    mags = np.abs(np.asarray(tf.coeffs))
    lines = ["freq_hz," + ",".join(f"t{i}" for i in range(mags.shape[1]))]
    for f, row in zip(tf.frequencies, mags):
        lines.append(repr(float(f)) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
