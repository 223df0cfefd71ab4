from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True, eq=False)
class Signal:
    """Mono waveform, float64 samples at linear full-scale amplitude."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise InvalidInput(f"signal must be 1-D, got shape {x.shape}")
        if x.size == 0:
            raise InvalidInput("signal is empty")
        if not self.sample_rate > 0:
            raise InvalidInput(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("signal contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate)
