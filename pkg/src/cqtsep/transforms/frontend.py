"""Interchangeable time-frequency front-ends and the named CQT presets."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

from ..errors import InvalidInput
from ..signal import Signal
from .cqt import CqtParams, FilterBank, design_filterbank, forward_cqt, inverse_cqt
from .stft import StftConfig, istft, stft
from .tfrep import TFRep

PRESETS = {
    "paper-optimal": CqtParams(
        bins_per_octave=36, gamma=20.0, f_min=27.5, sample_rate=8000.0,
        window_kind="hamming", block_length=None,
    ),
    "paper-standard": CqtParams(
        bins_per_octave=36, gamma=20.0, f_min=110.0, sample_rate=8000.0,
        window_kind="cosine", block_length=1.0,
    ),
}


@lru_cache(maxsize=32)
def _filterbank(params: CqtParams) -> FilterBank:
    return design_filterbank(params)


@dataclass(frozen=True)
class StftFrontend:
    config: StftConfig = StftConfig()

    def forward(self, signal: Signal) -> TFRep:
        c = self.config
        return stft(signal, c.window_size, c.hop, c.window_kind)

    def inverse(self, tf: TFRep, length: int) -> Signal:
        c = self.config
        return istft(tf, c.window_size, c.hop, c.window_kind, length)

    def describe(self) -> str:
        return self.config.describe()


@dataclass(frozen=True)
class CqtFrontend:
    params: CqtParams

    @property
    def filterbank(self) -> FilterBank:
        return _filterbank(self.params)

    def at_rate(self, sample_rate: float) -> "CqtFrontend":
        if sample_rate == self.params.sample_rate:
            return self
        return CqtFrontend(replace(self.params, sample_rate=sample_rate))

    def forward(self, signal: Signal) -> TFRep:
        return forward_cqt(signal, self.at_rate(signal.sample_rate).filterbank)

    def inverse(self, tf: TFRep, length: int) -> Signal:
        return inverse_cqt(tf, self.at_rate(tf.sample_rate).filterbank, length)

    def describe(self) -> str:
        return self.params.describe()


def as_frontend(value) -> StftFrontend | CqtFrontend:
    """Accept a front-end, bare CqtParams/StftConfig, or a preset name."""
    if isinstance(value, (StftFrontend, CqtFrontend)):
        return value
    if isinstance(value, CqtParams):
        return CqtFrontend(value)
    if isinstance(value, StftConfig):
        return StftFrontend(value)
    if isinstance(value, str):
        if value == "stft":
            return StftFrontend()
        if value in PRESETS:
            return CqtFrontend(PRESETS[value])
    raise InvalidInput(f"cannot interpret {value!r} as a front-end")
