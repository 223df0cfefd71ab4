"""Oracle time-frequency masks and mask-based separation.

Masks are computed from reference magnitudes only; the mixture phase is
reused when a mask is applied.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .signal import Signal
from .transforms import TFRep, as_frontend
from .transforms.tfrep import to_bytes


@dataclass(frozen=True, eq=False)
class Mask:
    gains: np.ndarray
    axis: str
    sample_rate: float
    signal_length: int
    frame_rate: float
    frequencies: np.ndarray
    filterbank: object = None
    stft: object = None

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64)
        if g.ndim != 2:
            raise InvalidInput("mask gains must be a matrix")
        if np.any(g < 0) or np.any(g > 1):
            raise InvalidInput("mask gains must lie in [0, 1]")
        object.__setattr__(self, "gains", g)

    @classmethod
    def like(cls, tf: TFRep, gains) -> "Mask":
        return cls(gains, tf.axis, tf.sample_rate, tf.signal_length, tf.frame_rate, tf.frequencies,
                   tf.filterbank, tf.stft)

    @property
    def shape(self):
        return self.gains.shape

    def to_bytes(self) -> bytes:
        return to_bytes(self, real=True)


def _stack_magnitudes(refs: list[TFRep]) -> np.ndarray:
    if len(refs) < 2:
        raise InvalidInput(f"need at least 2 references, got {len(refs)}")
    first = refs[0]
    for r in refs[1:]:
        if not first.same_grid(r):
            raise InvalidInput(f"reference grids differ: {first.axis}{first.shape} vs {r.axis}{r.shape}")
    return np.stack([np.abs(r.coeffs) for r in refs])


def ideal_binary_masks(refs: list[TFRep]) -> list[Mask]:
    """One-hot masks for the dominant reference in each cell; ties go to the lowest index."""
    mags = _stack_magnitudes(refs)
    winner = np.argmax(mags, axis=0)
    return [Mask.like(refs[0], (winner == i).astype(np.float64)) for i in range(len(refs))]


def ideal_ratio_masks(refs: list[TFRep], exponent: float = 2.0) -> list[Mask]:
    """Energy-share masks |r_i|^p / sum_j |r_j|^p; all-zero cells are split evenly."""
    mags = _stack_magnitudes(refs) ** exponent
    total = mags.sum(axis=0)
    silent = total == 0
    share = np.divide(mags, total, out=np.zeros_like(mags), where=~silent)
    share[:, silent] = 1.0 / len(refs)
    return [Mask.like(refs[0], s) for s in share]


def apply_mask(mix: TFRep, mask: Mask) -> TFRep:
    if mix.axis != mask.axis or mix.shape != mask.shape:
        raise InvalidInput(f"mask {mask.axis}{mask.shape} does not align with {mix.axis}{mix.shape}")
    return mix.with_coeffs(mix.coeffs * mask.gains)


MASK_BUILDERS = {"ibm": ideal_binary_masks, "irm": ideal_ratio_masks}


def oracle_separate(mixture: Signal, refs: list[Signal], frontend, mask_kind: str = "ibm") -> list[Signal]:
    """Separate ``mixture`` with masks computed from the clean ``refs``."""
    if mask_kind not in MASK_BUILDERS:
        raise InvalidInput(f"mask_kind must be one of {sorted(MASK_BUILDERS)}, got {mask_kind!r}")
    for r in refs:
        if len(r) != len(mixture) or r.sample_rate != mixture.sample_rate:
            raise InvalidInput("references must match the mixture in length and sample rate")
    fe = as_frontend(frontend)
    mix_tf = fe.forward(mixture)
    masks = MASK_BUILDERS[mask_kind]([fe.forward(r) for r in refs])
    return [fe.inverse(apply_mask(mix_tf, m), len(mixture)) for m in masks]
