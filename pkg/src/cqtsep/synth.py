"""Speech-like test material: voiced harmonic syllables plus breath noise.

Stands in for licensed speech corpora. Each speaker has its own pitch range
and formant scale; each utterance is a run of syllables with a gliding f0,
per-syllable vowel formants, and short unvoiced noise bursts between them.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import write_wav
from .signal import Signal

# (F1, F2, F3) in Hz for a handful of vowels
VOWELS = np.array([
    [730, 1090, 2440],
    [530, 1840, 2480],
    [270, 2290, 3010],
    [570, 840, 2410],
    [300, 870, 2240],
    [660, 1720, 2410],
])


def _formant_gain(freqs: np.ndarray, formants: np.ndarray, bandwidth: float = 90.0) -> np.ndarray:
    gain = np.zeros_like(freqs)
    for f in formants:
        gain += 1.0 / (1.0 + ((freqs - f) / bandwidth) ** 2)
    return gain + 0.02


def speech_like(duration: float, sample_rate: float, f0: float, formant_scale: float,
                rng: np.random.Generator) -> np.ndarray:
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate

    # syllable layout: voiced segments separated by short gaps
    envelope = np.zeros(n)
    vowel_track = np.zeros((n, 3))
    pos = int(rng.uniform(0.02, 0.1) * sample_rate)
    while pos < n:
        length = int(rng.uniform(0.12, 0.28) * sample_rate)
        gap = int(rng.uniform(0.03, 0.12) * sample_rate)
        end = min(pos + length, n)
        seg = np.arange(end - pos)
        envelope[pos:end] = np.sin(np.pi * (seg + 0.5) / length) ** 0.6 * rng.uniform(0.5, 1.0)
        vowel_track[pos:end] = VOWELS[rng.integers(len(VOWELS))] * formant_scale
        pos = end + gap

    contour = f0 * (1 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.3, 0.8) * t + rng.uniform(0, 2 * np.pi)))
    contour *= np.exp(np.cumsum(rng.standard_normal(n)) * 2e-4)
    phase = 2 * np.pi * np.cumsum(contour) / sample_rate

    voiced = np.zeros(n)
    n_harm = int(sample_rate / 2 / f0 / 1.15)
    for h in range(1, n_harm + 1):
        freq = h * contour
        amp = _formant_gain(freq, vowel_track.T) / h**0.5
        amp[freq >= sample_rate / 2 * 0.95] = 0.0
        voiced += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    voiced *= envelope

    noise = rng.standard_normal(n)
    unvoiced_env = np.convolve((envelope == 0).astype(float), np.hanning(201) / 100, mode="same")
    hiss = np.diff(noise, prepend=0.0) * 0.15 * unvoiced_env
    breath = 0.01 * noise
    y = voiced / (np.max(np.abs(voiced)) + 1e-12) + hiss + breath
    return 0.5 * y / np.max(np.abs(y))


def make_speaker_tree(out_dir, n_speakers: int = 4, utterances: int = 3, duration: float = 2.0,
                      sample_rate: int = 16000, seed: int = 0) -> Path:
    """Write ``out_dir/spk<i>/utt<j>.wav`` (PCM-16) for a synthetic speaker set."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    for s in range(n_speakers):
        low_voice = s % 2 == 0
        f0 = rng.uniform(95, 140) if low_voice else rng.uniform(180, 250)
        scale = rng.uniform(0.9, 1.0) if low_voice else rng.uniform(1.1, 1.2)
        for u in range(utterances):
            x = speech_like(duration, sample_rate, f0 * rng.uniform(0.95, 1.05), scale, rng)
            write_wav(out_dir / f"spk{s}" / f"utt{u}.wav", Signal(x, sample_rate), fmt="pcm16")
    return out_dir
