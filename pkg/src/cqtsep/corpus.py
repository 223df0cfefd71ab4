"""Audio I/O, resampling and two-speaker mixture corpora.

Manifest format: UTF-8 text, one mixture per line, tab-separated::

    id <TAB> mixture_path <TAB> ref1_path <TAB> ref2_path <TAB> snr_db <TAB> seed

Paths are relative to the manifest's directory (absolute paths are also
accepted on read). ``snr_db`` is the level of ref1 over ref2 in dB, written
with ``repr`` so it round-trips exactly. ``seed`` is the corpus seed; record
``i`` draws its speakers, utterances and SNR from
``numpy.random.default_rng([seed, i])``. Blank lines and lines starting with
``#`` are ignored.
"""
from __future__ import annotations

import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import firwin, resample_poly

from ._io import atomic_write_bytes, atomic_write_text
from .errors import FormatError, InsufficientData, InvalidInput
from .signal import Signal

TARGET_RATE = 8000
MANIFEST_NAME = "manifest.tsv"


# -- WAV ---------------------------------------------------------------------

def read_wav(path) -> Signal:
    """Read a mono PCM-16 or float-32 WAV file."""
    try:
        with warnings.catch_warnings():
            # unknown metadata chunks are skipped, which is what we want
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(os.fspath(path))
    except FileNotFoundError:
        raise
    except (ValueError, EOFError, OSError) as exc:
        raise FormatError(f"{path}: unreadable WAV ({exc})") from exc
    if data.ndim == 2:
        if data.shape[1] != 1:
            raise FormatError(f"{path}: {data.shape[1]} channels, only mono is supported")
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise FormatError(f"{path}: sample format {data.dtype} unsupported (PCM-16 or float-32 only)")
    if samples.size == 0:
        raise FormatError(f"{path}: no samples")
    if not np.all(np.isfinite(samples)):
        raise FormatError(f"{path}: non-finite samples")
    return Signal(samples, float(rate))


def wav_bytes(signal: Signal, fmt: str = "float32") -> bytes:
    if signal.sample_rate != int(signal.sample_rate):
        raise InvalidInput(f"WAV needs an integer sample rate, got {signal.sample_rate}")
    if fmt == "float32":
        data = signal.samples.astype(np.float32)
    elif fmt == "pcm16":
        data = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        raise InvalidInput(f"fmt must be 'float32' or 'pcm16', got {fmt!r}")
    buf = io.BytesIO()
    wavfile.write(buf, int(signal.sample_rate), data)
    return buf.getvalue()


def write_wav(path, signal: Signal, fmt: str = "float32") -> None:
    atomic_write_bytes(path, wav_bytes(signal, fmt))


# -- resampling --------------------------------------------------------------

def _rate_ratio(source: float, target: float) -> Fraction:
    if source == int(source) and target == int(target):
        return Fraction(int(target), int(source))
    return (Fraction(target) / Fraction(source)).limit_denominator(10_000)


def resample(signal: Signal, target_rate: float) -> Signal:
    """Polyphase resampling with a Kaiser-windowed sinc lowpass.

    The lowpass sits at 95% of the lower Nyquist rate and is long enough to
    keep the passband flat (well under 0.1 dB) up to 45% of the target rate.
    """
    if not target_rate > 0:
        raise InvalidInput(f"target rate must be positive, got {target_rate}")
    if target_rate == signal.sample_rate:
        return signal
    ratio = _rate_ratio(signal.sample_rate, target_rate)
    up, down = ratio.numerator, ratio.denominator
    m = max(up, down)
    taps = firwin(128 * m + 1, 0.95 / m, window=("kaiser", 9.0))
    y = resample_poly(signal.samples, up, down, window=taps)
    n_out = int(round(len(signal) * target_rate / signal.sample_rate))
    if y.size < n_out:
        y = np.concatenate((y, np.zeros(n_out - y.size)))
    return Signal(y[:n_out], float(target_rate))


# -- mixing ------------------------------------------------------------------

def energy(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x, x))


def snr_db(s1, s2) -> float:
    return 10.0 * math.log10(energy(s1) / energy(s2))


def mix_pair(s1: Signal, s2: Signal, snr: float) -> tuple[Signal, tuple[Signal, Signal]]:
    """Mix two sources with ``s1`` sitting ``snr`` dB above ``s2``.

    Both are truncated to the shorter length. If the mixture would clip, the
    mixture and both scaled references are attenuated by the same factor.
    Returns ``(mixture, (ref1, ref2))`` with ``mixture == ref1 + ref2``.
    """
    if s1.sample_rate != s2.sample_rate:
        raise InvalidInput(f"sample rates differ: {s1.sample_rate} vs {s2.sample_rate}")
    if not math.isfinite(snr):
        raise InvalidInput(f"snr must be finite, got {snr}")
    n = min(len(s1), len(s2))
    a = s1.samples[:n]
    b = s2.samples[:n]
    ea, eb = energy(a), energy(b)
    if ea == 0 or eb == 0:
        raise InvalidInput("cannot mix an all-zero source")
    gain = math.sqrt(ea / (eb * 10.0 ** (snr / 10.0)))
    peak = float(np.max(np.abs(a + gain * b)))
    scale = 1.0 / peak if peak > 1.0 else 1.0
    r1 = a * scale
    r2 = b * (gain * scale)
    rate = s1.sample_rate
    return Signal(r1 + r2, rate), (Signal(r1, rate), Signal(r2, rate))


# -- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class MixtureRecord:
    id: str
    mixture_path: Path
    ref_paths: tuple[Path, ...]
    snr_db: float
    seed: int

    def line(self, base: Path) -> str:
        def rel(p: Path) -> str:
            try:
                return Path(os.path.relpath(p, base)).as_posix()
            except ValueError:
                return Path(p).as_posix()

        fields = [self.id, rel(self.mixture_path), *(rel(p) for p in self.ref_paths),
                  repr(float(self.snr_db)), str(int(self.seed))]
        return "\t".join(fields)

    def missing_files(self) -> list[Path]:
        return [p for p in (self.mixture_path, *self.ref_paths) if not Path(p).is_file()]


def write_manifest(path, records: list[MixtureRecord]) -> Path:
    path = Path(path)
    base = path.parent.resolve()
    text = "".join(r.line(base) + "\n" for r in records)
    atomic_write_text(path, text)
    return path


def read_manifest(path, validate: bool = True) -> list[MixtureRecord]:
    """Parse a manifest; with ``validate`` every referenced file must exist."""
    path = Path(path)
    base = path.parent.resolve()
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 tab-separated fields, got {len(fields)}")
            rid, mix, ref1, ref2, snr, seed = fields
            try:
                snr_value = float(snr)
                seed_value = int(seed)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if not math.isfinite(snr_value):
                raise FormatError(f"{path}:{lineno}: snr_db must be finite")
            records.append(MixtureRecord(
                rid, base / mix, (base / ref1, base / ref2), snr_value, seed_value,
            ))
    if validate:
        missing = [str(p) for r in records for p in r.missing_files()]
        if missing:
            raise InvalidInput(f"{len(missing)} manifest file(s) missing, first: {missing[0]}")
    return records


def load_record(record: MixtureRecord) -> tuple[Signal, list[Signal]]:
    mixture = read_wav(record.mixture_path)
    refs = [read_wav(p) for p in record.ref_paths]
    return mixture, refs


# -- corpus building ---------------------------------------------------------

def list_speakers(source_dir) -> dict[str, list[Path]]:
    """Speaker name -> sorted WAV files, for every subdirectory holding any."""
    source_dir = Path(source_dir)
    if not source_dir.is_dir():
        raise InsufficientData(f"{source_dir} is not a directory")
    speakers = {}
    for d in sorted(p for p in source_dir.iterdir() if p.is_dir()):
        wavs = sorted(d.rglob("*.wav"))
        if wavs:
            speakers[d.name] = wavs
    return speakers


def _draw(seed: int, index: int, speakers: list[str], n_utts: list[int], snr_range) -> tuple:
    rng = np.random.default_rng([seed, index])
    a, b = rng.choice(len(speakers), size=2, replace=False)
    ua = int(rng.integers(n_utts[a]))
    ub = int(rng.integers(n_utts[b]))
    snr = float(rng.uniform(snr_range[0], snr_range[1]))
    return int(a), ua, int(b), ub, snr


def build_corpus(source_dir, n_mixtures: int, snr_range=(0.0, 5.0), seed: int = 0, out_dir=".",
                 target_rate: float = TARGET_RATE, workers: int = 1) -> Path:
    """Draw distinct-speaker utterance pairs, resample, mix, and write a manifest.

    Audio is written as float-32 WAV under ``out_dir/{mix,s1,s2}/<id>.wav``;
    the mixture file holds the float-32 sum of the two written references.
    """
    if n_mixtures < 0:
        raise InvalidInput("n_mixtures must be >= 0")
    lo, hi = snr_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise InvalidInput(f"bad snr range {snr_range}")
    speakers = list_speakers(source_dir)
    if len(speakers) < 2:
        raise InsufficientData(f"need at least 2 speaker directories with WAV files, found {len(speakers)}")
    names = list(speakers)
    n_utts = [len(speakers[n]) for n in names]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def make(i: int) -> MixtureRecord:
        a, ua, b, ub, snr = _draw(seed, i, names, n_utts, (lo, hi))
        s1 = resample(read_wav(speakers[names[a]][ua]), target_rate)
        s2 = resample(read_wav(speakers[names[b]][ub]), target_rate)
        _, (r1, r2) = mix_pair(s1, s2, snr)
        r1 = r1.samples.astype(np.float32)
        r2 = r2.samples.astype(np.float32)
        mix = r1 + r2
        rid = f"mix{i:05d}"
        paths = [out_dir / sub / f"{rid}.wav" for sub in ("mix", "s1", "s2")]
        for p, x in zip(paths, (mix, r1, r2)):
            write_wav(p, Signal(x, target_rate))
        return MixtureRecord(rid, paths[0], (paths[1], paths[2]), snr, seed)

    if workers > 1 and n_mixtures > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(make, range(n_mixtures)))
    else:
        records = [make(i) for i in range(n_mixtures)]
    return write_manifest(out_dir / MANIFEST_NAME, records)
