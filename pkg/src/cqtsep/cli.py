"""Command-line entry point.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import corpus, evaluation, masking, search, synth
from ._io import atomic_write_bytes, atomic_write_text
from .errors import CqtSepError, FormatError
from .signal import Signal
from .transforms import (
    PRESETS,
    CqtFrontend,
    StftConfig,
    StftFrontend,
    magnitude_csv,
    to_bytes,
)

DB_FLOOR = -80.0


# -- front-end configuration -------------------------------------------------

def _block_value(text: str):
    if text.lower() in ("whole", "none", "whole-signal"):
        return None
    return float(text)


def read_frontend_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key] = value
    return out


def frontend_config_text(fe) -> str:
    if isinstance(fe, StftFrontend):
        c = fe.config
        pairs = [("frontend", "stft"), ("window_size", c.window_size), ("hop", c.hop),
                 ("window", c.window_kind)]
    else:
        p = fe.params
        pairs = [("frontend", "cqt"), ("bins_per_octave", p.bins_per_octave), ("gamma", repr(float(p.gamma))),
                 ("f_min", repr(float(p.f_min))), ("window", p.window_kind),
                 ("block_length", "whole" if p.block_length is None else repr(float(p.block_length)))]
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def _split_window_flag(args) -> tuple[str | None, int | None]:
    """``--window`` takes a window name, or an integer STFT window length."""
    value = args.window
    if value is None:
        return None, args.window_size
    if value.isdigit():
        if args.window_size is not None and args.window_size != int(value):
            raise FormatError(f"--window {value} conflicts with --window-size {args.window_size}")
        return None, int(value)
    return value, args.window_size


def resolve_frontend(args, sample_rate: float):
    """Preset, then config file, then explicit flags; later sources win."""
    window_kind, window_size = _split_window_flag(args)
    settings = {}
    if args.frontend_config:
        settings.update(read_frontend_config(args.frontend_config))
    kind = args.frontend or settings.get("frontend") or "cqt"
    if kind == "stft":
        cfg = StftConfig()
        cfg = StftConfig(
            int(window_size or settings.get("window_size", cfg.window_size)),
            int(args.hop or settings.get("hop", cfg.hop)),
            window_kind or settings.get("window", cfg.window_kind),
        )
        return StftFrontend(cfg)
    if kind != "cqt":
        raise FormatError(f"unknown front-end {kind!r}")
    base = PRESETS[args.preset or "paper-standard"]
    fields = {}
    if "bins_per_octave" in settings:
        fields["bins_per_octave"] = int(settings["bins_per_octave"])
    for key in ("gamma", "f_min"):
        if key in settings:
            fields[key] = float(settings[key])
    if "window" in settings:
        fields["window_kind"] = settings["window"]
    if "block_length" in settings:
        fields["block_length"] = _block_value(settings["block_length"])
    if args.bins_per_octave is not None:
        fields["bins_per_octave"] = args.bins_per_octave
    if args.gamma is not None:
        fields["gamma"] = args.gamma
    if args.f_min is not None:
        fields["f_min"] = args.f_min
    if window_kind is not None:
        fields["window_kind"] = window_kind
    if args.block_length is not None:
        fields["block_length"] = _block_value(args.block_length)
    fields["sample_rate"] = float(sample_rate)
    return CqtFrontend(replace(base, **fields))


def _maybe_dump(args, fe) -> None:
    if args.dump_config:
        atomic_write_text(args.dump_config, frontend_config_text(fe))


# -- commands ----------------------------------------------------------------

def _out(args, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(args.output_dir) / p


def cmd_transform(args) -> str:
    signal = corpus.read_wav(args.input)
    fe = resolve_frontend(args, signal.sample_rate)
    _maybe_dump(args, fe)
    tf = fe.forward(signal)
    out = _out(args, args.output)
    atomic_write_bytes(out, to_bytes(tf))
    if args.csv:
        atomic_write_text(_out(args, args.csv), magnitude_csv(tf))
    return f"wrote {out}: {tf.axis} axis, {tf.shape[0]} bands x {tf.shape[1]} frames ({fe.describe()})"


def spectrogram_image(tf) -> np.ndarray:
    """8-bit image, low frequencies at the bottom, dB relative to the peak floored at -80."""
    mag = np.abs(tf.coeffs)
    peak = mag.max()
    if peak > 0:
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag / peak)
        db = np.maximum(db, DB_FLOOR)
    else:
        db = np.full(mag.shape, DB_FLOOR)
    img = np.round((db - DB_FLOOR) / -DB_FLOOR * 255).astype(np.uint8)
    return img[::-1]


def pgm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def cmd_spectrogram(args) -> str:
    signal = corpus.read_wav(args.input)
    fe = resolve_frontend(args, signal.sample_rate)
    _maybe_dump(args, fe)
    tf = fe.forward(signal)
    img = spectrogram_image(tf)
    out = _out(args, args.output)
    atomic_write_bytes(out, pgm_bytes(img))
    if args.csv:
        atomic_write_text(_out(args, args.csv), magnitude_csv(tf))
    return f"wrote {out}: {img.shape[1]}x{img.shape[0]} graymap ({fe.describe()})"


def cmd_mix(args) -> str:
    s1 = corpus.read_wav(args.s1)
    s2 = corpus.read_wav(args.s2)
    if s2.sample_rate != s1.sample_rate:
        s2 = corpus.resample(s2, s1.sample_rate)
    snr = args.snr
    if snr is None:
        snr = float(np.random.default_rng(args.seed).uniform(args.snr_min, args.snr_max))
    mixture, (r1, r2) = corpus.mix_pair(s1, s2, snr)
    r1s = r1.samples.astype(np.float32)
    r2s = r2.samples.astype(np.float32)
    rate = mixture.sample_rate
    for name, x in (("mix.wav", r1s + r2s), ("s1.wav", r1s), ("s2.wav", r2s)):
        corpus.write_wav(_out(args, name), Signal(x, rate))
    return f"mixed at {snr!r} dB into {args.output_dir}"


def cmd_build_corpus(args) -> str:
    manifest = corpus.build_corpus(
        args.source_dir, args.n, (args.snr_min, args.snr_max), args.seed, args.output_dir,
        args.rate, workers=args.threads,
    )
    n = len(corpus.read_manifest(manifest))
    return f"wrote {n} mixtures, manifest {manifest}"


def cmd_synth_speakers(args) -> str:
    out = synth.make_speaker_tree(args.output_dir, args.speakers, args.utterances, args.duration,
                                  args.rate, args.seed)
    return f"wrote {args.speakers} synthetic speakers x {args.utterances} utterances under {out}"


def cmd_oracle_sep(args) -> str:
    mixture = corpus.read_wav(args.mixture)
    refs = [corpus.read_wav(p) for p in args.refs]
    fe = resolve_frontend(args, mixture.sample_rate)
    _maybe_dump(args, fe)
    estimates = masking.oracle_separate(mixture, refs, fe, args.mask)
    for i, est in enumerate(estimates, 1):
        corpus.write_wav(_out(args, f"est{i}.wav"), est)
    sdri = evaluation.sdr_improvement(refs, estimates, mixture)
    return f"wrote {len(estimates)} estimates to {args.output_dir}, SDRi {sdri:.3f} dB ({fe.describe()})"


def cmd_eval(args) -> str:
    first = corpus.read_manifest(args.manifest, validate=False)
    rate = corpus.TARGET_RATE
    for rec in first:
        try:
            rate = corpus.read_wav(rec.mixture_path).sample_rate
            break
        except (CqtSepError, OSError):
            continue
    fe = resolve_frontend(args, rate)
    _maybe_dump(args, fe)
    report = evaluation.evaluate_corpus(args.manifest, fe, args.mask, args.sdr_mode, workers=args.threads)
    atomic_write_text(_out(args, args.report), report.to_jsonl())
    atomic_write_text(_out(args, args.table), report.to_table())
    mean = f"{report.mean_sdri:.3f} dB" if report.rows else "undefined"
    return (f"{fe.describe()} {args.mask}: mean SDRi {mean} over {len(report.rows)} mixtures, "
            f"{len(report.errors)} failed")


def cmd_gridsearch(args) -> str:
    space = search.load_space(args.space) if args.space else search.SearchSpace()
    results = search.grid_search(space, args.manifest, args.mask, workers=args.threads,
                                 sdr_mode=args.sdr_mode)
    out = _out(args, args.out)
    atomic_write_text(out, results.to_table())
    if results.rows:
        params, value = results.best
        best = f"best {params.describe()} at {value:.3f} dB"
    else:
        best = "no configuration succeeded"
    return f"evaluated {len(space)} configurations ({len(results.failed)} failed), {best}; wrote {out}"


# -- parser ------------------------------------------------------------------

def _threads_default() -> int:
    try:
        return max(1, int(os.environ.get("CQTSEP_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=_threads_default(),
                        help="worker threads (falls back to $CQTSEP_THREADS)")
    common.add_argument("--output-dir", default=".")
    common.add_argument("--preset", choices=sorted(PRESETS))

    fe = argparse.ArgumentParser(add_help=False)
    fe.add_argument("--frontend", choices=("stft", "cqt"))
    fe.add_argument("--bins-per-octave", type=int)
    fe.add_argument("--gamma", type=float)
    fe.add_argument("--f-min", type=float)
    fe.add_argument("--window", help="hann, hamming, blackman, cosine or boxcar; an integer sets the STFT length")
    fe.add_argument("--block-length", help="seconds, or 'whole'")
    fe.add_argument("--window-size", type=int, help="STFT window in samples")
    fe.add_argument("--hop", type=int, help="STFT hop in samples")
    fe.add_argument("--frontend-config", help="key = value file as written by --dump-config")
    fe.add_argument("--dump-config", help="write the effective front-end settings here")

    parser = argparse.ArgumentParser(prog="cqtsep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common, fe], help="write a TFR1 coefficient file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--csv", help="also write magnitudes as CSV")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("spectrogram", parents=[common, fe], help="write a P5 graymap spectrogram")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("mix", parents=[common], help="mix two WAV files at a given SNR")
    p.add_argument("s1")
    p.add_argument("s2")
    p.add_argument("--snr", type=float, help="dB of s1 over s2; drawn from [snr-min, snr-max] if omitted")
    p.add_argument("--snr-min", type=float, default=0.0)
    p.add_argument("--snr-max", type=float, default=5.0)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("build-corpus", parents=[common], help="build a two-speaker mixture corpus")
    p.add_argument("source_dir")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--snr-min", type=float, default=0.0)
    p.add_argument("--snr-max", type=float, default=5.0)
    p.add_argument("--rate", type=float, default=corpus.TARGET_RATE)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("synth-speakers", parents=[common], help="write synthetic speech-like speakers")
    p.add_argument("--speakers", type=int, default=4)
    p.add_argument("--utterances", type=int, default=3)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--rate", type=int, default=16000)
    p.set_defaults(func=cmd_synth_speakers)

    p = sub.add_parser("oracle-sep", parents=[common, fe], help="separate a mixture with oracle masks")
    p.add_argument("mixture")
    p.add_argument("refs", nargs="+")
    p.add_argument("--mask", choices=("ibm", "irm"), default="ibm")
    p.set_defaults(func=cmd_oracle_sep)

    p = sub.add_parser("eval", parents=[common, fe], help="oracle SDRi over a manifest")
    p.add_argument("manifest")
    p.add_argument("--mask", choices=("ibm", "irm"), default="ibm")
    p.add_argument("--sdr-mode", choices=("projection", "distortion"), default="projection")
    p.add_argument("--report", default="report.jsonl")
    p.add_argument("--table", default="report.txt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridsearch", parents=[common], help="rank CQT settings by oracle SDRi")
    p.add_argument("manifest")
    p.add_argument("--space", help="search-space config file")
    p.add_argument("--mask", choices=("ibm", "irm"), default="ibm")
    p.add_argument("--sdr-mode", choices=("projection", "distortion"), default="projection")
    p.add_argument("--out", default="ranking.tsv")
    p.set_defaults(func=cmd_gridsearch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        print(args.func(args))
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 1
    except (CqtSepError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
