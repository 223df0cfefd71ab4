"""Exhaustive CQT hyperparameter search on the oracle-mask SDRi bound.

Search-space config grammar: one ``key = v1, v2, ...`` line per
hyperparameter, ``#`` starts a comment. Keys (aliases in parentheses):

    bins_per_octave (B)      integers
    gamma                    Hz, >= 0
    window (window_kind)     hann | hamming | blackman | cosine
    f_min                    Hz
    block_length (block)     seconds, or ``whole`` for no blocking

Keys left out keep their default values.

Ranked results file: a ``#``-prefixed header, then one tab-separated row per
configuration ``rank B gamma window f_min block sdri_db`` sorted by SDRi
(descending), ties broken by the parameter tuple in that column order with
``whole`` ordered before any block length. Failed configurations follow as
``# failed`` lines.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import load_record, read_manifest
from .errors import CqtSepError, FormatError, InvalidParameters, UndefinedMean
from .evaluation import evaluate_corpus, evaluate_loaded
from .transforms import CqtFrontend, CqtParams
from .transforms.windows import WINDOW_KINDS

KEYS = {
    "bins_per_octave": "bins_per_octave", "b": "bins_per_octave",
    "gamma": "gamma",
    "window": "window_kinds", "window_kind": "window_kinds",
    "f_min": "f_min_values", "fmin": "f_min_values",
    "block_length": "block_lengths", "block": "block_lengths",
}


@dataclass(frozen=True)
class SearchSpace:
    bins_per_octave: tuple = (12, 24, 36, 48)
    gamma: tuple = (0.0, 10.0, 20.0, 30.0)
    window_kinds: tuple = WINDOW_KINDS
    f_min_values: tuple = (27.5, 55.0, 110.0)
    block_lengths: tuple = (1.0, None)

    def __post_init__(self):
        for name in ("bins_per_octave", "gamma", "window_kinds", "f_min_values", "block_lengths"):
            values = tuple(getattr(self, name))
            if not values:
                raise InvalidParameters(f"search space field {name} is empty")
            object.__setattr__(self, name, values)

    def __len__(self):
        return (len(self.bins_per_octave) * len(self.gamma) * len(self.window_kinds)
                * len(self.f_min_values) * len(self.block_lengths))

    def combinations(self):
        """Raw (B, gamma, window, f_min, block) tuples in declaration order."""
        return itertools.product(self.bins_per_octave, self.gamma, self.window_kinds,
                                 self.f_min_values, self.block_lengths)


def _parse_value(key: str, token: str):
    token = token.strip()
    if key == "window_kinds":
        return token
    if key == "block_lengths" and token.lower() in ("whole", "none", "whole-signal"):
        return None
    if key == "bins_per_octave":
        return int(token)
    return float(token)


def parse_space(text: str) -> SearchSpace:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key = values")
        key, values = (part.strip() for part in line.split("=", 1))
        target = KEYS.get(key.lower())
        if target is None:
            raise FormatError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = tuple(_parse_value(target, v) for v in values.split(",") if v.strip())
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        fields[target] = parsed
    return SearchSpace(**fields)


def load_space(path) -> SearchSpace:
    with open(path, encoding="utf-8") as fh:
        return parse_space(fh.read())


def format_space(space: SearchSpace) -> str:
    def fmt(v):
        return "whole" if v is None else str(v)

    return "".join(f"{key} = {', '.join(fmt(v) for v in getattr(space, attr))}\n" for key, attr in (
        ("bins_per_octave", "bins_per_octave"), ("gamma", "gamma"), ("window", "window_kinds"),
        ("f_min", "f_min_values"), ("block_length", "block_lengths"),
    ))


def param_key(p: CqtParams) -> tuple:
    block = (0, 0.0) if p.block_length is None else (1, float(p.block_length))
    return (p.bins_per_octave, float(p.gamma), p.window_kind, float(p.f_min), block)


@dataclass
class RankedResults:
    rows: list[tuple[CqtParams, float]] = field(default_factory=list)
    failed: list[tuple[tuple, str]] = field(default_factory=list)

    @property
    def best(self) -> tuple[CqtParams, float]:
        if not self.rows:
            raise UndefinedMean("no configuration succeeded")
        return self.rows[0]

    def to_table(self) -> str:
        lines = ["# rank\tB\tgamma\twindow\tf_min\tblock\tsdri_db"]
        for rank, (p, value) in enumerate(self.rows, 1):
            block = "whole" if p.block_length is None else repr(float(p.block_length))
            lines.append("\t".join([str(rank), str(p.bins_per_octave), repr(float(p.gamma)),
                                    p.window_kind, repr(float(p.f_min)), block, repr(value)]))
        for combo, reason in self.failed:
            lines.append(f"# failed\t{combo!r}\t{reason}")
        return "\n".join(lines) + "\n"


def rank(rows: list[tuple[CqtParams, float]]) -> list[tuple[CqtParams, float]]:
    return sorted(rows, key=lambda r: (-r[1], param_key(r[0])))


def evaluate_config(params: CqtParams, manifest, mask_kind: str = "ibm", sdr_mode: str = "projection") -> float:
    """Mean oracle-mask SDRi of ``params`` over the corpus in ``manifest``."""
    return evaluate_corpus(manifest, CqtFrontend(params), mask_kind, sdr_mode).mean_sdri


def _load_corpus(manifest):
    records = read_manifest(manifest, validate=True)
    items = []
    for rec in records:
        mixture, refs = load_record(rec)
        items.append((rec.id, mixture, refs))
    return items


def grid_search(space: SearchSpace, manifest, mask_kind: str = "ibm", workers: int = 1,
                sdr_mode: str = "projection") -> RankedResults:
    """Evaluate every configuration in ``space``; result order never depends on ``workers``."""
    items = _load_corpus(manifest)
    if not items:
        raise UndefinedMean("manifest lists no mixtures")
    rate = items[0][1].sample_rate

    def run(combo):
        B, gamma, window, f_min, block = combo
        try:
            params = CqtParams(B, gamma, f_min, rate, window, block)
            report = evaluate_loaded(items, CqtFrontend(params), mask_kind, sdr_mode)
        except CqtSepError as exc:
            return combo, None, f"{type(exc).__name__}: {exc}"
        if report.errors:
            rid, msg = report.errors[0]
            return combo, None, f"{rid}: {msg}"
        return combo, (params, report.mean_sdri), None

    combos = list(space.combinations())
    if workers > 1 and len(combos) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, combos))
    else:
        outcomes = [run(c) for c in combos]

    result = RankedResults()
    ok = []
    for combo, row, reason in outcomes:
        if row is None:
            result.failed.append((combo, reason))
        else:
            ok.append(row)
    result.rows = rank(ok)
    result.failed.sort(key=lambda f: repr(f[0]))
    return result
