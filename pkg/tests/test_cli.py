import json

import numpy as np
import pytest
from scipy.signal import chirp

from cqtsep import Signal
from cqtsep.cli import main
from cqtsep.corpus import write_wav
from cqtsep.transforms import load_tfrep

from .conftest import FS


def read_pgm(path):
    blob = path.read_bytes()
    magic, dims, maxval, rest = blob.split(b"\n", 3)
    assert magic == b"P5" and maxval == b"255"
    w, h = map(int, dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w)


@pytest.fixture
def noise_wav(tmp_path, rng):
    path = tmp_path / "noise.wav"
    write_wav(path, Signal(0.3 * rng.uniform(-1, 1, FS), FS))
    return path


def test_transform_preset(tmp_path, noise_wav, capsys):
    out = tmp_path / "x.tfr"
    assert main(["transform", str(noise_wav), str(out), "--preset", "paper-standard"]) == 0
    c = load_tfrep(out)
    assert out.read_bytes()[:4] == b"TFR1"
    assert c.axis == "cq" and c.window_kind == "cosine"
    assert "cq axis" in capsys.readouterr().out


def test_transform_stft_bins(tmp_path, noise_wav):
    out = tmp_path / "s.tfr"
    csv = tmp_path / "s.csv"
    argv = ["transform", str(noise_wav), str(out), "--frontend", "stft", "--window", "256", "--hop", "64",
            "--csv", str(csv)]
    assert main(argv) == 0
    c = load_tfrep(out)
    assert c.axis == "linear" and c.data.shape[0] == 129
    assert len(csv.read_text().splitlines()) == 130


def test_missing_input(tmp_path, capsys):
    missing = tmp_path / "nope.wav"
    assert main(["transform", str(missing), str(tmp_path / "o.tfr")]) == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_parameters_exit_one(tmp_path, noise_wav, capsys):
    assert main(["transform", str(noise_wav), str(tmp_path / "o"), "--bins-per-octave", "0"]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["transform"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


@pytest.mark.parametrize("frontend", [["--frontend", "stft"], ["--preset", "paper-optimal"]])
def test_spectrogram_silence_is_uniform(tmp_path, frontend):
    wav = tmp_path / "quiet.wav"
    write_wav(wav, Signal(np.zeros(FS), FS))
    out = tmp_path / "q.pgm"
    assert main(["spectrogram", str(wav), str(out), *frontend]) == 0
    img = read_pgm(out)
    assert np.all(img == 0)


@pytest.mark.parametrize("frontend", [["--frontend", "stft"], ["--preset", "paper-standard"]])
def test_spectrogram_chirp_ridge(tmp_path, frontend):
    t = np.arange(2 * FS) / FS
    wav = tmp_path / "chirp.wav"
    write_wav(wav, Signal(0.5 * chirp(t, 200, t[-1], 3000, method="logarithmic"), FS))
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    assert main(["spectrogram", str(wav), str(a), *frontend]) == 0
    assert main(["spectrogram", str(wav), str(b), *frontend]) == 0
    assert a.read_bytes() == b.read_bytes()
    img = read_pgm(a)[::-1].astype(int)  # row 0 = lowest frequency
    assert img.max() == 255
    cols = img.shape[1]
    ridge = np.argmax(img[:, cols // 10 : -cols // 10], axis=0)
    # smooth over frame jitter, then require a rising ridge
    steps = np.diff(ridge[:: max(1, ridge.size // 20)])
    assert np.all(steps >= 0) and ridge[-1] > ridge[0]


def test_oracle_sep_writes_estimates(tmp_path, rng):
    a, b = 0.2 * rng.standard_normal((2, FS))
    paths = []
    for name, x in (("mix", a + b), ("a", a), ("b", b)):
        paths.append(tmp_path / f"{name}.wav")
        write_wav(paths[-1], Signal(x, FS))
    out = tmp_path / "est"
    assert main(["oracle-sep", *map(str, paths), "--output-dir", str(out), "--mask", "irm"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["est1.wav", "est2.wav"]


def test_eval_two_frontends(tmp_path, small_corpus):
    for name, flags in (("stft", ["--frontend", "stft"]), ("cqt", ["--preset", "paper-standard"])):
        argv = ["eval", str(small_corpus), "--output-dir", str(tmp_path), "--report", f"{name}.jsonl",
                "--table", f"{name}.txt", "--threads", "2", *flags]
        assert main(argv) == 0
    aggregates = []
    for name in ("stft", "cqt"):
        recs = [json.loads(line) for line in (tmp_path / f"{name}.jsonl").read_text().splitlines()]
        assert recs[-1]["kind"] == "aggregate" and recs[-1]["n"] == 3
        aggregates.append(recs[-1]["mean_sdri_db"])
    assert all(v > 5 for v in aggregates)


def test_gridsearch_singleton(tmp_path, small_corpus):
    space = tmp_path / "space.cfg"
    space.write_text("B = 36\ngamma = 20\nwindow = cosine\nf_min = 110\nblock = 1.0\n")
    assert main(["gridsearch", str(small_corpus), "--space", str(space), "--output-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "ranking.tsv").read_text().splitlines()
    assert rows[0].startswith("#") and len(rows) == 2
    assert rows[1].split("\t")[:6] == ["1", "36", "20.0", "cosine", "110.0", "1.0"]


def test_dump_config_round_trip(tmp_path, noise_wav):
    cfg = tmp_path / "fe.cfg"
    first, second = tmp_path / "1.tfr", tmp_path / "2.tfr"
    argv = ["transform", str(noise_wav), str(first), "--preset", "paper-optimal", "--gamma", "10",
            "--dump-config", str(cfg)]
    assert main(argv) == 0
    assert "gamma = 10.0" in cfg.read_text()
    assert main(["transform", str(noise_wav), str(second), "--frontend-config", str(cfg)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_mix_and_corpus_commands(tmp_path):
    src = tmp_path / "src"
    assert main(["synth-speakers", "--output-dir", str(src), "--speakers", "2", "--utterances", "1",
                 "--duration", "0.5", "--seed", "3"]) == 0
    mixdir = tmp_path / "m"
    argv = ["mix", str(src / "spk0/utt0.wav"), str(src / "spk1/utt0.wav"), "--output-dir", str(mixdir),
            "--seed", "4"]
    assert main(argv) == 0
    first = (mixdir / "mix.wav").read_bytes()
    assert main(argv) == 0
    assert (mixdir / "mix.wav").read_bytes() == first
    out = tmp_path / "c"
    assert main(["build-corpus", str(src), "--n", "2", "--output-dir", str(out), "--seed", "1"]) == 0
    assert len((out / "manifest.tsv").read_text().splitlines()) == 2


def test_threads_env(tmp_path, small_corpus, monkeypatch):
    monkeypatch.setenv("CQTSEP_THREADS", "3")
    assert main(["eval", str(small_corpus), "--output-dir", str(tmp_path), "--frontend", "stft"]) == 0
    assert (tmp_path / "report.jsonl").exists()
