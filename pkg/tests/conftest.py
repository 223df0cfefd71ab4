import numpy as np
import pytest

from cqtsep import Signal
from cqtsep.corpus import build_corpus
from cqtsep.synth import make_speaker_tree

FS = 8000


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone(freq, seconds=1.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return Signal(amp * np.cos(2 * np.pi * freq * t + phase), fs)


@pytest.fixture(scope="session")
def speaker_tree(tmp_path_factory):
    return make_speaker_tree(tmp_path_factory.mktemp("speakers"), n_speakers=4, utterances=3, seed=11)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory, speaker_tree):
    """Three synthetic two-speaker mixtures at 8 kHz."""
    return build_corpus(speaker_tree, 3, (0.0, 5.0), seed=5, out_dir=tmp_path_factory.mktemp("corpus3"))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
