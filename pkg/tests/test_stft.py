import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqtsep import Signal
from cqtsep.errors import InvalidInput, InvalidParameters, NonInvertibleParameters
from cqtsep.transforms import istft, stft

from .conftest import FS


def test_bin_spacing():
    tf = stft(Signal(np.zeros(FS), FS), 256, 64)
    assert tf.axis == "linear"
    assert tf.shape[0] == 129
    assert tf.frequencies[1] == 31.25
    assert not np.any(tf.coeffs)


def test_round_trip_hann_quarter_hop(rng):
    x = rng.standard_normal(FS)
    tf = stft(Signal(x, FS), 256, 64, "hann")
    y = istft(tf, 256, 64, "hann", FS).samples
    assert np.linalg.norm(y - x) / np.linalg.norm(x) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(2, 4000),
    size=st.sampled_from([64, 128, 256, 512]),
    overlap=st.sampled_from([2, 4]),
    kind=st.sampled_from(["hann", "hamming", "blackman", "cosine", "boxcar"]),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(n, size, overlap, kind, seed):
    hop = size // overlap
    x = np.random.default_rng(seed).standard_normal(n)
    tf = stft(Signal(x, FS), size, hop, kind)
    y = istft(tf, size, hop, kind, n).samples
    assert np.linalg.norm(y - x) <= 1e-10 * np.linalg.norm(x)


def test_exact_bin_tone_with_rectangular_window():
    # 10 cycles per 256-sample frame: the DFT of every interior frame is two spikes
    N, k = 256, 10
    t = np.arange(4 * FS) / FS
    x = np.cos(2 * np.pi * k * FS / N * t)
    tf = stft(Signal(x, FS), N, N, "boxcar")
    interior = np.abs(tf.coeffs[:, 2:-2]) ** 2
    share = interior[k].sum() / interior.sum()
    assert share == pytest.approx(1.0, abs=1e-20 + 1e-12)
    np.testing.assert_allclose(np.abs(tf.coeffs[k, 2:-2]), N / 2, rtol=1e-12)


def test_zero_tfrep_gives_zero_signal():
    tf = stft(Signal(np.ones(1000), FS), 256, 64)
    y = istft(tf.with_coeffs(np.zeros_like(tf.coeffs)), 256, 64, "hann", 1000)
    assert not np.any(y.samples)


def test_hann_without_overlap_is_not_invertible():
    tf = stft(Signal(np.ones(1000), FS), 256, 256)
    with pytest.raises(NonInvertibleParameters):
        istft(tf, 256, 256, "hann", 1000)


def test_invalid_hop():
    with pytest.raises(InvalidParameters):
        stft(Signal(np.ones(1000), FS), 256, 0)
    with pytest.raises(InvalidParameters):
        stft(Signal(np.ones(1000), FS), 256, 300)


def test_shape_mismatch():
    tf = stft(Signal(np.ones(1000), FS), 256, 64)
    with pytest.raises(InvalidInput):
        istft(tf, 256, 64, "hann", 5000)


def test_linearity(rng):
    x, y = rng.standard_normal((2, 3000))
    a = stft(Signal(x, FS)).coeffs
    b = stft(Signal(y, FS)).coeffs
    c = stft(Signal(x + y, FS)).coeffs
    assert np.linalg.norm(c - a - b) <= 1e-12 * np.linalg.norm(c)
