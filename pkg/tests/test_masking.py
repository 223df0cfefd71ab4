import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cqtsep import Signal
from cqtsep.errors import InvalidInput
from cqtsep.masking import (
    Mask,
    apply_mask,
    ideal_binary_masks,
    ideal_ratio_masks,
    oracle_separate,
)
from cqtsep.transforms import StftConfig, StftFrontend, TFRep, stft

from .conftest import FS, tone


def grid(values):
    values = np.asarray(values, dtype=complex)
    return TFRep(values, "linear", FS, 10, 1.0, np.arange(values.shape[0], dtype=float))


def test_single_cell_examples():
    a, b = grid([[3.0]]), grid([[4j]])
    ibm = ideal_binary_masks([a, b])
    assert [m.gains[0, 0] for m in ibm] == [0.0, 1.0]
    irm = ideal_ratio_masks([a, b])
    assert irm[0].gains[0, 0] == pytest.approx(9 / 25, abs=1e-15)
    assert irm[1].gains[0, 0] == pytest.approx(16 / 25, abs=1e-15)


def test_ties_and_silence():
    a, b = grid([[2.0, 0.0]]), grid([[-2.0, 0.0]])
    ibm = ideal_binary_masks([a, b])
    np.testing.assert_array_equal(ibm[0].gains, [[1.0, 1.0]])
    np.testing.assert_array_equal(ibm[1].gains, [[0.0, 0.0]])
    irm = ideal_ratio_masks([a, b])
    np.testing.assert_array_equal(irm[0].gains, [[0.5, 0.5]])
    np.testing.assert_array_equal(irm[1].gains, [[0.5, 0.5]])


mags = arrays(np.float64, (3, 4, 5), elements=st.floats(0, 1e3, allow_subnormal=False))


@settings(max_examples=60, deadline=None)
@given(mags)
def test_masks_partition_unity(m):
    refs = [grid(x) for x in m]
    ibm = np.stack([k.gains for k in ideal_binary_masks(refs)])
    irm = np.stack([k.gains for k in ideal_ratio_masks(refs)])
    assert set(np.unique(ibm)) <= {0.0, 1.0}
    np.testing.assert_array_equal(ibm.sum(axis=0), 1.0)
    assert np.all((irm >= 0) & (irm <= 1))
    np.testing.assert_allclose(irm.sum(axis=0), 1.0, atol=1e-12)
    # the binary winner carries the largest ratio
    won = np.take_along_axis(irm, np.argmax(ibm, axis=0)[None], axis=0)[0]
    assert np.all(won >= irm.max(axis=0) - 1e-15)


def test_apply_mask_edge_cases(rng):
    tf = stft(Signal(rng.standard_normal(2000), FS))
    ones = Mask.like(tf, np.ones(tf.shape))
    zeros = Mask.like(tf, np.zeros(tf.shape))
    np.testing.assert_array_equal(apply_mask(tf, ones).coeffs, tf.coeffs)
    assert not np.any(apply_mask(tf, zeros).coeffs)
    with pytest.raises(InvalidInput):
        apply_mask(tf, Mask.like(tf, np.ones((3, 3))))


def test_mask_gain_range():
    with pytest.raises(InvalidInput):
        Mask(np.full((2, 2), 1.5), "linear", FS, 10, 1.0, np.zeros(2))


def test_ibm_idempotent(rng):
    a = stft(Signal(rng.standard_normal(2000), FS))
    b = stft(Signal(rng.standard_normal(2000), FS))
    m = ideal_binary_masks([a, b])[0]
    once = apply_mask(a, m)
    twice = apply_mask(once, m)
    np.testing.assert_array_equal(once.coeffs, twice.coeffs)


@pytest.mark.parametrize("frontend", ["stft", "paper-standard", "paper-optimal"])
def test_silent_partner_returns_mixture(frontend, rng):
    x = Signal(rng.standard_normal(FS), FS)
    silent = Signal(np.zeros(FS), FS)
    est = oracle_separate(x, [x, silent], frontend, "ibm")
    assert np.linalg.norm(est[0].samples - x.samples) <= 1e-9 * np.linalg.norm(x.samples)
    assert np.max(np.abs(est[1].samples)) <= 1e-9


@pytest.mark.parametrize("frontend", ["stft", "paper-standard"])
def test_disjoint_tones_separate_cleanly(frontend):
    a = tone(300.0, 1.0).samples
    b = tone(2000.0, 1.0).samples
    mix = Signal(a + b, FS)
    est = oracle_separate(mix, [Signal(a, FS), Signal(b, FS)], frontend, "ibm")
    for e, r in zip(est, (a, b)):
        assert np.linalg.norm(e.samples - r) / np.linalg.norm(r) < 0.05


def test_deterministic(rng):
    a, b = rng.standard_normal((2, 4000))
    mix = Signal(a + b, FS)
    refs = [Signal(a, FS), Signal(b, FS)]
    for fe in ("stft", "paper-standard"):
        first = oracle_separate(mix, refs, fe, "irm")
        second = oracle_separate(mix, refs, fe, "irm")
        for x, y in zip(first, second):
            assert x.samples.tobytes() == y.samples.tobytes()


def test_irm_magnitude_error_not_above_ibm():
    rng = np.random.default_rng(3)
    shape = (32, 32)
    for _ in range(100):
        a, b = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape) for _ in range(2))
        refs = [grid(a), grid(b)]
        mix = grid(a + b)
        err = {}
        for name, build in (("ibm", ideal_binary_masks), ("irm", ideal_ratio_masks)):
            err[name] = sum(np.linalg.norm(np.abs(apply_mask(mix, m).coeffs) - np.abs(r))
                            for m, r in zip(build(refs), (a, b)))
        assert err["irm"] <= err["ibm"]


def test_half_mask_halves(rng):
    tf = stft(Signal(rng.standard_normal(1000), FS))
    out = apply_mask(tf, Mask.like(tf, np.full(tf.shape, 0.5)))
    np.testing.assert_array_equal(out.coeffs, tf.coeffs * 0.5)


def test_ibm_from_masked_estimates_keeps_supports(rng):
    a, b = rng.standard_normal((2, 4000))
    refs = [stft(Signal(a, FS)), stft(Signal(b, FS))]
    mix = stft(Signal(a + b, FS))
    masks = ideal_binary_masks(refs)
    est = [apply_mask(mix, m) for m in masks]
    again = ideal_binary_masks(est)
    live = np.abs(mix.coeffs) > 0
    for m, m2, e in zip(masks, again, est):
        np.testing.assert_array_equal(m2.gains[live], m.gains[live])
        np.testing.assert_array_equal(apply_mask(e, m2).coeffs, e.coeffs)


def test_exact_bin_tones_recovered():
    # 16 and 40 cycles per 256 samples, rectangular hop-N frames: disjoint bins
    n = 256 * 32
    t = np.arange(n)
    # gated on frame boundaries so the half-window edge padding sees silence
    gate = (t >= 128) & (t < n - 128)
    a = np.cos(2 * np.pi * 16 * t / 256) * gate
    b = 0.5 * np.sin(2 * np.pi * 40 * t / 256) * gate
    fe = StftFrontend(StftConfig(256, 256, "boxcar"))
    est = oracle_separate(Signal(a + b, FS), [Signal(a, FS), Signal(b, FS)], fe, "ibm")
    for e, r in zip(est, (a, b)):
        assert np.linalg.norm(e.samples - r) / np.linalg.norm(r) <= 1e-8


def test_reference_mismatch(rng):
    x = Signal(rng.standard_normal(1000), FS)
    short = Signal(rng.standard_normal(900), FS)
    with pytest.raises(InvalidInput):
        oracle_separate(x, [x, short], StftFrontend(), "ibm")
    with pytest.raises(InvalidInput):
        oracle_separate(x, [x, x], "stft", "wiener")
    with pytest.raises(InvalidInput):
        ideal_binary_masks([stft(x)])
    with pytest.raises(InvalidInput):
        ideal_binary_masks([stft(x), stft(x, 128, 32)])
