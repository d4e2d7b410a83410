import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twohop.channel import (Dmc, bsc_crossover, compose, from_descriptor, make_bsc,
                            make_reverse_z, sample, swap_inputs, to_descriptor, transmit)
from twohop.errors import DomainError

crossover = st.floats(0.01, 0.49)


@st.composite
def binary_output_channels(draw):
    a = draw(st.floats(0.02, 0.98))
    b = draw(st.floats(0.02, 0.98).filter(lambda b: abs(b - a) > 1e-3))
    return Dmc((1 - a, a), (1 - b, b))


def test_bsc_rows():
    ch = make_bsc(0.2)
    assert ch.row0 == (0.8, 0.2)
    assert ch.row1 == (0.2, 0.8)
    assert bsc_crossover(ch) == 0.2


def test_reverse_z_rows():
    ch = make_reverse_z(0.8)
    assert ch.row1 == (0.0, 1.0)
    assert ch.row0[1] == pytest.approx(0.8)
    assert bsc_crossover(ch) is None


@pytest.mark.parametrize("p", [0.0, 0.5, 0.7, -0.1, float("nan")])
def test_bsc_domain(p):
    with pytest.raises(DomainError):
        make_bsc(p)


@pytest.mark.parametrize("row0,row1", [
    ((0.5, 0.6), (0.5, 0.5)),
    ((1.2, -0.2), (0.5, 0.5)),
    ((0.3, 0.7), (0.3, 0.7)),
    ((1.0,), (1.0,)),
    ((0.5, 0.5), (0.2, 0.3, 0.5)),
])
def test_invalid_rows(row0, row1):
    with pytest.raises(DomainError):
        Dmc(row0, row1)


def test_row_rounding_tolerated():
    ch = Dmc((0.3, 0.7 + 5e-13), (0.6, 0.4))
    assert sum(ch.row0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        Dmc((0.3, 0.7 + 5e-11), (0.6, 0.4))


@given(crossover, crossover)
def test_bsc_cascade_is_bsc(p, q):
    ch = compose(make_bsc(p), make_bsc(q))
    expected = p * (1 - q) + q * (1 - p)
    if expected < 0.5:
        assert bsc_crossover(ch) == pytest.approx(expected, abs=1e-12)


@given(binary_output_channels(), binary_output_channels(), binary_output_channels())
def test_compose_associative(a, b, c):
    left = compose(compose(a, b), c).matrix()
    right = compose(a, compose(b, c)).matrix()
    np.testing.assert_allclose(left, right, atol=1e-12)


@given(binary_output_channels())
def test_swap_is_involution(ch):
    assert swap_inputs(swap_inputs(ch)) == ch


def test_compose_needs_binary_first():
    wide = Dmc((0.5, 0.3, 0.2), (0.2, 0.3, 0.5))
    with pytest.raises(DomainError):
        compose(wide, make_bsc(0.1))


@pytest.mark.parametrize("desc", [
    {"kind": "bsc", "p": 0.2},
    {"kind": "reverse_z", "q": 0.8},
    {"kind": "general", "row0": [0.5, 0.3, 0.2], "row1": [0.1, 0.2, 0.7]},
])
def test_descriptor_round_trip(desc):
    ch = from_descriptor(desc)
    assert from_descriptor(to_descriptor(ch)) == ch


@pytest.mark.parametrize("desc", [
    {"kind": "bsc"},
    {"kind": "bsc", "p": 0.2, "q": 0.1},
    {"kind": "awgn", "snr": 1.0},
    {"p": 0.2},
    [0.2],
])
def test_descriptor_rejects(desc):
    with pytest.raises(DomainError):
        from_descriptor(desc)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1))
def test_sample_frequencies(seed, bit):
    ch = Dmc((0.5, 0.3, 0.2), (0.1, 0.2, 0.7))
    n = 20_000
    out = sample(ch, bit, np.random.default_rng(seed), size=n)
    freq = np.bincount(out, minlength=3) / n
    row = np.array(ch.row(bit))
    sigma = np.sqrt(row * (1 - row) / n)
    assert np.all(np.abs(freq - row) <= 4 * sigma)


def test_sample_reproducible():
    ch = make_bsc(0.3)
    a = sample(ch, 1, np.random.default_rng(7), size=100)
    b = sample(ch, 1, np.random.default_rng(7), size=100)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("ch", [make_bsc(0.25), make_reverse_z(0.6), Dmc((0.5, 0.3, 0.2), (0.1, 0.2, 0.7))])
def test_transmit_matches_sample(ch):
    # same generator state, same convention: elementwise identical draws
    bits = np.ones(500, dtype=int)
    a = transmit(ch, bits, np.random.default_rng(3))
    b = sample(ch, 1, np.random.default_rng(3), size=500)
    assert np.array_equal(a, b)


def test_transmit_mixed_inputs_frequencies():
    ch = make_bsc(0.2)
    rng = np.random.default_rng(11)
    bits = rng.integers(2, size=200_000)
    out = transmit(ch, bits, rng)
    flips = np.mean(out != bits)
    assert abs(flips - 0.2) < 4 * math.sqrt(0.2 * 0.8 / bits.size)


def test_reverse_z_never_flips_one():
    out = transmit(make_reverse_z(0.9), np.ones(10_000, dtype=int), np.random.default_rng(0))
    assert np.all(out == 1)
