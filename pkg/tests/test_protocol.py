import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twohop.channel import Dmc, make_bsc, make_reverse_z
from twohop.errors import DomainError
from twohop.exponent import TiltedFamily, binary_kl, mu
from twohop.protocol import (ProtocolSpec, bsc_threshold, build_g_table, build_llr_distribution,
                             f_fraction, g_monotone, g_unrounded, teach_batch, teach_block_bsc,
                             teach_block_dmc, teach_stream)

P3 = Dmc((0.6, 0.3, 0.1), (0.1, 0.3, 0.6))


def brute_llr_law(ch, k, bit):
    """P(l(Y) = v | bit) by listing every output block."""
    row = np.array(ch.row(bit))
    llr = TiltedFamily(ch).llr
    law = {}
    for ys in itertools.product(range(ch.alphabet_size), repeat=k):
        prob = float(np.prod(row[list(ys)]))
        if prob == 0.0:
            continue
        vals = [llr[y] for y in ys]
        v = math.inf if math.inf in vals and -math.inf not in vals else sum(vals)
        key = round(v, 9) if math.isfinite(v) else v
        law[key] = law.get(key, 0.0) + prob
    return law


def is_sorted_single_transition(bits):
    d = np.diff(np.asarray(bits, dtype=int))
    return np.count_nonzero(d) <= 1


def test_f_breakpoints():
    for p in (0.1, 0.2, 0.3):
        assert f_fraction(p, p) == 0.0
        assert f_fraction(1 - p, p) == 1.0
        assert f_fraction(0.5, p) == pytest.approx(0.5, abs=1e-15)


def test_f_values():
    # D(0.35||0.2) by hand
    d = 0.35 * math.log(0.35 / 0.2) + 0.65 * math.log(0.65 / 0.8)
    assert d == pytest.approx(0.060900, abs=1e-6)
    assert f_fraction(0.35, 0.2) == pytest.approx(d / (2 * binary_kl(0.5, 0.2)), abs=1e-15)
    assert f_fraction(0.35, 0.2) == pytest.approx(0.13646, abs=1e-5)
    d3 = 0.3 * math.log(1.5) + 0.7 * math.log(0.875)
    assert f_fraction(0.3, 0.2) == pytest.approx(d3 / (2 * binary_kl(0.5, 0.2)), abs=1e-15)
    assert f_fraction(0.3, 0.2) == pytest.approx(0.063115, abs=1e-6)


@given(st.floats(0.0, 1.0), st.floats(0.01, 0.49))
def test_f_symmetry(alpha, p):
    assert f_fraction(alpha, p) + f_fraction(1 - alpha, p) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha,p", [(-0.1, 0.2), (1.1, 0.2), (0.5, 0.5), (0.5, 0.0)])
def test_f_domain(alpha, p):
    with pytest.raises(DomainError):
        f_fraction(alpha, p)


def test_teach_block_bsc_examples():
    assert teach_block_bsc(np.ones(10, dtype=int), 0.2).tolist() == [1] * 10
    five = np.array([1, 0] * 5)
    assert teach_block_bsc(five, 0.2).tolist() == [1] * 5 + [0] * 5
    three = np.array([1, 1, 1] + [0] * 7)
    assert teach_block_bsc(three, 0.2).tolist() == [0] * 10
    with pytest.raises(DomainError):
        teach_block_bsc(np.array([], dtype=int), 0.2)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.floats(0.05, 0.45))
def test_bsc_encoder_sorted(bits, p):
    out = teach_block_bsc(np.array(bits), p)
    assert is_sorted_single_transition(out)
    assert out[0] >= out[-1]  # ones first


def test_bsc_threshold_exact_half():
    # k f(1/2) = k/2 must not lose a bit to floating error
    for k in range(2, 60, 2):
        assert bsc_threshold(k // 2, k, 0.2) == k // 2


def test_llr_distribution_single_bsc():
    p = 0.2
    dist = build_llr_distribution(make_bsc(p), 1)
    np.testing.assert_allclose(dist.support, [math.log(p / (1 - p)), math.log((1 - p) / p)])
    np.testing.assert_allclose(dist.pmf1, [p, 1 - p])
    np.testing.assert_allclose(dist.pmf0, [1 - p, p])


@pytest.mark.parametrize("ch", [make_bsc(0.2), P3, make_reverse_z(0.8), Dmc((0.5, 0.5, 0.0), (0.0, 0.4, 0.6))])
def test_llr_distribution_matches_enumeration(ch):
    k = 4
    dist = build_llr_distribution(ch, k)
    for bit, pmf in ((0, dist.pmf0), (1, dist.pmf1)):
        law = brute_llr_law(ch, k, bit)
        assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
        got = {}
        for v, m in zip(dist.support, pmf):
            if m > 0:
                key = round(float(v), 9) if math.isfinite(v) else float(v)
                got[key] = got.get(key, 0.0) + m
        assert set(got) == set(law)
        for key in law:
            assert got[key] == pytest.approx(law[key], abs=1e-14)


def test_llr_distribution_reverse_z_k2():
    dist = build_llr_distribution(make_reverse_z(0.8), 2)
    assert dist.support[0] == -math.inf
    i = 0
    assert dist.pmf1[i] == 0.0
    assert dist.pmf0[i] == pytest.approx(1 - 0.8 ** 2)


@pytest.mark.parametrize("ch,k", [(P3, 6), (make_bsc(0.3), 9), (make_reverse_z(0.7), 5)])
def test_llr_distribution_invariants(ch, k):
    dist = build_llr_distribution(ch, k)
    assert np.all(np.diff(dist.support) > 0)
    assert dist.pmf0.sum() == pytest.approx(1.0, abs=1e-9)
    assert dist.pmf1.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(dist.tail0_geq) <= 1e-15)
    assert np.all(np.diff(dist.tail1_leq) >= -1e-15)
    assert dist.support.size <= (k + 1) ** ch.alphabet_size


def test_g_table_boundaries():
    spec = ProtocolSpec("dmc-block", 8, P3, make_bsc(0.25))
    g = spec.g_table
    assert g[0] == 0
    assert g[-1] == spec.k
    assert np.all(np.diff(g) >= 0)
    assert np.all((g >= 0) & (g <= spec.k))


def _random_full_support(rng, m):
    while True:
        r0, r1 = rng.dirichlet(np.ones(m)) + 0.02, rng.dirichlet(np.ones(m)) + 0.02
        r0, r1 = r0 / r0.sum(), r1 / r1.sum()
        if np.max(np.abs(r0 - r1)) > 0.05:
            return Dmc(tuple(r0), tuple(r1))


def test_g_sandwich_random_channels():
    rng = np.random.default_rng(2024)
    k, sb = 8, 0.5
    for _ in range(30):
        ch = _random_full_support(rng, int(rng.integers(2, 5)))
        dist = build_llr_distribution(ch, k)
        mmax = mu(ch, sb)
        upper = (1 - sb) / mmax * dist.log_tail0_geq
        lower = k - sb / mmax * dist.log_tail1_leq
        for g in (g_unrounded(dist, k, sb, mmax), g_monotone(dist, k, sb, mmax)):
            assert np.all(g <= upper + 1e-9)
            assert np.all(g >= lower - 1e-9)
        assert np.all(np.diff(build_g_table(dist, k, sb, mmax)) >= 0)


def test_g_table_domain():
    dist = build_llr_distribution(P3, 4)
    with pytest.raises(DomainError):
        build_g_table(dist, 4, 0.5, 0.1)
    with pytest.raises(DomainError):
        build_g_table(dist, 4, 1.5, -0.1)


def test_dmc_encoder_extremes():
    spec = ProtocolSpec("dmc-block", 6, P3, make_bsc(0.25))
    # all symbol 2 maximises l, all symbol 0 minimises it
    assert teach_block_dmc(np.full(6, 2), spec).tolist() == [0] * 6
    assert teach_block_dmc(np.zeros(6, dtype=int), spec).tolist() == [1] * 6


def test_dmc_encoder_sorted_like_bsc():
    p = 0.2
    spec = ProtocolSpec("dmc-block", 10, make_bsc(p), make_bsc(0.3), s_bar=0.5)
    rng = np.random.default_rng(5)
    for _ in range(20):
        y = rng.integers(2, size=10)
        out = teach_block_dmc(y, spec)
        ref = teach_block_bsc(y, p)
        assert is_sorted_single_transition(out)
        assert is_sorted_single_transition(ref)
        assert is_sorted_single_transition(1 - out[::-1])


def test_teach_block_dmc_wrong_kind():
    spec = ProtocolSpec("bsc-block", 4, make_bsc(0.2), make_bsc(0.2))
    with pytest.raises(DomainError):
        teach_block_dmc(np.zeros(4, dtype=int), spec)


def test_simple_forwarding_identity():
    spec = ProtocolSpec("simple-forwarding", 1, make_bsc(0.2), make_bsc(0.2))
    y = np.array([0, 1, 1, 0, 1])
    assert teach_stream(y, spec).tolist() == y.tolist()


def test_cumulative_tie_keeps_previous():
    spec = ProtocolSpec("cumulative", 1, make_bsc(0.2), make_bsc(0.2))
    assert teach_stream(np.array([1, 0, 1, 1]), spec).tolist() == [1, 1, 1, 1]
    assert teach_stream(np.array([0, 1, 1, 0]), spec).tolist() == [0, 0, 1, 1]


def test_sqrt_block_majority_updates():
    spec = ProtocolSpec("sqrt-block-majority", 1, make_bsc(0.2), make_bsc(0.2))
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0])  # n = 9, b = 3
    assert teach_stream(y, spec).tolist() == [0, 0, 0, 1, 1, 1, 1, 1, 1]


def test_bsc_block_framing():
    k = 10
    spec = ProtocolSpec("bsc-block", k, make_bsc(0.2), make_bsc(0.2))
    rng = np.random.default_rng(1)
    y = rng.integers(2, size=3 * k)
    x = teach_stream(y, spec)
    assert x[:k].tolist() == [0] * k
    assert x[k:2 * k].tolist() == teach_block_bsc(y[:k], 0.2).tolist()
    assert x[2 * k:].tolist() == teach_block_bsc(y[k:2 * k], 0.2).tolist()


def test_block_stream_length_check():
    spec = ProtocolSpec("bsc-block", 4, make_bsc(0.2), make_bsc(0.2))
    with pytest.raises(DomainError):
        teach_stream(np.zeros(10, dtype=int), spec)


SPECS = [
    ProtocolSpec("simple-forwarding", 5, make_bsc(0.2), make_bsc(0.2)),
    ProtocolSpec("cumulative", 5, make_bsc(0.2), make_bsc(0.2)),
    ProtocolSpec("sqrt-block-majority", 5, make_bsc(0.2), make_bsc(0.2)),
    ProtocolSpec("bsc-block", 5, make_bsc(0.2), make_bsc(0.2)),
    ProtocolSpec("dmc-block", 5, P3, make_reverse_z(0.8)),
]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SPECS), st.integers(0, 2**32 - 1), st.integers(1, 29))
def test_causality(spec, seed, i):
    rng = np.random.default_rng(seed)
    m = spec.ch_p.alphabet_size
    y = rng.integers(m, size=30)
    y2 = y.copy()
    y2[i:] = rng.integers(m, size=30 - i)
    # X_1..X_i may depend on Y_1..Y_i only
    assert np.array_equal(teach_stream(y, spec)[:i], teach_stream(y2, spec)[:i])


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_batch_matches_stream(spec):
    rng = np.random.default_rng(9)
    y = rng.integers(spec.ch_p.alphabet_size, size=(40, 30))
    batch = teach_batch(y, spec)
    for row, out in zip(y, batch):
        assert np.array_equal(teach_stream(row, spec), out)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_spec_json_round_trip(spec):
    again = ProtocolSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()


def test_spec_rejects():
    with pytest.raises(DomainError):
        ProtocolSpec("bsc-block", 4, make_reverse_z(0.8), make_bsc(0.2))
    with pytest.raises(DomainError):
        ProtocolSpec("teleport", 4, make_bsc(0.2), make_bsc(0.2))
    with pytest.raises(DomainError):
        ProtocolSpec("bsc-block", 0, make_bsc(0.2), make_bsc(0.2))
    with pytest.raises(DomainError):
        ProtocolSpec.from_json({"kind": "bsc-block", "k": 4, "P": {"kind": "bsc", "p": 0.2},
                                "Q": {"kind": "bsc", "p": 0.2}, "extra": 1})


def test_dmc_spec_default_tilt():
    from twohop.exponent import two_hop_rate
    spec = ProtocolSpec("dmc-block", 4, P3, make_reverse_z(0.8))
    assert spec.s_bar == pytest.approx(two_hop_rate(P3, make_reverse_z(0.8)).s_star)
    assert spec.mu_max < 0
