"""Teacher strategies.

Block protocols split time into blocks of length ``k``; block ``i`` of the
teacher's transmission is a function of block ``i - 1`` of its observations
and is always a sorted (single-transition) bit string.  Block 0 carries
filler that the student ignores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from . import channel as chmod
from .channel import Dmc
from .errors import ConsistencyError, DomainError
from .exponent import TiltedFamily, binary_kl, two_hop_rate

KINDS = ("simple-forwarding", "cumulative", "sqrt-block-majority", "bsc-block", "dmc-block")
BLOCK_KINDS = ("bsc-block", "dmc-block")
MERGE_TOL = 1e-12
# guards floor(k f) against k f landing a few ulps below an integer
FLOOR_EPS = 1e-9


def f_fraction(alpha: float, p: float) -> float:
    """Fraction of ones sent when a fraction ``alpha`` of the observed block is ones."""
    if not 0.0 < p < 0.5:
        raise DomainError(f"p must lie in (0, 1/2), got {p!r}")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha < p:
        return 0.0
    if alpha <= 0.5:
        return binary_kl(alpha, p) / (2.0 * binary_kl(0.5, p))
    if alpha < 1.0 - p:
        return 1.0 - f_fraction(1.0 - alpha, p)
    return 1.0


def bsc_threshold(ones: int, k: int, p: float) -> int:
    """Number of leading ones the BSC teacher emits for a block with ``ones`` ones."""
    return int(math.floor(k * f_fraction(ones / k, p) + FLOOR_EPS))


def teach_block_bsc(y_block, p: float) -> np.ndarray:
    y = np.asarray(y_block)
    k = y.size
    if k == 0:
        raise DomainError("empty block")
    t = bsc_threshold(int(np.count_nonzero(y)), k, p)
    out = np.zeros(k, dtype=np.int8)
    out[:t] = 1
    return out


@dataclass(frozen=True)
class LlrDistribution:
    """Exact law of the block LLR sum(ln P(Y_i|1)/P(Y_i|0)) over ``k`` symbols.

    ``support`` is strictly increasing and may contain -inf / +inf.  Masses
    are kept in the log domain; ``log_tail0_geq[i] = ln P(L0 >= support[i])``
    and ``log_tail1_leq[i] = ln P(L1 <= support[i])``.
    """

    k: int
    support: np.ndarray
    log_pmf0: np.ndarray
    log_pmf1: np.ndarray
    log_tail0_geq: np.ndarray
    log_tail1_leq: np.ndarray
    # symbol-count vector -> support index
    type_index: dict = field(repr=False, compare=False)

    @property
    def pmf0(self):
        return np.exp(self.log_pmf0)

    @property
    def pmf1(self):
        return np.exp(self.log_pmf1)

    @property
    def tail0_geq(self):
        return np.exp(self.log_tail0_geq)

    @property
    def tail1_leq(self):
        return np.exp(self.log_tail1_leq)

    def index_of(self, l: float) -> int:
        """Support index of an LLR value, tolerating 1e-9 of drift."""
        i = int(np.searchsorted(self.support, l))
        best = None
        for j in (i - 1, i):
            if 0 <= j < self.support.size:
                v = self.support[j]
                if v == l or (np.isfinite(v) and np.isfinite(l) and abs(v - l) <= 1e-9):
                    best = j
        if best is None:
            raise ConsistencyError("LLR value not in support", {"l": l})
        return best


def _compositions(k: int, m: int):
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, m - 1):
            yield (first,) + rest


def type_llr(counts, llr: np.ndarray) -> float:
    """LLR of any block with the given symbol counts (extended real, nan if impossible)."""
    total = 0.0
    pos = neg = False
    for c, v in zip(counts, llr):
        if c == 0:
            continue
        if np.isnan(v):
            return math.nan
        if v == math.inf:
            pos = True
        elif v == -math.inf:
            neg = True
        else:
            total += c * v
    if pos and neg:
        return math.nan
    if pos:
        return math.inf
    if neg:
        return -math.inf
    return total


def build_llr_distribution(ch: Dmc, k: int) -> LlrDistribution:
    """Exact block-LLR law by summing over symbol-count types.

    The LLR depends on a block only through its type, so there are at most
    (k+1)^|Y| distinct values; each type carries a multinomial weight.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    fam = TiltedFamily(ch)
    with np.errstate(divide="ignore"):
        log0 = np.log(np.asarray(ch.row0))
        log1 = np.log(np.asarray(ch.row1))
    m = ch.alphabet_size
    vals, lp0, lp1, types = [], [], [], []
    log_kfact = gammaln(k + 1)
    for counts in _compositions(k, m):
        c = np.asarray(counts, dtype=float)
        used = c > 0
        log_mult = log_kfact - gammaln(c + 1).sum()
        a = log_mult + (c[used] * log0[used]).sum()
        b = log_mult + (c[used] * log1[used]).sum()
        if a == -np.inf and b == -np.inf:
            continue
        vals.append(type_llr(counts, fam.llr))
        lp0.append(a)
        lp1.append(b)
        types.append(counts)
    vals = np.asarray(vals)
    order = np.argsort(vals, kind="stable")
    support, g0, g1 = [], [], []
    type_index = {}
    for idx in order:
        v = vals[idx]
        if support and (v == support[-1] or (
                np.isfinite(v) and np.isfinite(support[-1])
                and abs(v - support[-1]) <= MERGE_TOL * max(1.0, abs(v)))):
            g0[-1] = np.logaddexp(g0[-1], lp0[idx])
            g1[-1] = np.logaddexp(g1[-1], lp1[idx])
        else:
            support.append(v)
            g0.append(lp0[idx])
            g1.append(lp1[idx])
        type_index[types[idx]] = len(support) - 1
    log_pmf0 = np.asarray(g0)
    log_pmf1 = np.asarray(g1)
    # normalise away accumulated rounding in the multinomial weights
    log_pmf0 -= logsumexp(log_pmf0)
    log_pmf1 -= logsumexp(log_pmf1)
    tail0 = np.logaddexp.accumulate(log_pmf0[::-1])[::-1]
    tail1 = np.logaddexp.accumulate(log_pmf1)
    return LlrDistribution(k, np.asarray(support), log_pmf0, log_pmf1,
                           np.minimum(tail0, 0.0), np.minimum(tail1, 0.0), type_index)


def _scaled_log(coef: float, log_tail: float) -> float:
    # coef * ln P with the convention 0 * (-inf) = 0
    if coef == 0.0:
        return 0.0
    return coef * log_tail


def g_unrounded(dist: LlrDistribution, k: int, s_bar: float, mu_max: float) -> np.ndarray:
    """The real-valued threshold function before rounding, one entry per support point."""
    if not mu_max < 0.0:
        raise DomainError(f"mu_max must be negative, got {mu_max!r}")
    if not 0.0 <= s_bar <= 1.0:
        raise DomainError(f"s_bar must lie in [0, 1], got {s_bar!r}")
    a = (1.0 - s_bar) / mu_max
    b = s_bar / mu_max
    out = np.empty(dist.support.size)
    for i, l in enumerate(dist.support):
        if l <= 0:
            out[i] = min(k, _scaled_log(a, dist.log_tail0_geq[i]))
        else:
            out[i] = max(0.0, k - _scaled_log(b, dist.log_tail1_leq[i]))
    return out


def build_g_table(dist: LlrDistribution, k: int, s_bar: float, mu_max: float) -> np.ndarray:
    """Integer thresholds: nearest integer (ties up), clamped to [0, k], made monotone.

    The piecewise rule can step down across l = 0 when |mu_max| is small
    (the l <= 0 branch saturates at k while the l > 0 branch drops to 0).  A
    running maximum restores monotonicity without leaving the sandwich
    k - (s_bar/mu_max) ln P(L1 <= l) <= g(l) <= ((1-s_bar)/mu_max) ln P(L0 >= l),
    because the upper side is itself non-decreasing in l.
    """
    raw = g_unrounded(dist, k, s_bar, mu_max)
    table = np.clip(np.floor(raw + 0.5), 0, k).astype(int)
    table = np.maximum.accumulate(table)
    if np.any(np.diff(table) < 0):
        bad = int(np.argmax(np.diff(table) < 0))
        raise ConsistencyError(
            "g table is not monotone",
            {"index": bad, "support": dist.support[bad:bad + 2].tolist(), "g": raw[bad:bad + 2].tolist()},
        )
    return table


def g_monotone(dist: LlrDistribution, k: int, s_bar: float, mu_max: float) -> np.ndarray:
    """Unrounded thresholds after the running-maximum repair."""
    return np.maximum.accumulate(g_unrounded(dist, k, s_bar, mu_max))


@dataclass(frozen=True)
class ProtocolSpec:
    """Which teacher strategy to run, over which channel pair.

    ``s_bar`` only matters for ``dmc-block``; when omitted it defaults to the
    minimiser of max(mu_P, mu_Q).
    """

    kind: str
    k: int
    ch_p: Dmc
    ch_q: Dmc
    s_bar: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown protocol kind {self.kind!r}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        if self.ch_q.alphabet_size < 2:
            raise DomainError("teacher-student channel needs binary input")
        if self.kind in ("simple-forwarding", "cumulative", "sqrt-block-majority", "bsc-block"):
            if self.ch_p.alphabet_size != 2:
                raise DomainError(f"{self.kind} needs a binary-output teacher channel")
        if self.kind == "bsc-block" and chmod.bsc_crossover(self.ch_p) is None:
            raise DomainError("bsc-block needs a BSC teacher channel")
        if self.kind == "dmc-block":
            if self.s_bar is None:
                object.__setattr__(self, "s_bar", two_hop_rate(self.ch_p, self.ch_q).s_star)
            if not 0.0 <= self.s_bar <= 1.0:
                raise DomainError(f"s_bar must lie in [0, 1], got {self.s_bar!r}")
            if not self.mu_max < 0.0:
                raise DomainError(f"mu_max = {self.mu_max!r} is not negative at s_bar = {self.s_bar!r}")

    @property
    def p(self) -> float:
        """Crossover of the teacher's BSC (bsc-block)."""
        return chmod.bsc_crossover(self.ch_p)

    @cached_property
    def mu_max(self) -> float:
        return max(TiltedFamily(self.ch_p).mu(self.s_bar), TiltedFamily(self.ch_q).mu(self.s_bar))

    @cached_property
    def llr_distribution(self) -> LlrDistribution:
        return build_llr_distribution(self.ch_p, self.k)

    @cached_property
    def g_table(self) -> np.ndarray:
        return build_g_table(self.llr_distribution, self.k, self.s_bar, self.mu_max)

    @cached_property
    def bsc_thresholds(self) -> np.ndarray:
        """Leading-ones count for each possible number of observed ones 0..k."""
        return np.array([bsc_threshold(j, self.k, self.p) for j in range(self.k + 1)])

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "k": self.k,
            "P": chmod.to_descriptor(self.ch_p),
            "Q": chmod.to_descriptor(self.ch_q),
        }
        if self.kind == "dmc-block":
            out["s_bar"] = self.s_bar
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ProtocolSpec":
        allowed = {"kind", "k", "P", "Q", "s_bar"}
        extra = set(data) - allowed
        if extra:
            raise DomainError(f"unknown protocol fields: {sorted(extra)}")
        for key in ("kind", "k", "P", "Q"):
            if key not in data:
                raise DomainError(f"protocol is missing {key!r}")
        return cls(data["kind"], int(data["k"]), chmod.from_descriptor(data["P"]),
                   chmod.from_descriptor(data["Q"]), data.get("s_bar"))


def block_llr_value(y_block, spec: ProtocolSpec) -> float:
    counts = tuple(np.bincount(np.asarray(y_block), minlength=spec.ch_p.alphabet_size).tolist())
    return type_llr(counts, TiltedFamily(spec.ch_p).llr)


def teach_block_dmc(y_block, spec: ProtocolSpec) -> np.ndarray:
    """Emit g(l) zeros followed by k - g(l) ones, l being the block LLR."""
    if spec.kind != "dmc-block":
        raise DomainError("teach_block_dmc needs a dmc-block spec")
    y = np.asarray(y_block)
    if y.size != spec.k:
        raise DomainError(f"block has length {y.size}, expected {spec.k}")
    dist = spec.llr_distribution
    counts = tuple(np.bincount(y, minlength=spec.ch_p.alphabet_size).tolist())
    idx = dist.type_index.get(counts)
    if idx is None:
        idx = dist.index_of(block_llr_value(y, spec))
    g = int(spec.g_table[idx])
    out = np.ones(spec.k, dtype=np.int8)
    out[:g] = 0
    return out


def _majority_with_memory(ones: int, total: int, prev: int) -> int:
    twice = 2 * ones
    if twice > total:
        return 1
    if twice < total:
        return 0
    return prev


def teach_stream(y_stream, spec: ProtocolSpec) -> np.ndarray:
    """Teacher output for a whole observation stream; x[i] depends on y[:i+1] only."""
    y = np.asarray(y_stream)
    n = y.size
    if n == 0:
        raise DomainError("empty stream")
    if spec.kind == "simple-forwarding":
        return y.astype(np.int8)
    out = np.zeros(n, dtype=np.int8)
    if spec.kind == "cumulative":
        ones = np.cumsum(y)
        prev = 0
        for i in range(n):
            prev = _majority_with_memory(int(ones[i]), i + 1, prev)
            out[i] = prev
        return out
    if spec.kind == "sqrt-block-majority":
        b = math.isqrt(n - 1) + 1 if n > 1 else 1  # ceil(sqrt(n))
        ones = 0
        prev = 0
        for start in range(b, n, b):
            ones += int(np.count_nonzero(y[start - b:start]))
            prev = _majority_with_memory(ones, start, prev)
            out[start:start + b] = prev
        return out
    k = spec.k
    if n % k:
        raise DomainError(f"stream length {n} is not a multiple of k = {k}")
    for start in range(k, n, k):
        prev_block = y[start - k:start]
        if spec.kind == "bsc-block":
            out[start:start + k] = teach_block_bsc(prev_block, spec.p)
        else:
            out[start:start + k] = teach_block_dmc(prev_block, spec)
    return out


def teach_batch(y: np.ndarray, spec: ProtocolSpec) -> np.ndarray:
    """Vectorised ``teach_stream`` over the rows of a (trials, n) array."""
    y = np.asarray(y)
    trials, n = y.shape
    if spec.kind == "simple-forwarding":
        return y.astype(np.int8)
    if spec.kind == "cumulative":
        ones = np.cumsum(y, axis=1, dtype=np.int32)
        twice = 2 * ones - np.arange(1, n + 1)
        out = np.zeros((trials, n), dtype=np.int8)
        prev = np.zeros(trials, dtype=np.int8)
        for i in range(n):
            d = twice[:, i]
            prev = np.where(d > 0, 1, np.where(d < 0, 0, prev)).astype(np.int8)
            out[:, i] = prev
        return out
    if spec.kind == "sqrt-block-majority":
        b = math.isqrt(n - 1) + 1 if n > 1 else 1
        out = np.zeros((trials, n), dtype=np.int8)
        ones = np.zeros(trials, dtype=np.int32)
        prev = np.zeros(trials, dtype=np.int8)
        for start in range(b, n, b):
            ones += y[:, start - b:start].sum(axis=1, dtype=np.int32)
            d = 2 * ones - start
            prev = np.where(d > 0, 1, np.where(d < 0, 0, prev)).astype(np.int8)
            out[:, start:start + b] = prev[:, None]
        return out
    k = spec.k
    if n % k:
        raise DomainError(f"stream length {n} is not a multiple of k = {k}")
    blocks = y.reshape(trials, n // k, k)
    pos = np.arange(k)
    if spec.kind == "bsc-block":
        t = spec.bsc_thresholds[blocks.sum(axis=2)]
        enc = (pos[None, None, :] < t[..., None]).astype(np.int8)
    else:
        idx = _type_indices(blocks, spec)
        g = spec.g_table[idx]
        enc = (pos[None, None, :] >= g[..., None]).astype(np.int8)
    out = np.zeros((trials, n // k, k), dtype=np.int8)
    out[:, 1:, :] = enc[:, :-1, :]
    return out.reshape(trials, n)


def _type_indices(blocks: np.ndarray, spec: ProtocolSpec) -> np.ndarray:
    m = spec.ch_p.alphabet_size
    k = spec.k
    counts = np.stack([(blocks == y).sum(axis=-1) for y in range(m)], axis=-1)
    # mixed-radix code of the count vector, looked up in a dense table
    radix = (k + 1) ** np.arange(m)
    codes = counts @ radix
    lut = np.full((k + 1) ** m, -1, dtype=np.int64)
    for counts_t, idx in spec.llr_distribution.type_index.items():
        lut[int(np.dot(counts_t, radix))] = idx
    out = lut[codes]
    if np.any(out < 0):
        raise ConsistencyError("observed a block type with zero probability under both hypotheses")
    return out
