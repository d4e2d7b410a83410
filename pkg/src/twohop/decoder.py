"""Student-side maximum-likelihood decoding.

A block received by the student is a mixture over a latent teacher state
(the observed fraction of ones for ``bsc-block``, the block LLR for
``dmc-block``).  Each latent state fixes a transition position ``t``: the
first ``t`` transmitted bits take one value and the rest the other, so

    log P(W | latent) = sum_{i<t} head[w_i] + sum_{i>=t} tail[w_i]

and moving from one threshold to the next only touches the positions in
between.  Zero-probability emissions are tracked as a separate count so
that the running sum never has to subtract an infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError
from .protocol import ProtocolSpec


@dataclass(frozen=True)
class BlockLlrTables:
    """Everything the student needs to score one block.

    ``log_prior0[j]``, ``log_prior1[j]`` are the latent masses under each
    hypothesis; ``threshold[j]`` is the transition position, non-decreasing
    in ``j``; ``head`` / ``tail`` are log emission probabilities (indexed by
    received symbol) for positions before / after the transition.
    """

    k: int
    log_prior0: np.ndarray
    log_prior1: np.ndarray
    threshold: np.ndarray
    head: np.ndarray
    tail: np.ndarray

    @classmethod
    def from_spec(cls, spec: ProtocolSpec) -> "BlockLlrTables":
        k = spec.k
        with np.errstate(divide="ignore"):
            log_q0 = np.log(np.asarray(spec.ch_q.row0))
            log_q1 = np.log(np.asarray(spec.ch_q.row1))
        if spec.kind == "bsc-block":
            p = spec.p
            j = np.arange(k + 1)
            log_binom = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
            prior1 = log_binom + j * math.log(1 - p) + (k - j) * math.log(p)
            prior0 = log_binom + j * math.log(p) + (k - j) * math.log(1 - p)
            # leading ones, then zeros
            return cls(k, prior0, prior1, spec.bsc_thresholds.copy(), log_q1, log_q0)
        if spec.kind == "dmc-block":
            dist = spec.llr_distribution
            # leading zeros, then ones
            return cls(k, dist.log_pmf0.copy(), dist.log_pmf1.copy(), spec.g_table.copy(), log_q0, log_q1)
        raise DomainError(f"no block tables for protocol kind {spec.kind!r}")

    @property
    def latent_count(self) -> int:
        return self.threshold.size


def _mix_llr(log_cond: np.ndarray, tables: BlockLlrTables) -> float:
    a1 = logsumexp(tables.log_prior1 + log_cond)
    a0 = logsumexp(tables.log_prior0 + log_cond)
    if a0 == -np.inf and a1 == -np.inf:
        raise DomainError("block has zero probability under both hypotheses")
    return float(a1 - a0)


def block_llr_fast(w_block, tables: BlockLlrTables):
    """ln P(W|1)/P(W|0) for one block in O(k + latents) time.

    Returns ``(llr, reads)`` where ``reads`` counts per-position table
    lookups; it is at most ``k + (max threshold - min threshold) <= 2k``.
    """
    w = np.asarray(w_block)
    k = tables.k
    if w.size != k:
        raise DomainError(f"block has length {w.size}, expected {k}")
    head, tail, thr = tables.head, tables.tail, tables.threshold
    reads = 0
    total = 0.0
    zeros = 0
    t = int(thr[0])
    for i in range(k):
        v = head[w[i]] if i < t else tail[w[i]]
        reads += 1
        if v == -math.inf:
            zeros += 1
        else:
            total += v
    log_cond = np.empty(thr.size)
    for j in range(thr.size):
        nt = int(thr[j])
        for i in range(t, nt):
            reads += 1
            old, new = tail[w[i]], head[w[i]]
            if old == -math.inf:
                zeros -= 1
            else:
                total -= old
            if new == -math.inf:
                zeros += 1
            else:
                total += new
        t = nt
        log_cond[j] = total if zeros == 0 else -math.inf
    return _mix_llr(log_cond, tables), reads


def block_llr_naive(w_block, tables: BlockLlrTables) -> float:
    """Direct O(k * latents) evaluation, used as a test oracle."""
    w = np.asarray(w_block)
    k = tables.k
    if w.size != k:
        raise DomainError(f"block has length {w.size}, expected {k}")
    head_vals = tables.head[w]
    tail_vals = tables.tail[w]
    log_cond = np.empty(tables.latent_count)
    for j, t in enumerate(tables.threshold):
        log_cond[j] = head_vals[:t].sum() + tail_vals[t:].sum()
    return _mix_llr(log_cond, tables)


def block_llr_batch(blocks: np.ndarray, tables: BlockLlrTables) -> np.ndarray:
    """Per-block LLRs for an integer array whose last axis has length k.

    Same quantity as ``block_llr_fast``, computed with prefix sums so that a
    whole batch is scored at once.
    """
    blocks = np.asarray(blocks)
    k = tables.k
    if blocks.shape[-1] != k:
        raise DomainError(f"blocks have length {blocks.shape[-1]}, expected {k}")
    head, tail = tables.head, tables.tail
    head_zero = head == -np.inf
    tail_zero = tail == -np.inf
    hf = np.where(head_zero, 0.0, head)
    tf = np.where(tail_zero, 0.0, tail)
    shape = blocks.shape[:-1]
    flat = blocks.reshape(-1, k)
    diff = hf[flat] - tf[flat]
    zdiff = head_zero[flat].astype(np.int16) - tail_zero[flat].astype(np.int16)
    csum = np.zeros((flat.shape[0], k + 1))
    np.cumsum(diff, axis=1, out=csum[:, 1:])
    zsum = np.zeros((flat.shape[0], k + 1), dtype=np.int16)
    np.cumsum(zdiff, axis=1, out=zsum[:, 1:])
    base = tf[flat].sum(axis=1)
    zbase = tail_zero[flat].sum(axis=1)
    thr = tables.threshold
    log_cond = base[:, None] + csum[:, thr]
    impossible = (zbase[:, None] + zsum[:, thr]) > 0
    log_cond[impossible] = -np.inf
    a1 = logsumexp(tables.log_prior1[None, :] + log_cond, axis=1)
    a0 = logsumexp(tables.log_prior0[None, :] + log_cond, axis=1)
    with np.errstate(invalid="ignore"):
        out = a1 - a0
    return out.reshape(shape)


def block_llrs(z_stream, spec: ProtocolSpec, tables: BlockLlrTables | None = None) -> np.ndarray:
    """LLRs of the informative blocks 1, 2, ... of a received stream."""
    z = np.asarray(z_stream)
    k = spec.k
    n = z.size
    if n % k:
        raise DomainError(f"stream length {n} is not a multiple of k = {k}")
    if n < 2 * k:
        raise DomainError(f"need at least two blocks (n >= 2k), got n = {n}, k = {k}")
    tables = tables or BlockLlrTables.from_spec(spec)
    return np.array([block_llr_fast(z[i:i + k], tables)[0] for i in range(k, n, k)])


def decode_block_protocol(z_stream, spec: ProtocolSpec, blocks: int | None = None,
                          tables: BlockLlrTables | None = None):
    """ML estimate of Theta from a block-protocol stream.

    Block 0 is discarded.  ``blocks`` limits decoding to the first that many
    informative blocks (anytime operation).  Returns ``(bit, total_llr)``;
    a total of exactly zero decodes to 0.
    """
    llrs = block_llrs(z_stream, spec, tables)
    if blocks is not None:
        if not 1 <= blocks <= llrs.size:
            raise DomainError(f"blocks must lie in [1, {llrs.size}], got {blocks!r}")
        llrs = llrs[:blocks]
    total = float(llrs.sum())
    return int(total > 0), total


def decode_majority(z_stream, epsilon: float, rng: np.random.Generator) -> int:
    """Majority vote over the last ceil(epsilon * n) symbols; ties by a fair coin."""
    z = np.asarray(z_stream)
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    window = math.ceil(epsilon * z.size)
    if window == 0:
        raise DomainError("empty majority window")
    tail = z[z.size - window:]
    twice = 2 * int(np.count_nonzero(tail)) - window
    if twice > 0:
        return 1
    if twice < 0:
        return 0
    return int(rng.integers(2))


def decode_majority_batch(z: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    z = np.asarray(z)
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    n = z.shape[1]
    window = math.ceil(epsilon * n)
    twice = 2 * z[:, n - window:].sum(axis=1, dtype=np.int64) - window
    coin = rng.integers(2, size=z.shape[0])
    return np.where(twice > 0, 1, np.where(twice < 0, 0, coin))
