"""Monte Carlo and exact-enumeration experiments."""
from __future__ import annotations

import csv
import io
import json
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from . import channel as chmod
from .decoder import BlockLlrTables, block_llr_batch, decode_majority_batch
from .errors import DomainError
from .exponent import binary_kl
from .protocol import BLOCK_KINDS, ProtocolSpec, teach_batch

DECODERS = ("ml", "majority")
CHUNK = 8192
CSV_COLUMNS = ("protocol", "p_or_P", "q_or_Q", "k", "n", "trials", "errors", "p_hat", "ci_lo", "ci_hi")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProtocolSpec
    decoder: str = "ml"
    n_grid: tuple = ()
    trials: int = 10_000
    seed: int = 0
    min_errors: int = 50
    epsilon: float = 1.0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.decoder not in DECODERS:
            raise DomainError(f"unknown decoder {self.decoder!r}")
        if self.decoder == "ml" and self.spec.kind not in BLOCK_KINDS:
            raise DomainError(f"ml decoding is only implemented for block protocols, not {self.spec.kind!r}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])) or any(n < 1 for n in self.n_grid):
            raise DomainError(f"n_grid must be increasing positive integers, got {self.n_grid}")
        if self.spec.kind in BLOCK_KINDS:
            for n in self.n_grid:
                if n % self.spec.k or n < 2 * self.spec.k:
                    raise DomainError(f"n = {n} must be a multiple of k = {self.spec.k} and at least 2k")
        if not 0.0 < self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")

    def to_json(self) -> dict:
        return {
            "protocol": self.spec.to_json(),
            "decoder": self.decoder,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "seed": self.seed,
            "min_errors": self.min_errors,
            "epsilon": self.epsilon,
            "threads": self.threads,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        allowed = {"protocol", "decoder", "n_grid", "trials", "seed", "min_errors", "epsilon", "threads"}
        extra = set(data) - allowed
        if extra:
            raise DomainError(f"unknown config fields: {sorted(extra)}")
        if "protocol" not in data:
            raise DomainError("config is missing 'protocol'")
        kw = {key: data[key] for key in allowed - {"protocol"} if key in data}
        if "n_grid" in kw:
            kw["n_grid"] = tuple(kw["n_grid"])
        return cls(ProtocolSpec.from_json(data["protocol"]), **kw)


@dataclass(frozen=True)
class ErrorEstimate:
    n: int
    trials: int
    errors: int
    p_hat: float
    ci_lo: float
    ci_hi: float

    @property
    def rate(self) -> float:
        """Per-point -ln(p_hat) / n (inf when no errors were seen)."""
        return math.inf if self.errors == 0 else -math.log(self.p_hat) / self.n

    def upper(self, level: float = 0.99) -> float:
        return wilson_interval(self.errors, self.trials, level)[1]


def wilson_interval(errors: int, trials: int, level: float = 0.95):
    z = norm.ppf(0.5 + level / 2.0)
    ph = errors / trials
    denom = 1.0 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, float(centre - half))
    hi = 1.0 if errors == trials else min(1.0, float(centre + half))
    return lo, hi


def _chunk_rng(seed: int, n: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(n, chunk)))


def _run_chunk(config: ExperimentConfig, n: int, chunk: int, size: int, tables) -> int:
    rng = _chunk_rng(config.seed, n, chunk)
    spec = config.spec
    theta = rng.integers(2, size=size)
    y = chmod.transmit(spec.ch_p, np.broadcast_to(theta[:, None], (size, n)), rng)
    x = teach_batch(y, spec)
    z = chmod.transmit(spec.ch_q, x, rng)
    if config.decoder == "ml":
        k = spec.k
        llr = block_llr_batch(z.reshape(size, n // k, k)[:, 1:, :], tables)
        total = llr.sum(axis=1)
        guess = (total > 0).astype(int)
    else:
        guess = decode_majority_batch(z, config.epsilon, rng)
    return int(np.count_nonzero(guess != theta))


def run_point(config: ExperimentConfig, n: int) -> ErrorEstimate:
    """Simulate ``config.trials`` independent trials at horizon ``n``.

    Trials are grouped into fixed chunks of ``CHUNK``; chunk ``c`` draws from
    a stream keyed by (seed, n, c), so counts do not depend on thread count
    or scheduling.
    """
    tables = BlockLlrTables.from_spec(config.spec) if config.decoder == "ml" else None
    sizes = [min(CHUNK, config.trials - start) for start in range(0, config.trials, CHUNK)]
    jobs = [(n, c, s) for c, s in enumerate(sizes)]
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            errors = sum(pool.map(lambda j: _run_chunk(config, *j, tables), jobs))
    else:
        errors = sum(_run_chunk(config, *j, tables) for j in jobs)
    lo, hi = wilson_interval(errors, config.trials)
    return ErrorEstimate(n, config.trials, errors, errors / config.trials, lo, hi)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    used_n: tuple = field(default_factory=tuple)


def fit_exponent(points: Sequence[ErrorEstimate], min_errors: int = 50) -> ExponentFit:
    """Weighted least squares of -ln p_hat on n with a free intercept.

    Weights are inverse delta-method variances, Var(ln p_hat) ~ (1 - p) / (trials p).
    Points with fewer than ``min_errors`` errors are dropped.
    """
    pts = [pt for pt in points if pt.errors >= min_errors and pt.errors < pt.trials]
    if len(pts) < 3:
        raise DomainError(f"need at least 3 points with >= {min_errors} errors, got {len(pts)}")
    n = np.array([pt.n for pt in pts], dtype=float)
    y = np.array([-math.log(pt.p_hat) for pt in pts])
    var = np.array([(1 - pt.p_hat) / (pt.trials * pt.p_hat) for pt in pts])
    w = 1.0 / var
    sw = w.sum()
    nbar = (w * n).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (n - nbar) ** 2).sum()
    slope = (w * (n - nbar) * (y - ybar)).sum() / sxx
    return ExponentFit(float(slope), float(math.sqrt(1.0 / sxx)), float(ybar - slope * nbar),
                       tuple(int(v) for v in n))


def sweep(config: ExperimentConfig):
    points = [run_point(config, n) for n in config.n_grid]
    try:
        fit = fit_exponent(points, config.min_errors)
    except DomainError:
        fit = None
    return points, fit


def analytic_block_bound(rho_w: float, n: int, k: int) -> float:
    """Upper bound rho_W^(n/k - 1) on the block protocol's error probability."""
    return rho_w ** (n // k - 1)


def bsc_rho_hat(p: float, k: int) -> float:
    """Closed-form single-block bound (k+1)^2 exp(-k D(1/2 || p))."""
    return (k + 1) ** 2 * math.exp(-k * binary_kl(0.5, p))


def _block_log_laws(spec: ProtocolSpec, outputs: np.ndarray):
    tables = BlockLlrTables.from_spec(spec)
    k = spec.k
    # log P(W = w | latent j) for every enumerated w
    head, tail = tables.head, tables.tail
    pos = np.arange(k)
    with np.errstate(invalid="ignore"):
        log_cond = np.stack([
            np.where(pos[None, :] < t, head[outputs], tail[outputs]).sum(axis=1)
            for t in tables.threshold
        ], axis=1)
    lp0 = logsumexp(tables.log_prior0[None, :] + log_cond, axis=1)
    lp1 = logsumexp(tables.log_prior1[None, :] + log_cond, axis=1)
    return lp0, lp1


@dataclass(frozen=True)
class BlockVerification:
    kind: str
    k: int
    rho_w: float
    bound: float
    margin: float
    s_bar: Optional[float] = None
    rho_w_s: Optional[float] = None
    bound_s: Optional[float] = None

    @property
    def passed(self) -> bool:
        ok = self.rho_w <= self.bound
        if self.rho_w_s is not None:
            ok = ok and self.rho_w_s <= self.bound_s
        return bool(ok)

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def exact_block_laws(spec: ProtocolSpec):
    """Exact log P(W = w | Theta) over all |Z|^k student blocks."""
    m = spec.ch_q.alphabet_size
    if m ** spec.k > 2 ** 20:
        raise DomainError(f"refusing to enumerate {m}^{spec.k} blocks")
    outputs = np.array(list(itertools.product(range(m), repeat=spec.k)), dtype=np.int64)
    return _block_log_laws(spec, outputs)


def exact_block_verification(spec: ProtocolSpec) -> BlockVerification:
    """Enumerate every student block and compare the exact coefficient with its bound.

    For ``bsc-block`` the bound is (k+1)^2 exp(-k D(1/2||p)); for
    ``dmc-block`` the tilted coefficient at s_bar is compared against
    (k+1)^(2|Y|) exp(k mu_max).
    """
    if spec.kind not in BLOCK_KINDS:
        raise DomainError("exact verification needs a block protocol")
    if spec.k > 12:
        raise DomainError(f"k = {spec.k} is too large for exact enumeration (k <= 12)")
    lp0, lp1 = exact_block_laws(spec)
    rho_w = float(np.exp(logsumexp(0.5 * (lp0 + lp1))))
    k = spec.k
    if spec.kind == "bsc-block":
        bound = bsc_rho_hat(spec.p, k)
        return BlockVerification(spec.kind, k, rho_w, bound, bound - rho_w)
    s = spec.s_bar
    with np.errstate(invalid="ignore"):
        terms = (1 - s) * lp0 + s * lp1
    terms = terms[np.isfinite(lp0) & np.isfinite(lp1)]
    rho_s_w = float(np.exp(logsumexp(terms)))
    bound_s = (k + 1) ** (2 * spec.ch_p.alphabet_size) * math.exp(k * spec.mu_max)
    bound_half = bound_s if s == 0.5 else (k + 1) ** (2 * spec.ch_p.alphabet_size)
    return BlockVerification(spec.kind, k, rho_w, bound_half, bound_s - rho_s_w, s, rho_s_w, bound_s)


def block_mu_second_derivative(spec: ProtocolSpec, s: float) -> float:
    """mu'' of the single-use channel Theta -> W, as the tilted variance of its LLR."""
    lp0, lp1 = exact_block_laws(spec)
    keep = np.isfinite(lp0) & np.isfinite(lp1)
    lp0, lp1 = lp0[keep], lp1[keep]
    expo = (1 - s) * lp0 + s * lp1
    w = np.exp(expo - logsumexp(expo))
    l = lp1 - lp0
    m = w @ l
    return float(w @ (l - m) ** 2)


def ml_error_exact(lp0: np.ndarray, lp1: np.ndarray) -> float:
    """Exact error of the ML rule (ties to 0) for a single observation."""
    p0, p1 = np.exp(lp0), np.exp(lp1)
    decide1 = lp1 > lp0
    return float(0.5 * (p0[decide1].sum() + p1[~decide1].sum()))


def write_csv(points: Sequence[ErrorEstimate], spec: ProtocolSpec, label: str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    p_desc = _channel_label(spec.ch_p)
    q_desc = _channel_label(spec.ch_q)
    for pt in points:
        writer.writerow([label or spec.kind, p_desc, q_desc, spec.k, pt.n, pt.trials, pt.errors,
                         repr(pt.p_hat), repr(pt.ci_lo), repr(pt.ci_hi)])
    return buf.getvalue()


def _channel_label(ch) -> str:
    p = chmod.bsc_crossover(ch)
    if p is not None:
        return repr(p)
    return json.dumps(chmod.to_descriptor(ch), separators=(",", ":"))
