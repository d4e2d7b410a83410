"""Error exponents for binary-input DMCs.

Everything here is built on the tilted coefficient

    rho(A, B, s) = sum_x P_A(x)^(1-s) P_B(x)^s,

and its logarithm ``mu(s)`` for a channel (A = row0, B = row1).  Sums run
over the common support of the two rows, which is also the continuity
extension at s = 0 and s = 1.  All logs are natural, so rates are in nats
per channel use.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .channel import Dmc, swap_inputs
from .errors import ConsistencyError, DomainError
from .optimize import golden_section

S_TOL = 1e-10
ENDPOINT_TOL = 1e-8
STATIONARY_TOL = 1e-7

FAMILIES = (
    "one-hop",
    "two-hop-achievable",
    "two-hop-flipped",
    "trivial-converse",
    "block-converse",
    "e1-converse",
)


def binary_kl(a: float, b: float) -> float:
    """D(a || b) between Bernoulli(a) and Bernoulli(b), with 0 ln 0 = 0."""
    if not 0.0 < b < 1.0:
        raise DomainError(f"binary_kl needs b in (0, 1), got {b!r}")
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"binary_kl needs a in [0, 1], got {a!r}")
    out = 0.0
    if a > 0.0:
        out += a * math.log(a / b)
    if a < 1.0:
        out += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return max(out, 0.0)


def rho_s(dist_a, dist_b, s: float) -> float:
    a = np.asarray(dist_a, dtype=float)
    b = np.asarray(dist_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("rho_s needs two probability vectors over the same alphabet")
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    for v in (a, b):
        if abs(v.sum() - 1.0) > 1e-12 or np.any(v < 0):
            raise DomainError("rho_s arguments must be probability vectors")
    both = (a > 0) & (b > 0)
    return float(np.sum(a[both] ** (1.0 - s) * b[both] ** s))


class TiltedFamily:
    """Per-symbol log-likelihood ratios of a channel and the tilted family they generate.

    ``llr[y] = ln(row1[y] / row0[y])`` as an extended real.  Only symbols in
    the common support enter ``mu`` and its derivatives.
    """

    def __init__(self, channel: Dmc):
        self.channel = channel
        r0 = np.asarray(channel.row0)
        r1 = np.asarray(channel.row1)
        self.row0, self.row1 = r0, r1
        llr = np.full(r0.shape, np.nan)
        common = (r0 > 0) & (r1 > 0)
        llr[common] = np.log(r1[common]) - np.log(r0[common])
        llr[(r0 == 0) & (r1 > 0)] = np.inf
        llr[(r1 == 0) & (r0 > 0)] = -np.inf
        self.llr = llr
        self.common = common
        self._log0 = np.log(r0[common])
        self._l = llr[common]
        # plain-float copies: mu is evaluated in tight optimisation loops
        self._pairs = list(zip(self._log0.tolist(), self._l.tolist()))

    def _weights(self, s):
        expo = self._log0 + s * self._l
        lse = logsumexp(expo)
        return lse, np.exp(expo - lse)

    def mu(self, s: float) -> float:
        _check_s(s)
        # each exponent is (1-s) ln row0 + s ln row1 <= 0, so no overflow
        return math.log(math.fsum(math.exp(a + s * l) for a, l in self._pairs))

    def mu_prime(self, s: float) -> float:
        _check_s(s)
        _, w = self._weights(s)
        return float(w @ self._l)

    def mu_double_prime(self, s: float) -> float:
        _check_s(s)
        _, w = self._weights(s)
        m = w @ self._l
        return float(w @ (self._l - m) ** 2)

    def mu_flipped(self, s: float) -> float:
        """mu of the input-swapped channel, i.e. mu(1 - s)."""
        return self.mu(1.0 - s)


def _check_s(s):
    if not -1e-15 <= s <= 1.0 + 1e-15:
        raise DomainError(f"s must lie in [0, 1], got {s!r}")


def _family(ch) -> TiltedFamily:
    return ch if isinstance(ch, TiltedFamily) else TiltedFamily(ch)


def mu(ch, s: float) -> float:
    return _family(ch).mu(s)


def mu_prime(ch, s: float) -> float:
    return _family(ch).mu_prime(s)


def mu_double_prime(ch, s: float) -> float:
    return _family(ch).mu_double_prime(s)


@dataclass(frozen=True)
class ExponentReport:
    family: str
    s_star: float
    mu_star: float
    rate: float
    endpoint: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown exponent family {self.family!r}")

    def to_json(self) -> dict:
        return asdict(self)


def _minimize(obj: Callable[[float], float], lo=0.0, hi=1.0):
    s, v = golden_section(obj, lo, hi, tol=S_TOL)
    return min(max(s, lo), hi), v


def _report(family, s, v, lo=0.0, hi=1.0) -> ExponentReport:
    at_end = s - lo <= ENDPOINT_TOL or hi - s <= ENDPOINT_TOL
    return ExponentReport(family, float(s), float(v), float(-v), at_end)


def one_hop_rate(ch) -> ExponentReport:
    fam = _family(ch)
    s, v = _minimize(fam.mu)
    return _report("one-hop", s, v)


def two_hop_rate(ch_p, ch_q, flipped: bool = False) -> ExponentReport:
    """Achievable learning rate -min_s max(mu_P(s), mu_Q(s)).

    With ``flipped`` the teacher may also swap the inputs of Q, which replaces
    mu_Q(s) by mu_Q(1-s); each orientation is convex, so both are searched
    separately and the better one is kept.
    """
    fp, fq = _family(ch_p), _family(ch_q)
    s, v = _minimize(lambda t: max(fp.mu(t), fq.mu(t)))
    if not flipped:
        return _report("two-hop-achievable", s, v)
    s2, v2 = _minimize(lambda t: max(fp.mu(t), fq.mu(1.0 - t)))
    if v2 < v:
        s, v = s2, v2
    return _report("two-hop-flipped", s, v)


def trivial_converse(ch_p, ch_q) -> ExponentReport:
    a, b = one_hop_rate(ch_p), one_hop_rate(ch_q)
    worst = a if a.mu_star >= b.mu_star else b
    return ExponentReport("trivial-converse", worst.s_star, worst.mu_star, worst.rate, worst.endpoint)


def check_assumption1(ch, grid_step: float = 1e-3):
    """Grid check of mu(s) <= mu(1 - s) on [0, 1/2].

    Returns ``(passed, worst)`` where ``worst`` is the largest value of
    mu(s) - mu(1 - s) seen on the grid.
    """
    if not 0.0 < grid_step <= 0.1:
        raise DomainError(f"grid_step must lie in (0, 0.1], got {grid_step!r}")
    fam = _family(ch)
    grid = np.append(np.arange(0.0, 0.5, grid_step), 0.5)
    worst = max(fam.mu(s) - fam.mu(1.0 - s) for s in grid)
    return worst <= 1e-12, float(worst)


def _oriented(fam: TiltedFamily, beta: int):
    # beta = 1: codeword pair uses (0 -> 1) on every symbol, giving mu(s);
    # beta = 0 swaps the roles, giving mu(1 - s).
    return fam.mu if beta == 1 else fam.mu_flipped


def e1(ch_p, ch_q, gamma: float) -> ExponentReport:
    """Two-round exponent without feedback, gamma n uses of P then (1-gamma) n of Q.

    For fixed s the objective is linear in each codeword-orientation fraction,
    so the inner minimum over s is concave in them and the exponent (its
    negation) is maximised at a vertex; only the four vertex orientations are
    searched.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma!r}")
    fp, fq = _family(ch_p), _family(ch_q)
    best = None
    for bp in (1, 0):
        for bq in (1, 0):
            mp, mq = _oriented(fp, bp), _oriented(fq, bq)
            s, v = _minimize(lambda t: gamma * mp(t) + (1.0 - gamma) * mq(t))
            if best is None or v < best[1]:
                best = (s, v)
    return _report("e1-converse", best[0], best[1])


def gamma_balanced(ch_p, ch_q):
    """A mixing weight gamma with gamma mu_P(s) + (1 - gamma) mu_Q(s) >= mu* for all s.

    Follows the case analysis of the minimax argument: if the larger of the
    two curves at the joint minimiser s* sits at its own global minimum, gamma
    is 0 or 1 (case 1); otherwise both curves cross at s* with opposite-sign
    slopes and gamma balances the slopes (case 3b).

    Returns ``(gamma, case)`` with case one of ``"1"`` or ``"3b"``.
    """
    fp, fq = _family(ch_p), _family(ch_q)
    rep = two_hop_rate(fp, fq)
    s = rep.s_star
    vp, vq = fp.mu(s), fq.mu(s)
    dp, dq = fp.mu_prime(s), fq.mu_prime(s)
    eq_tol = 1e-7

    def at_global_min(fam, deriv):
        if s <= ENDPOINT_TOL:
            return deriv >= -ENDPOINT_TOL
        if s >= 1.0 - ENDPOINT_TOL:
            return deriv <= ENDPOINT_TOL
        if abs(deriv) <= ENDPOINT_TOL:
            return True
        # golden section only pins a smooth minimum to ~sqrt(eps) in s, so also
        # accept s* within that distance of this curve's own stationary point
        curv = fam.mu_double_prime(s)
        return curv > 0 and abs(deriv / curv) <= STATIONARY_TOL

    if vp >= vq - eq_tol and at_global_min(fp, dp):
        return 1.0, "1"
    if vq >= vp - eq_tol and at_global_min(fq, dq):
        return 0.0, "1"
    if abs(vp - vq) <= eq_tol and dp * dq <= 0.0 and dq != dp:
        gamma = dq / (dq - dp)
        return float(min(max(gamma, 0.0), 1.0)), "3b"
    raise ConsistencyError(
        "no case of the gamma construction applies",
        {"s_star": s, "mu_p": vp, "mu_q": vq, "dmu_p": dp, "dmu_q": dq},
    )


def feedback_exponent_bsc_rz(p: float, q: float, gamma: float) -> float:
    """Exponent of the one-feedback-round scheme with BSC(p) then reverse-Z(q)."""
    if not 0.0 < p < 0.5:
        raise DomainError(f"p must lie in (0, 1/2), got {p!r}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma!r}")
    return gamma * binary_kl(0.5, p) + (1.0 - gamma) * math.log(1.0 / q)


def block_converse(ch_p, ch_q, grid_step: float = 1e-3) -> Optional[ExponentReport]:
    """Rate bound for block-structured teachers, searched over s in [0, 1/2].

    Returns None unless both channels satisfy mu(s) <= mu(1-s) on [0, 1/2].
    """
    fp, fq = _family(ch_p), _family(ch_q)
    if not (check_assumption1(fp, grid_step)[0] and check_assumption1(fq, grid_step)[0]):
        return None
    s, v = _minimize(lambda t: max(fp.mu(t), fq.mu(t)), 0.0, 0.5)
    return _report("block-converse", s, v, 0.0, 0.5)


def sgb_lower_bound(ch, n: int) -> float:
    """Lower bound (1/8) exp(n mu(s*) - sqrt(2 n mu''(s*))) on the 1-hop error probability."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    fam = _family(ch)
    rep = one_hop_rate(fam)
    curv = fam.mu_double_prime(rep.s_star)
    return 0.125 * math.exp(n * rep.mu_star - math.sqrt(2.0 * n * curv))


def assumption1_orientation(ch: Dmc) -> Dmc:
    """``ch`` if it satisfies mu(s) <= mu(1-s) on [0, 1/2], else its input-swapped version."""
    if check_assumption1(ch)[0]:
        return ch
    return swap_inputs(ch)
