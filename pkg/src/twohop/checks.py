"""Numerical checks of the inequalities the protocols rely on.

Each check returns a :class:`CheckResult` whose ``slack`` is the smallest
observed value of (right side - left side) for an inequality that should
hold; a check passes when ``slack >= -tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Dmc
from .exponent import TiltedFamily, rho_s
from .protocol import build_llr_distribution, f_fraction
from .exponent import binary_kl


@dataclass(frozen=True)
class CheckResult:
    name: str
    slack: float
    tol: float
    cases: int

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst slack {self.slack:.3e} over {self.cases} cases (tol {self.tol:g})"


def random_channel(rng: np.random.Generator, outputs: int = 2, floor: float = 0.0) -> Dmc:
    """Random full-support channel (each entry at least ``floor`` before renormalising)."""
    while True:
        r0 = rng.dirichlet(np.ones(outputs)) + floor
        r1 = rng.dirichlet(np.ones(outputs)) + floor
        r0, r1 = r0 / r0.sum(), r1 / r1.sum()
        if np.max(np.abs(r0 - r1)) > 1e-3:
            return Dmc(tuple(r0), tuple(r1))


def f_symmetry(ps=(0.05, 0.1, 0.2, 0.3, 0.4, 0.45), step=1e-3) -> CheckResult:
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = math.inf
    for p in ps:
        for a in grid:
            worst = min(worst, -abs(f_fraction(a, p) + f_fraction(1 - a, p) - 1.0))
    return CheckResult("f(a) + f(1-a) = 1", worst, 1e-12, len(ps) * grid.size)


def f_monotone(ps=(0.05, 0.1, 0.2, 0.3, 0.4, 0.45), step=1e-3) -> CheckResult:
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = math.inf
    for p in ps:
        vals = np.array([f_fraction(a, p) for a in grid])
        worst = min(worst, float(np.min(np.diff(vals))))
    return CheckResult("f non-decreasing", worst, 0.0, len(ps) * grid.size)


def f_upper_bound(ps=(0.05, 0.1, 0.2, 0.3, 0.4, 0.45), step=1e-3) -> CheckResult:
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = math.inf
    for p in ps:
        scale = 2.0 * binary_kl(0.5, p)
        for a in grid:
            worst = min(worst, binary_kl(a, p) / scale - f_fraction(a, p))
    return CheckResult("f(a) <= D(a||p) / 2D(1/2||p)", worst, 1e-12, len(ps) * grid.size)


def mu_convexity(channels, step=1e-3) -> CheckResult:
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = math.inf
    for ch in channels:
        fam = TiltedFamily(ch)
        vals = np.array([fam.mu(s) for s in grid])
        worst = min(worst, float(np.min(vals[:-2] - 2 * vals[1:-1] + vals[2:])))
    return CheckResult("mu convex (second differences)", worst, 1e-9, len(channels))


def mu_nonpositive(channels, step=1e-2) -> CheckResult:
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    worst = math.inf
    for ch in channels:
        fam = TiltedFamily(ch)
        worst = min(worst, min(-fam.mu(s) for s in grid))
        if np.all(fam.common):
            worst = min(worst, -abs(fam.mu(0.0)), -abs(fam.mu(1.0)))
    return CheckResult("mu <= 0, mu(0) = mu(1) = 0 on full support", worst, 1e-12, len(channels))


def mu_derivatives(channels, h=1e-4) -> CheckResult:
    worst = math.inf
    for ch in channels:
        fam = TiltedFamily(ch)
        for s in np.arange(0.1, 0.95, 0.1):
            d1 = (fam.mu(s + h) - fam.mu(s - h)) / (2 * h)
            d2 = (fam.mu(s + h) - 2 * fam.mu(s) + fam.mu(s - h)) / (h * h)
            worst = min(worst, -abs(d1 - fam.mu_prime(s)), -abs(d2 - fam.mu_double_prime(s)))
    return CheckResult("mu', mu'' match finite differences", worst, 1e-6, len(channels))


def rho_tensorization(channels, ss=(0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0)) -> CheckResult:
    worst = math.inf
    for ch in channels:
        a, b = np.asarray(ch.row0), np.asarray(ch.row1)
        a2, b2 = np.outer(a, a).ravel(), np.outer(b, b).ravel()
        for s in ss:
            worst = min(worst, -abs(rho_s(a2, b2, s) - rho_s(a, b, s) ** 2))
    return CheckResult("rho of product = rho^2", worst, 1e-12, len(channels) * len(ss))


def _random_mixture(rng, outputs, parts):
    weights = rng.dirichlet(np.ones(parts))
    comps = rng.dirichlet(np.ones(outputs), size=parts)
    return weights, comps, weights @ comps


def mixture_upper(rng, trials=200, outputs=4, parts=3) -> CheckResult:
    """rho(A, B, s) <= sum_i p_i^(1-s) rho(A_i, B, s) and the mirror with p_i^s."""
    worst = math.inf
    for _ in range(trials):
        w, comps, mix = _random_mixture(rng, outputs, parts)
        b = rng.dirichlet(np.ones(outputs))
        s = rng.uniform()
        rhs = sum(wi ** (1 - s) * rho_s(ci, b, s) for wi, ci in zip(w, comps))
        worst = min(worst, rhs - rho_s(mix, b, s))
        rhs2 = sum(wi ** s * rho_s(b, ci, s) for wi, ci in zip(w, comps))
        worst = min(worst, rhs2 - rho_s(b, mix, s))
    return CheckResult("mixture upper bound", worst, 1e-12, trials)


def mixture_lower(rng, trials=200, outputs=4, parts=3) -> CheckResult:
    """rho(A, B, s) >= min_i rho(A_i, B, s) for a mixture A."""
    worst = math.inf
    for _ in range(trials):
        w, comps, mix = _random_mixture(rng, outputs, parts)
        b = rng.dirichlet(np.ones(outputs))
        s = rng.uniform()
        worst = min(worst, rho_s(mix, b, s) - min(rho_s(ci, b, s) for ci in comps))
    return CheckResult("mixture lower bound", worst, 1e-12, trials)


def threshold_sandwich(channels, ks=(4, 8, 16), s_bars=None) -> CheckResult:
    """((1-s)/mu_max) ln P(L0 >= l) >= k - (s/mu_max) ln P(L1 <= l) at every support point.

    Uses mu_max = mu_P(s_bar), the most demanding admissible value.
    """
    if s_bars is None:
        s_bars = np.round(np.arange(0.1, 0.95, 0.1), 10)
    worst = math.inf
    cases = 0
    for ch in channels:
        fam = TiltedFamily(ch)
        for k in ks:
            dist = build_llr_distribution(ch, k)
            for sb in s_bars:
                mmax = fam.mu(sb)
                if not mmax < 0:
                    continue
                lhs = (1 - sb) / mmax * dist.log_tail0_geq
                rhs = k - sb / mmax * dist.log_tail1_leq
                worst = min(worst, float(np.min(lhs - rhs)))
                cases += dist.support.size
    return CheckResult("block LLR tail sandwich", worst, 1e-9, cases)


def chernoff_tails(channels, ks=(1, 4, 8, 16), ss=None) -> CheckResult:
    """Chernoff tails of the k-fold LLR at the tilted mean k mu'(s)."""
    if ss is None:
        ss = np.round(np.arange(0.05, 1.0, 0.05), 10)
    worst = math.inf
    cases = 0
    for ch in channels:
        fam = TiltedFamily(ch)
        for k in ks:
            dist = build_llr_distribution(ch, k)
            sup = dist.support
            for s in ss:
                m, d = fam.mu(s), fam.mu_prime(s)
                thr = k * d
                # include support points within rounding of the threshold on the costly side
                eps = 1e-12 * max(1.0, abs(thr))
                geq = sup >= thr - eps
                leq = sup <= thr + eps
                p0 = float(np.exp(dist.log_pmf0[geq]).sum()) if geq.any() else 0.0
                p1 = float(np.exp(dist.log_pmf1[leq]).sum()) if leq.any() else 0.0
                worst = min(worst, math.exp(k * (m - s * d)) - p0, math.exp(k * (m + (1 - s) * d)) - p1)
                cases += 2
    return CheckResult("LLR Chernoff tails", worst, 1e-12, cases)


def standard_suite(seed: int = 0, n_channels: int = 50):
    """The full battery used by ``verify`` and the acceptance tests."""
    rng = np.random.default_rng(seed)
    chans = [random_channel(rng, outputs=int(rng.integers(2, 5)), floor=0.02) for _ in range(n_channels)]
    return [
        f_symmetry(),
        f_monotone(),
        f_upper_bound(),
        mu_convexity(chans),
        mu_nonpositive(chans),
        mu_derivatives(chans),
        rho_tensorization(chans),
        mixture_upper(rng),
        mixture_lower(rng),
        threshold_sandwich(chans),
        chernoff_tails(chans),
    ]
