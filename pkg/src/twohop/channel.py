"""Binary-input discrete memoryless channels.

A channel is stored as two probability rows over a finite output alphabet,
``row0 = P(.|0)`` and ``row1 = P(.|1)``.  Output symbols are integer indices,
so for binary-output channels the index equals the bit value.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

ROW_TOL = 1e-12


def _clean_row(row: Sequence[float], name: str) -> tuple[float, ...]:
    arr = np.asarray(row, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    if np.any(arr < -ROW_TOL) or np.any(arr > 1 + ROW_TOL):
        raise DomainError(f"{name} has entries outside [0, 1]: {arr.tolist()}")
    total = arr.sum()
    if abs(total - 1.0) > ROW_TOL:
        raise DomainError(f"{name} sums to {total!r}, not 1")
    # rows are kept as given (no rescaling) so descriptors round-trip exactly
    return tuple(float(x) for x in np.clip(arr, 0.0, 1.0))


@dataclass(frozen=True)
class Dmc:
    """Binary-input DMC with transition rows ``row0`` and ``row1``."""

    row0: tuple[float, ...]
    row1: tuple[float, ...]

    def __post_init__(self):
        r0 = _clean_row(self.row0, "row0")
        r1 = _clean_row(self.row1, "row1")
        if len(r0) != len(r1):
            raise DomainError("row0 and row1 have different lengths")
        if len(r0) < 2:
            raise DomainError("output alphabet must have at least 2 symbols")
        if all(abs(a - b) <= ROW_TOL for a, b in zip(r0, r1)):
            raise DomainError("rows are identical; the channel carries no information")
        object.__setattr__(self, "row0", r0)
        object.__setattr__(self, "row1", r1)

    @property
    def alphabet_size(self) -> int:
        return len(self.row0)

    def row(self, bit: int) -> tuple[float, ...]:
        if bit == 0:
            return self.row0
        if bit == 1:
            return self.row1
        raise DomainError(f"channel input must be 0 or 1, got {bit!r}")

    def matrix(self) -> np.ndarray:
        """2 x |Y| transition matrix."""
        return np.array([self.row0, self.row1])

    def to_descriptor(self) -> dict:
        return {"kind": "general", "row0": list(self.row0), "row1": list(self.row1)}


def make_bsc(p: float) -> Dmc:
    if not 0.0 < p < 0.5:
        raise DomainError(f"BSC crossover must lie in (0, 1/2), got {p!r}")
    return Dmc((1.0 - p, p), (p, 1.0 - p))


def make_reverse_z(q: float) -> Dmc:
    """Input 1 is received noiselessly; input 0 leaks to output 1 w.p. ``q``."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"reverse Z parameter must lie in (0, 1), got {q!r}")
    return Dmc((1.0 - q, q), (0.0, 1.0))


def swap_inputs(ch: Dmc) -> Dmc:
    return Dmc(ch.row1, ch.row0)


def compose(first: Dmc, second: Dmc) -> Dmc:
    """Cascade: the binary output of ``first`` drives the input of ``second``."""
    if first.alphabet_size != 2:
        raise DomainError("compose needs a binary-output first channel")
    m = first.matrix() @ second.matrix()
    return Dmc(tuple(m[0]), tuple(m[1]))


def bsc_crossover(ch: Dmc) -> float | None:
    """Crossover probability if ``ch`` is a BSC, else None."""
    if ch.alphabet_size != 2:
        return None
    p = ch.row0[1]
    if abs(ch.row0[0] - ch.row1[1]) <= ROW_TOL and abs(ch.row0[1] - ch.row1[0]) <= ROW_TOL and p < 0.5:
        return p
    return None


def sample(ch: Dmc, bit: int, rng: np.random.Generator, size=None):
    """Draw output symbol(s) for a fixed input ``bit``.

    Uses a single uniform per symbol and an inverse-CDF lookup, so the same
    generator state always gives the same outputs.
    """
    cdf = np.cumsum(ch.row(bit))
    cdf[-1] = 1.0
    u = rng.random(size)
    out = np.searchsorted(cdf, u, side="right")
    if size is None:
        return int(out)
    return out


def transmit(ch: Dmc, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pass an integer array of input bits through ``ch`` elementwise."""
    bits = np.asarray(bits)
    u = rng.random(bits.shape)
    if ch.alphabet_size == 2:
        # same inverse-CDF convention as sample(): symbol 0 iff u < P(0|x)
        p0 = np.where(bits == 1, ch.row1[0], ch.row0[0])
        return (u >= p0).astype(np.int8)
    cdf = np.cumsum(ch.matrix(), axis=1)
    cdf[:, -1] = 1.0
    out = np.zeros(bits.shape, dtype=np.int16)
    for y in range(ch.alphabet_size - 1):
        out += u >= np.where(bits == 1, cdf[1, y], cdf[0, y])
    return out


def from_descriptor(desc: dict) -> Dmc:
    """Build a channel from its JSON descriptor."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise DomainError(f"channel descriptor must be an object with 'kind': {desc!r}")
    kind = desc["kind"]
    allowed = {"bsc": {"kind", "p"}, "reverse_z": {"kind", "q"}, "general": {"kind", "row0", "row1"}}
    if kind not in allowed:
        raise DomainError(f"unknown channel kind {kind!r}")
    extra = set(desc) - allowed[kind]
    missing = allowed[kind] - set(desc)
    if extra or missing:
        raise DomainError(f"bad fields for {kind} channel: extra={sorted(extra)} missing={sorted(missing)}")
    if kind == "bsc":
        return make_bsc(float(desc["p"]))
    if kind == "reverse_z":
        return make_reverse_z(float(desc["q"]))
    return Dmc(tuple(desc["row0"]), tuple(desc["row1"]))


def to_descriptor(ch: Dmc) -> dict:
    p = bsc_crossover(ch)
    if p is not None:
        return {"kind": "bsc", "p": p}
    if ch.alphabet_size == 2 and ch.row1 == (0.0, 1.0) and 0 < ch.row0[1] < 1:
        return {"kind": "reverse_z", "q": ch.row0[1]}
    return ch.to_descriptor()
