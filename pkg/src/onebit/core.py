"""Shared domain types: problem parameters, tail classes, 1-bit queries,
transcripts, and the seeded-substream randomness contract."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

import numpy as np


class ParamError(ValueError):
    """Raised when problem parameters violate their invariants."""


# ---------------------------------------------------------------------------
# Problem parameters and tail classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemParams:
    lam: float
    sigma: float
    eps: float
    delta: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "sigma": self.sigma, "eps": self.eps, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemParams":
        return cls(lam=float(d["lambda"]), sigma=float(d["sigma"]),
                   eps=float(d["eps"]), delta=float(d["delta"]))


def validate_params(p: ProblemParams) -> ProblemParams:
    """Check invariants and round lambda up onto the sigma grid.

    The localization grid {-lambda, -lambda + sigma, ..., lambda} needs lambda
    to be an integer multiple of sigma; rounding up keeps |mean| <= lambda true.
    """
    if not (p.sigma > 0 and math.isfinite(p.sigma)):
        raise ParamError(f"sigma must be positive and finite, got {p.sigma}")
    if not math.isfinite(p.lam) or p.lam < p.sigma:
        raise ParamError(f"lambda < sigma (lambda={p.lam}, sigma={p.sigma})")
    if not (p.eps > 0 and math.isfinite(p.eps)):
        raise ParamError(f"eps must be positive, got {p.eps}")
    if not (0 < p.delta < 1):
        raise ParamError(f"delta must lie in (0, 1), got {p.delta}")
    ratio = p.lam / p.sigma
    # tolerate float noise such as 10.000000000000002
    k = math.ceil(ratio - 1e-9)
    lam = k * p.sigma
    if lam == p.lam:
        return p
    return replace(p, lam=lam)


@dataclass(frozen=True)
class Variance:
    """Only a variance bound sigma^2 is known."""

    name = "variance"

    def to_dict(self) -> dict:
        return {"kind": "variance"}


@dataclass(frozen=True)
class Moment:
    """k-th central absolute moment bounded by sigma^k, k > 2."""

    k: float
    name = "moment"

    def __post_init__(self):
        if not self.k > 2:
            raise ParamError(f"Moment tail class requires k > 2, got {self.k}")

    def to_dict(self) -> dict:
        return {"kind": "moment", "k": self.k}


@dataclass(frozen=True)
class SubGaussian:
    """X - mu sub-Gaussian with parameter sigma^2."""

    name = "subgaussian"

    def to_dict(self) -> dict:
        return {"kind": "subgaussian"}


TailClass = Union[Variance, Moment, SubGaussian]


def tail_from_dict(d: Optional[dict]) -> TailClass:
    if d is None:
        return Variance()
    kind = d.get("kind", "variance")
    if kind == "variance":
        return Variance()
    if kind == "moment":
        return Moment(float(d["k"]))
    if kind in ("subgaussian", "subgauss"):
        return SubGaussian()
    raise ParamError(f"unknown tail class {kind!r}")


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalQuery:
    """``1{x in <lo, hi>}``; endpoints may be infinite.

    Both finite endpoints are closed by default. The refinement stage opens
    one side so that queries agree with half-open region membership.
    """

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ParamError(f"invalid interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class GrayQuery:
    """k-th Gray function of the sample rescaled from [-lam, lam] to [0, 1]."""

    level: int
    lam: float

    def __post_init__(self):
        if int(self.level) != self.level or self.level < 1:
            raise ParamError(f"Gray level must be a positive integer, got {self.level}")
        if not self.lam > 0:
            raise ParamError(f"Gray query needs lam > 0, got {self.lam}")


Query = Union[IntervalQuery, GrayQuery]


def interval_bits(x, lo, hi, lo_closed: bool = True, hi_closed: bool = True) -> np.ndarray:
    """Vectorised membership test; ``lo``/``hi`` broadcast against ``x``."""
    x = np.asarray(x, dtype=float)
    left = (x >= lo) if lo_closed else (x > lo)
    right = (x <= hi) if hi_closed else (x < hi)
    return (left & right).astype(np.uint8)


def gray_function(xp, k: int) -> np.ndarray:
    """g_k on [0, 1]: 1 iff floor(2^k x) mod 4 is 1 or 2. Inputs are clamped."""
    xp = np.clip(np.asarray(xp, dtype=float), 0.0, 1.0)
    cell = np.floor(np.ldexp(xp, k)).astype(np.int64)
    r = cell % 4
    return ((r == 1) | (r == 2)).astype(np.uint8)


def gray_bits(x, level: int, lam: float) -> np.ndarray:
    return gray_function((np.asarray(x, dtype=float) + lam) / (2.0 * lam), level)


def query_eval(q: Query, x: float) -> int:
    if isinstance(q, IntervalQuery):
        return int(interval_bits(x, q.lo, q.hi, q.lo_closed, q.hi_closed))
    if isinstance(q, GrayQuery):
        return int(gray_bits(x, q.level, q.lam))
    raise TypeError(f"not a query: {q!r}")


# ---------------------------------------------------------------------------
# Transcript
# ---------------------------------------------------------------------------


@dataclass
class TranscriptChunk:
    """One batch of answers sharing a query family.

    ``kind`` is "interval" or "gray". For interval chunks ``lo``/``hi`` are
    scalars or arrays of per-query endpoints. ``bits`` is None for aggregate
    batches, where only the count of ones is known.
    """

    stage: str
    kind: str
    size: int
    ones: int
    lo: object = None
    hi: object = None
    lo_closed: bool = True
    hi_closed: bool = True
    level: Optional[int] = None
    lam: Optional[float] = None
    bits: Optional[np.ndarray] = None
    randomized: bool = False


@dataclass
class Transcript:
    """Append-only record of the interaction.

    With ``record=False`` only the per-stage counters are kept, which is what
    long Monte Carlo runs use (tens of millions of answers per trial).
    """

    record: bool = False
    chunks: list = field(default_factory=list)
    stage_counts: dict = field(default_factory=dict)
    kind_counts: dict = field(default_factory=dict)
    _length: int = 0

    def append(self, chunk: TranscriptChunk) -> None:
        self._length += chunk.size
        self.stage_counts[chunk.stage] = self.stage_counts.get(chunk.stage, 0) + chunk.size
        key = (chunk.stage, chunk.kind)
        self.kind_counts[key] = self.kind_counts.get(key, 0) + chunk.size
        if self.record:
            self.chunks.append(chunk)

    def __len__(self) -> int:
        return self._length

    def entries(self) -> Iterator[tuple]:
        """Yield ``(query, bit)`` pairs for every individually recorded answer."""
        if not self.record:
            raise RuntimeError("transcript was created with record=False")
        for c in self.chunks:
            if c.bits is None:
                raise RuntimeError("aggregate chunks carry counts, not individual bits")
            n = c.size
            if c.kind == "gray":
                q = GrayQuery(c.level, c.lam)
                for b in c.bits:
                    yield q, int(b)
                continue
            lo = np.broadcast_to(np.asarray(c.lo, dtype=float), (n,))
            hi = np.broadcast_to(np.asarray(c.hi, dtype=float), (n,))
            for j in range(n):
                yield IntervalQuery(float(lo[j]), float(hi[j]), c.lo_closed, c.hi_closed), int(c.bits[j])

    def summary(self) -> dict:
        return {
            "length": self._length,
            "stages": dict(self.stage_counts),
            "kinds": {f"{s}:{k}": v for (s, k), v in self.kind_counts.items()},
        }


# ---------------------------------------------------------------------------
# Randomness contract
# ---------------------------------------------------------------------------


def _label_words(label) -> list:
    if isinstance(label, (tuple, list)):
        label = "/".join(str(x) for x in label)
    digest = hashlib.blake2b(str(label).encode(), digest_size=16).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_seed(master_seed: int, label) -> int:
    """Stable 64-bit child seed for ``(master_seed, label)``."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1)] + _label_words(label))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def substream(master_seed: int, label) -> np.random.Generator:
    """Independent generator for a labelled stage, e.g. ``("refine", 3, "a")``."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1)] + _label_words(label))
    return np.random.Generator(np.random.PCG64(ss))
