"""The memoryless agent: one fresh i.i.d. sample per query, one bit back.

Two simulation modes are supported:

``exact``
    every answer draws its own sample and evaluates the query on it.

``aggregate``
    for a batch of i.i.d. queries only the number of ones is drawn, from the
    binomial law implied by the agent's distribution. The learner sees the
    same statistic (the count) with the same law, at O(1) cost per batch.
    Long Monte Carlo sweeps use this mode; the exact mode stays the reference.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from .core import (GrayQuery, IntervalQuery, Query, Transcript, TranscriptChunk,
                   gray_bits, interval_bits)
from .distributions import DistributionSpec, exact_region_quantities

_CHUNK = 1 << 20


class BudgetExhausted(RuntimeError):
    """The agent's sampling budget cannot cover the requested answers."""


class Agent:
    def __init__(self, spec: DistributionSpec, rng: np.random.Generator,
                 budget: Optional[int] = None, mode: str = "exact", record: bool = False):
        if mode not in ("exact", "aggregate"):
            raise ValueError(f"mode must be 'exact' or 'aggregate', got {mode!r}")
        if budget is not None and budget < 0:
            raise ValueError("budget must be non-negative")
        self.spec = spec
        self.rng = rng
        self.budget = budget
        self.mode = mode
        self.samples_used = 0
        self.transcript = Transcript(record=record)
        self._stage = "default"

    @property
    def remaining(self) -> Optional[int]:
        return None if self.budget is None else self.budget - self.samples_used

    @contextmanager
    def stage(self, name: str):
        prev, self._stage = self._stage, name
        try:
            yield self
        finally:
            self._stage = prev

    def _reserve(self, n: int) -> None:
        if self.budget is not None and self.samples_used + n > self.budget:
            raise BudgetExhausted(
                f"need {n} samples, {self.budget - self.samples_used} of {self.budget} left")

    def _commit(self, chunk: TranscriptChunk) -> None:
        self.samples_used += chunk.size
        self.transcript.append(chunk)

    # -- single and list-of-query interface ---------------------------------

    def answer(self, q: Query) -> int:
        return self.answer_batch([q])[0]

    def answer_batch(self, queries: Sequence[Query]) -> list:
        """Answer queries in order; all-or-nothing against the budget."""
        n = len(queries)
        if n == 0:
            return []
        self._reserve(n)
        x = self.spec.sample(self.rng, n)
        out = np.empty(n, dtype=np.uint8)
        for j, q in enumerate(queries):
            if isinstance(q, IntervalQuery):
                out[j] = interval_bits(x[j], q.lo, q.hi, q.lo_closed, q.hi_closed)
            elif isinstance(q, GrayQuery):
                out[j] = gray_bits(x[j], q.level, q.lam)
            else:
                raise TypeError(f"not a query: {q!r}")
        # one chunk per query keeps the recorded transcript exact for mixed lists
        for j, q in enumerate(queries):
            if isinstance(q, IntervalQuery):
                chunk = TranscriptChunk(self._stage, "interval", 1, int(out[j]), q.lo, q.hi,
                                        q.lo_closed, q.hi_closed, bits=out[j:j + 1])
            else:
                chunk = TranscriptChunk(self._stage, "gray", 1, int(out[j]), level=q.level,
                                        lam=q.lam, bits=out[j:j + 1])
            self._commit(chunk)
        return [int(b) for b in out]

    # -- vectorised interfaces used by the estimators ------------------------

    def answer_intervals(self, lo, hi, lo_closed: bool = True, hi_closed: bool = True) -> np.ndarray:
        """Answer one interval query per element of the broadcast ``lo``/``hi``."""
        lo_a, hi_a = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        n = lo_a.size
        self._reserve(n)
        x = self.spec.sample(self.rng, n)
        bits = interval_bits(x, lo_a.ravel(), hi_a.ravel(), lo_closed, hi_closed)
        rec = self.transcript.record
        self._commit(TranscriptChunk(self._stage, "interval", n, int(bits.sum()),
                                     lo_a.ravel().copy() if rec else None,
                                     hi_a.ravel().copy() if rec else None,
                                     lo_closed, hi_closed, bits=bits if rec else None))
        return bits

    def count_repeated(self, q: Query, n: int) -> int:
        """Ask the same query ``n`` times; return the number of ones."""
        n = int(n)
        self._reserve(n)
        if self.mode == "aggregate":
            if isinstance(q, IntervalQuery):
                p = float(self.spec.prob_interval(q.lo, q.hi, q.lo_closed, q.hi_closed))
            else:
                p = self.spec.gray_prob(q.level, q.lam)
            ones = int(self.rng.binomial(n, p))
            bits = None
        else:
            ones, parts, left = 0, [], n
            while left > 0:
                m = min(left, _CHUNK)
                x = self.spec.sample(self.rng, m)
                if isinstance(q, IntervalQuery):
                    b = interval_bits(x, q.lo, q.hi, q.lo_closed, q.hi_closed)
                else:
                    b = gray_bits(x, q.level, q.lam)
                ones += int(b.sum())
                if self.transcript.record:
                    parts.append(b)
                left -= m
            bits = np.concatenate(parts) if parts else (np.empty(0, np.uint8) if self.transcript.record else None)
        if isinstance(q, IntervalQuery):
            chunk = TranscriptChunk(self._stage, "interval", n, ones, q.lo, q.hi,
                                    q.lo_closed, q.hi_closed, bits=bits)
        else:
            chunk = TranscriptChunk(self._stage, "gray", n, ones, level=q.level, lam=q.lam, bits=bits)
        self._commit(chunk)
        return ones

    def count_randomized(self, a: float, b: float, side: str, n: int,
                         learner_rng: np.random.Generator,
                         left_closed: bool = True, right_closed: bool = False) -> int:
        """Answer ``n`` randomized queries on region ``<a, b>`` and count the ones.

        ``side="a"`` asks ``1{X in <a, T]}`` and ``side="b"`` asks
        ``1{X in [T, b>}`` with a fresh ``T ~ Unif(a, b)`` per query, drawn
        from ``learner_rng``. In aggregate mode ``T`` is marginalised out.
        """
        if side not in ("a", "b"):
            raise ValueError("side must be 'a' or 'b'")
        n = int(n)
        self._reserve(n)
        rec = self.transcript.record
        if self.mode == "aggregate":
            p_a, p_b, _ = exact_region_quantities(self.spec, a, b, left_closed, right_closed)
            ones = int(self.rng.binomial(n, p_a if side == "a" else p_b))
            self._commit(TranscriptChunk(self._stage, "interval", n, ones,
                                         a if side == "a" else None, None if side == "a" else b,
                                         left_closed if side == "a" else True,
                                         True if side == "a" else right_closed,
                                         bits=None, randomized=True))
            return ones
        ones, left = 0, n
        while left > 0:
            m = min(left, _CHUNK)
            t = learner_rng.uniform(a, b, m)
            x = self.spec.sample(self.rng, m)
            if side == "a":
                bits = interval_bits(x, a, t, left_closed, True)
                lo, hi = a, t
            else:
                bits = interval_bits(x, t, b, True, right_closed)
                lo, hi = t, b
            c = int(np.count_nonzero(bits))
            ones += c
            self._commit(TranscriptChunk(
                self._stage, "interval", m, c,
                lo if rec else None, hi if rec else None,
                left_closed if side == "a" else True, True if side == "a" else right_closed,
                bits=bits if rec else None, randomized=True))
            left -= m
        return ones
