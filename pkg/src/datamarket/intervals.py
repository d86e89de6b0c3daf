"""Finite unions of closed subintervals of the unit interval."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12


def _normalize(pairs: Iterable[Sequence[float]], tol: float) -> tuple[tuple[float, float], ...]:
    cleaned = []
    for pair in pairs:
        lo, hi = float(pair[0]), float(pair[1])
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got ({lo}, {hi})")
        if lo > hi + tol:
            raise ValueError(f"interval has lo > hi: ({lo}, {hi})")
        if lo < -tol or hi > 1.0 + tol:
            raise ValueError(f"interval ({lo}, {hi}) leaves [0, 1]")
        lo = 0.0 if lo <= tol else min(lo, 1.0)
        hi = 1.0 if hi >= 1.0 - tol else max(hi, 0.0)
        if hi - lo <= tol:
            # measure zero, cannot affect any integral
            continue
        cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[list[float]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, disjoint, non-adjacent closed intervals inside [0, 1].

    Degenerate intervals are dropped and touching intervals merged on
    construction, so two sets that differ only on a null set compare equal
    after normalization.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals, MERGE_TOL))

    @classmethod
    def of(cls, *pairs: Sequence[float]) -> "IntervalSet":
        return cls(tuple(tuple(p) for p in pairs))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls(((0.0, 1.0),))

    @classmethod
    def parse(cls, text: str) -> "IntervalSet":
        """Parse ``"lo,hi;lo,hi"``; an empty string is the empty set."""
        text = text.strip()
        if not text:
            return cls.empty()
        pairs = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ValueError(f"expected 'lo,hi' but got {chunk!r}")
            pairs.append((float(parts[0]), float(parts[1])))
        return cls(tuple(pairs))

    def format(self) -> str:
        return ";".join(f"{lo!r},{hi!r}" for lo, hi in self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    @property
    def endpoints(self) -> list[float]:
        return [x for pair in self.intervals for x in pair]

    def contains(self, x):
        """Membership test, vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out if out.ndim else bool(out)

    def complement(self) -> "IntervalSet":
        pairs = []
        cursor = 0.0
        for lo, hi in self.intervals:
            if lo > cursor:
                pairs.append((cursor, lo))
            cursor = hi
        if cursor < 1.0:
            pairs.append((cursor, 1.0))
        return IntervalSet(tuple(pairs))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        pairs = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                pairs.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(pairs))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement())

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self.intersection(IntervalSet(((lo, hi),)))

    def issubset(self, other: "IntervalSet", tol: float = 1e-9) -> bool:
        """Inclusion up to a set of measure at most ``tol``."""
        return self.difference(other).measure <= tol

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def __repr__(self):
        if not self.intervals:
            return "IntervalSet(∅)"
        body = " ∪ ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self.intervals)
        return f"IntervalSet({body})"
