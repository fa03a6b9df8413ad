"""Multi-indices, their weights, and finite truncations of the index set.

A multi-index is a finitely supported sequence of non-negative integers.
Modes are numbered from 1, so ``MultiIndex((2, 0, 1))`` is
``2*eps_1 + eps_3``.  Instances are immutable and stored in canonical form
(trailing zeros trimmed), so equality and hashing are structural.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "MultiIndex",
    "Truncation",
    "length",
    "factorial",
    "log_weight",
    "weight",
    "add",
    "sub",
    "index_of",
    "enumerate_truncation",
    "decompositions",
    "weight_sum",
    "full_weight_sum",
]


class MultiIndex:
    """Canonical finitely supported sequence of non-negative integers.

    ``<=`` and ``<`` are the componentwise partial order (like ``set``);
    use :meth:`sort_key` to obtain the level-then-lex total order.
    """

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: Iterable[int] = ()):
        vals = [int(a) for a in entries]
        if any(a < 0 for a in vals):
            raise ValueError(f"multi-index entries must be non-negative, got {vals}")
        while vals and vals[-1] == 0:
            vals.pop()
        self._entries = tuple(vals)
        self._hash = hash(self._entries)

    @classmethod
    def zero(cls) -> MultiIndex:
        return cls(())

    @classmethod
    def unit(cls, k: int, n: int = 1) -> MultiIndex:
        """``n * eps_k`` (modes are 1-based)."""
        if k < 1:
            raise ValueError("modes are numbered from 1")
        return cls((0,) * (k - 1) + (n,))

    @classmethod
    def from_modes(cls, modes: dict[int, int]) -> MultiIndex:
        if not modes:
            return cls.zero()
        top = max(modes)
        return cls(modes.get(k, 0) for k in range(1, top + 1))

    @property
    def entries(self) -> tuple[int, ...]:
        return self._entries

    def at(self, k: int) -> int:
        """Entry at mode ``k`` (1-based); zero beyond the stored support."""
        return self._entries[k - 1] if 0 < k <= len(self._entries) else 0

    def modes(self) -> Iterator[tuple[int, int]]:
        """Yield ``(k, alpha_k)`` for every mode with a nonzero entry."""
        for i, a in enumerate(self._entries):
            if a:
                yield i + 1, a

    def padded(self, m: int) -> tuple[int, ...]:
        if len(self._entries) > m:
            raise ValueError(f"{self} has index above {m}")
        return self._entries + (0,) * (m - len(self._entries))

    def is_zero(self) -> bool:
        return not self._entries

    def __len__(self) -> int:
        return sum(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiIndex):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return self._hash

    def __le__(self, other: MultiIndex) -> bool:
        if len(self._entries) > len(other._entries):
            return False
        return all(a <= b for a, b in zip(self._entries, other._entries))

    def __lt__(self, other: MultiIndex) -> bool:
        return self != other and self <= other

    def __ge__(self, other: MultiIndex) -> bool:
        return other <= self

    def __gt__(self, other: MultiIndex) -> bool:
        return other < self

    def __add__(self, other: MultiIndex) -> MultiIndex:
        return add(self, other)

    def sub(self, other: MultiIndex) -> MultiIndex | None:
        return sub(self, other)

    def sort_key(self) -> tuple:
        # level first, then larger leading entries first: eps_1 before eps_2
        return (len(self), tuple(-a for a in self._entries), -len(self._entries))

    def to_list(self) -> list[int]:
        return list(self._entries)

    def serialize(self) -> str:
        return "[" + ",".join(str(a) for a in self._entries) + "]"

    @classmethod
    def parse(cls, text: str) -> MultiIndex:
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"not a serialized multi-index: {text!r}")
        body = body[1:-1].strip()
        return cls(int(s) for s in body.split(",")) if body else cls.zero()

    def __repr__(self) -> str:
        if not self._entries:
            return "MultiIndex(0)"
        return f"MultiIndex({self.serialize()})"


@dataclass(frozen=True)
class Truncation:
    """The finite set of indices with ``|alpha| <= n`` and ``Index(alpha) <= m``."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("truncation order n must be >= 0")
        if self.m < 1:
            raise ValueError("truncation index m must be >= 1")

    def __contains__(self, alpha: MultiIndex) -> bool:
        return len(alpha) <= self.n and index_of(alpha) <= self.m

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(enumerate_truncation(self))

    def __len__(self) -> int:
        return math.comb(self.n + self.m, self.m)

    def contains_truncation(self, other: Truncation) -> bool:
        return self.n >= other.n and self.m >= other.m

    def __str__(self) -> str:
        return f"I({self.n},{self.m})"


def length(alpha: MultiIndex) -> int:
    return sum(alpha.entries)


def factorial(alpha: MultiIndex) -> int:
    out = 1
    for a in alpha.entries:
        out *= math.factorial(a)
    return out


def log_weight(alpha: MultiIndex) -> float:
    """``log (2N)^alpha = sum_n alpha_n log(2n)``."""
    return math.fsum(a * math.log(2 * k) for k, a in alpha.modes())


def weight(alpha: MultiIndex, q: float) -> float:
    """``(2N)^(q alpha)``; raises ``OverflowError`` outside the float range."""
    lw = q * log_weight(alpha)
    if lw > 709.78:
        raise OverflowError(f"weight of {alpha} at q={q} exceeds float range")
    return math.exp(lw)


def add(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    a, b = alpha.entries, beta.entries
    if len(a) < len(b):
        a, b = b, a
    return MultiIndex(x + (b[i] if i < len(b) else 0) for i, x in enumerate(a))


def sub(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex | None:
    """``alpha - beta`` if ``beta <= alpha`` componentwise, else ``None``."""
    if not beta <= alpha:
        return None
    b = beta.entries
    return MultiIndex(x - (b[i] if i < len(b) else 0) for i, x in enumerate(alpha.entries))


def index_of(alpha: MultiIndex) -> int:
    """Last mode with a nonzero entry; 0 for the zero index."""
    return len(alpha.entries)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # stars and bars: all tuples of `parts` non-negative ints summing to `total`
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=256)
def _enumerate_cached(n: int, m: int) -> tuple[MultiIndex, ...]:
    out = []
    for level in range(n + 1):
        out.extend(MultiIndex(c) for c in _compositions(level, m))
    return tuple(out)


def enumerate_truncation(t: Truncation) -> list[MultiIndex]:
    """Every index of ``t``, by level ascending and then lexicographically.

    Within a level, indices with larger leading entries come first, so the
    list for ``(n=2, m=2)`` is ``0, e1, e2, 2e1, e1+e2, 2e2``.  The order
    extends the componentwise partial order.
    """
    return list(_enumerate_cached(t.n, t.m))


def decompositions(alpha: MultiIndex) -> list[tuple[MultiIndex, MultiIndex]]:
    """All ordered pairs ``(beta, gamma)`` with ``beta + gamma == alpha``."""
    ranges = [range(a + 1) for a in alpha.entries]
    pairs = []
    for b in itertools.product(*ranges):
        beta = MultiIndex(b)
        pairs.append((beta, MultiIndex(a - x for a, x in zip(alpha.entries, b))))
    return pairs


def weight_sum(p: float, t: Truncation) -> float:
    """``sum_{alpha in t} (2N)^(-p alpha)``."""
    if p <= 0:
        raise ValueError("p must be positive")
    return math.fsum(math.exp(-p * log_weight(a)) for a in enumerate_truncation(t))


def full_weight_sum(p: float, terms: int = 200_000) -> float:
    """``sum over all multi-indices of (2N)^(-p alpha)``, finite for ``p > 1``.

    Evaluated as ``prod_k 1/(1 - (2k)^-p)``; the product tail beyond
    ``terms`` factors is bounded by ``exp(sum_{k>terms} 2 (2k)^-p)`` and that
    bound is included, so the result is an upper bound accurate to ~1e-9.
    """
    if p <= 1:
        raise ValueError("the full weight series diverges for p <= 1")
    k = np.arange(1, terms + 1, dtype=float)
    log_prod = -np.sum(np.log1p(-(2.0 * k) ** (-p)))
    tail = 2.0 * 2.0 ** (-p) * terms ** (1.0 - p) / (p - 1.0)
    return float(math.exp(log_prod + tail))


def support_union(supports: Sequence[Iterable[MultiIndex]]) -> list[MultiIndex]:
    seen: set[MultiIndex] = set()
    for s in supports:
        seen.update(s)
    return sorted(seen, key=MultiIndex.sort_key)
