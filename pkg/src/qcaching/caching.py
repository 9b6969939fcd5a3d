"""Per-node content stores: LRU, LFU and minimum-expected-cost (MEC) eviction.

All contents have unit size, so capacity is a number of items. LFU and MEC
share one compare-then-replace rule: an incoming content replaces the
lowest-scoring stored item only if its own score is strictly larger. LFU
scores a content by its request count, MEC by count times cost-to-go. With a
constant cost-to-go the two are the same policy.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Iterable, Sequence

LRU = "lru"
LFU = "lfu"
MEC = "mec"
POLICIES = (LRU, LFU, MEC)


class CacheError(ValueError):
    pass


class CacheState:
    """Content store of one cache-router.

    Parameters
    ----------
    capacity : int
        Number of unit-size items ``B``.
    policy : {"lru", "lfu", "mec"}
    catalog_size : int
        Contents are ``0 .. catalog_size - 1``.
    """

    def __init__(self, capacity: int, policy: str, catalog_size: int):
        if capacity < 0:
            raise CacheError("capacity must be >= 0")
        if policy not in POLICIES:
            raise CacheError(f"unknown policy {policy!r}")
        self.capacity = capacity
        self.policy = policy
        self.counts = [0.0] * catalog_size
        # LRU keeps insertion/access order with the last-access step as value
        self._store: OrderedDict[int, int] = OrderedDict()

    @property
    def stored(self) -> set[int]:
        return set(self._store)

    @property
    def recency(self) -> dict[int, int]:
        return dict(self._store)

    def __contains__(self, d: int) -> bool:
        return d in self._store

    def __len__(self) -> int:
        return len(self._store)

    def record_request(self, d: int) -> None:
        self.counts[d] += 1

    def decay(self, gamma: float) -> None:
        """Scale every request count by ``gamma`` (epoch boundary forgetting)."""
        self.counts = [c * gamma for c in self.counts]

    def lookup(self, d: int, step: int = 0) -> bool:
        if d not in self._store:
            return False
        if self.policy == LRU:
            self._store.move_to_end(d)
            self._store[d] = step
        return True

    def score(self, d: int, cost_to_go: Callable[[int], float] | None = None) -> float:
        if self.policy == MEC and cost_to_go is not None:
            return self.counts[d] * cost_to_go(d)
        return self.counts[d]

    def lowest(self, cost_to_go: Callable[[int], float] | None = None) -> tuple[int, float]:
        """Stored item with the smallest score; lowest content id on ties."""
        victim, low = -1, None
        for d in self._store:
            s = self.score(d, cost_to_go)
            if low is None or s < low or (s == low and d < victim):
                victim, low = d, s
        return victim, low

    def consider_admission(
        self, d: int, cost_to_go: Callable[[int], float] | None = None, step: int = 0
    ) -> tuple[bool, int | None]:
        """Backward-pass placement decision for content ``d``.

        Returns ``(admitted, evicted)``. ``cost_to_go`` maps a content to
        ``Q_x(d)`` and is only consulted by MEC.
        """
        if d in self._store:
            raise CacheError(f"content {d} is already stored")
        if self.capacity == 0:
            return False, None
        if len(self._store) < self.capacity:
            self._store[d] = step
            return True, None
        if self.policy == LRU:
            evicted, _ = self._store.popitem(last=False)
            self._store[d] = step
            return True, evicted
        victim, low = self.lowest(cost_to_go)
        if self.score(d, cost_to_go) > low:
            del self._store[victim]
            self._store[d] = step
            return True, victim
        return False, None

    def place(self, contents: Iterable[int]) -> None:
        """Overwrite the store (used by oracles and tests)."""
        items = list(contents)
        if len(items) > self.capacity:
            raise CacheError("placement exceeds capacity")
        self._store = OrderedDict((d, 0) for d in items)


class CustodianStore:
    """The permanent holder: every catalog content is always a hit."""

    def __init__(self, catalog_size: int):
        self.catalog_size = catalog_size

    def lookup(self, d: int, step: int = 0) -> bool:
        return 0 <= d < self.catalog_size


def optimal_local_placement(weights: Sequence[float], B: int) -> set[int]:
    """The ``B`` contents with the largest weight; ties favour lower ids."""
    if B < 0:
        raise CacheError("B must be >= 0")
    order = sorted(range(len(weights)), key=lambda d: (-weights[d], d))
    return set(order[:B])
