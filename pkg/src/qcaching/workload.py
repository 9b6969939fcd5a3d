"""Exogenous request streams: stationary Zipf and epoch-based trace workloads."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

# least-squares fit of cumulative views per video, by popularity rank
YOUTUBE_FIT = (1473.0, 108947.0, 0.4707)


class WorkloadError(ValueError):
    pass


class TraceLoadError(WorkloadError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__((f"line {line}: " if line else "") + message)


def zipf_weights(C: int, beta: float) -> np.ndarray:
    """Probability of each content when rank ``k`` is requested at rate ``1/k**beta``.

    Content id ``k - 1`` carries rank ``k``.
    """
    if C < 1:
        raise WorkloadError("catalog size must be >= 1")
    if beta < 0:
        raise WorkloadError("Zipf parameter must be >= 0")
    raw = np.arange(1, C + 1, dtype=float) ** -float(beta)
    return raw / raw.sum()


def exponential_weight(x, a: float, b: float, c: float):
    """Raw popularity ``a + b * exp(-c * x)`` at rank ``x``."""
    return a + b * np.exp(-c * np.asarray(x, dtype=float))


def exponential_popularity(C: int, a: float, b: float, c: float) -> np.ndarray:
    """Normalised exponential rank-popularity over ranks ``1..C``."""
    if C < 1:
        raise WorkloadError("catalog size must be >= 1")
    raw = exponential_weight(np.arange(1, C + 1), a, b, c)
    if np.any(raw <= 0):
        raise WorkloadError("exponential popularity produced a non-positive weight")
    return raw / raw.sum()


@dataclass(frozen=True)
class RequestDistribution:
    """Per-node request mix ``probs[x, d]`` and per-node rate ``rates[x]``.

    ``rates[x]`` is the expected number of requests node ``x`` issues per step.
    """

    probs: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if probs.ndim != 2 or rates.shape != (probs.shape[0],):
            raise WorkloadError("probs must be (nodes, C) and rates (nodes,)")
        if np.any(probs < 0) or np.any(rates < 0):
            raise WorkloadError("probabilities and rates must be non-negative")
        active = rates > 0
        if not np.allclose(probs[active].sum(axis=1), 1.0, atol=1e-9):
            raise WorkloadError("each client distribution must sum to 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "_cdf", np.cumsum(probs, axis=1))

    @classmethod
    def shared(cls, p: Sequence[float], rates: Sequence[float]) -> "RequestDistribution":
        """Every node draws from the same content distribution ``p``."""
        p = np.asarray(p, dtype=float)
        rates = np.asarray(rates, dtype=float)
        return cls(np.tile(p, (len(rates), 1)), rates)

    @property
    def catalog_size(self) -> int:
        return self.probs.shape[1]

    @property
    def clients(self) -> list[int]:
        return [int(x) for x in np.flatnonzero(self.rates > 0)]

    def rate(self, x: int, d: int) -> float:
        return float(self.rates[x] * self.probs[x, d])

    def sample(self, node: int, rng: np.random.Generator, size: int | None = None):
        """Draw content ids for ``node``; one id when ``size`` is None."""
        if not 0 <= node < len(self.rates) or self.rates[node] <= 0:
            raise WorkloadError(f"node {node} is not a client")
        cdf = self._cdf[node]
        u = rng.random(size)
        idx = np.searchsorted(cdf, u * cdf[-1], side="right")
        idx = np.minimum(idx, len(cdf) - 1)
        return int(idx) if size is None else idx

    def request_counts(self, rng: np.random.Generator) -> np.ndarray:
        """Requests each node issues this step: ``floor(rate)`` plus a Bernoulli remainder."""
        base = np.floor(self.rates)
        frac = self.rates - base
        extra = np.zeros_like(base)
        mask = frac > 0
        if mask.any():
            extra[mask] = rng.random(int(mask.sum())) < frac[mask]
        return (base + extra).astype(int)


def sample_request(dist: RequestDistribution, node: int, rng: np.random.Generator) -> int:
    return dist.sample(node, rng)


@dataclass(frozen=True)
class TraceEpoch:
    epoch: int
    counts: np.ndarray

    def rates(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def epoch_rates(epoch: TraceEpoch) -> np.ndarray:
    return epoch.rates()


def parse_trace(text: str, catalog_size: int | None = None) -> list[TraceEpoch]:
    """Parse ``epoch,content_id,requests`` CSV rows into contiguous epochs."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceLoadError("empty trace file") from None
    if [h.strip() for h in header] != ["epoch", "content_id", "requests"]:
        raise TraceLoadError("header must be 'epoch,content_id,requests'", 1)

    rows: dict[int, dict[int, float]] = {}
    max_content = -1
    last_epoch = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise TraceLoadError("expected 3 columns", lineno)
        try:
            e, d, r = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise TraceLoadError("malformed row", lineno) from None
        if e < 0 or d < 0:
            raise TraceLoadError("negative epoch or content id", lineno)
        if not r >= 0 or math.isinf(r):
            raise TraceLoadError("request count must be a non-negative number", lineno)
        if e < last_epoch:
            raise TraceLoadError("epochs must be ascending", lineno)
        last_epoch = e
        per_epoch = rows.setdefault(e, {})
        if d in per_epoch:
            raise TraceLoadError(f"duplicate entry for epoch {e}, content {d}", lineno)
        per_epoch[d] = r
        max_content = max(max_content, d)

    if not rows:
        raise TraceLoadError("trace has no rows")
    epochs = sorted(rows)
    if epochs != list(range(len(epochs))):
        raise TraceLoadError("epochs must be contiguous and start at 0")
    C = catalog_size if catalog_size is not None else max_content + 1
    if max_content >= C:
        raise TraceLoadError(f"content id {max_content} outside catalog of {C}")
    out = []
    for e in epochs:
        counts = np.zeros(C)
        for d, r in rows[e].items():
            counts[d] = r
        if counts.sum() <= 0:
            raise TraceLoadError(f"epoch {e} has no requests")
        out.append(TraceEpoch(e, counts))
    return out


def load_trace(source: str | Path, catalog_size: int | None = None) -> list[TraceEpoch]:
    return parse_trace(Path(source).read_text(encoding="utf-8"), catalog_size)


def trace_to_csv(epochs: Sequence[TraceEpoch]) -> str:
    buf = io.StringIO()
    buf.write("epoch,content_id,requests\n")
    for ep in epochs:
        for d, r in enumerate(ep.counts):
            buf.write(f"{ep.epoch},{d},{int(r) if float(r).is_integer() else r!r}\n")
    return buf.getvalue()


def synthetic_trace(
    contents: int = 31,
    epochs: int = 365,
    seed: int = 0,
    *,
    daily_views: float = 400.0,
    weekend_boost: float = 0.3,
    yearly_growth: float = 0.5,
    popularity: tuple[float, float, float] = YOUTUBE_FIT,
) -> list[TraceEpoch]:
    """Poisson daily view counts shaped like a small video channel.

    Each content's mean rate follows the exponential rank fit (rank 1 is the
    most viewed), multiplied by a weekly cycle with a weekend boost and by a
    linear trend that adds ``yearly_growth`` of the base rate per 365 days.
    The exponential shape is applied per day although it was fitted to
    cumulative views.
    """
    if contents < 1 or epochs < 1:
        raise WorkloadError("contents and epochs must be >= 1")
    if daily_views <= 0 or weekend_boost < 0 or yearly_growth < 0:
        raise WorkloadError("shape parameters must be non-negative (daily_views > 0)")
    rng = np.random.default_rng(seed)
    share = exponential_popularity(contents, *popularity)
    out = []
    for e in range(epochs):
        weekend = 1.0 + weekend_boost if e % 7 in (5, 6) else 1.0
        trend = 1.0 + yearly_growth * e / 365.0
        counts = rng.poisson(daily_views * share * weekend * trend).astype(float)
        if counts.sum() == 0:
            counts[0] = 1.0
        out.append(TraceEpoch(e, counts))
    return out


class TraceWorkload:
    """Epoch schedule over a trace: step ``s`` uses epoch ``s // epoch_length``.

    Steps past the end of the trace keep the last epoch.
    """

    def __init__(self, epochs: Sequence[TraceEpoch], rates: Sequence[float], epoch_length: int = 1000):
        if not epochs:
            raise WorkloadError("trace has no epochs")
        if epoch_length < 1:
            raise WorkloadError("epoch_length must be >= 1")
        self.epochs = list(epochs)
        self.rates = np.asarray(rates, dtype=float)
        self.epoch_length = epoch_length
        self._cache: dict[int, RequestDistribution] = {}

    def epoch_index(self, step: int) -> int:
        return min(step // self.epoch_length, len(self.epochs) - 1)

    def distribution(self, step: int) -> RequestDistribution:
        e = self.epoch_index(step)
        dist = self._cache.get(e)
        if dist is None:
            dist = RequestDistribution.shared(self.epochs[e].rates(), self.rates)
            self._cache = {e: dist}
        return dist

    def is_boundary(self, step: int) -> bool:
        return step > 0 and self.epoch_index(step) != self.epoch_index(step - 1)
