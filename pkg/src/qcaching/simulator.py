"""Lock-step network simulation of joint Q-routing and caching.

Every step each client issues its exogenous requests, and each request is
served to completion before the next one starts (zero download delay): it is
forwarded hop by hop until a cache holding the content or the custodian is
reached, then the content flows back along the reversed path, updating
Q-tables and offering the content to every cache on the way.
"""
from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .caching import LFU, LRU, MEC, POLICIES, CacheState
from .learning import QTables
from .topology import Topology, build_chain, build_layered, build_tree, leaf_nodes, load_topology
from .workload import RequestDistribution, TraceWorkload, load_trace, zipf_weights

QROUTING = "qrouting"
SPF = "spf"
ROUTINGS = (QROUTING, SPF)
TOPOLOGIES = ("layered", "chain", "tree", "file")
WORKLOADS = ("zipf", "trace")

STRATEGIES = {
    "inform": (QROUTING, LRU),
    "qcaching": (QROUTING, MEC),
    "qlfu": (QROUTING, LFU),
    "spf-lru": (SPF, LRU),
    "spf-lfu": (SPF, LFU),
    "spf-mec": (SPF, MEC),
}



class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    """One simulation run. Defaults reproduce the reference setup.

    ``sync_period=None`` freezes the routing snapshot, ``hop_budget_max=None``
    means four times the hop diameter, and ``frozen_q`` pins every Q entry to
    the given value with learning switched off.
    """

    # topology
    topology: str = "layered"
    levels: int = 3
    width: int = 4
    nodes: int = 5
    depth: int = 3
    topology_file: str = ""
    custodian_cost: float = 100.0
    arrivals: str = "all"
    # workload
    workload: str = "zipf"
    catalog_size: int = 100
    beta: float = 0.8
    trace_file: str = ""
    epoch_length: int = 1000
    count_decay: float = 0.9
    expectation: bool = False
    # strategy
    routing: str = QROUTING
    caching: str = MEC
    cache_size: int = 10
    alpha: float = 0.5
    exploration_rate: float = 0.05
    sync_period: int | None = 50
    hop_budget_max: int | None = None
    frozen_q: float | None = None
    # run
    steps: int = 5000
    seed: int = 0
    warmup_fraction: float = 0.5

    def validate(self) -> "SimConfig":
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.topology == "file" and not self.topology_file:
            raise ConfigError("topology=file needs topology_file")
        if self.arrivals not in ("all", "leaves"):
            raise ConfigError("arrivals must be 'all' or 'leaves'")
        if self.workload not in WORKLOADS:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if self.workload == "trace" and not self.trace_file:
            raise ConfigError("workload=trace needs trace_file")
        if self.routing not in ROUTINGS:
            raise ConfigError(f"unknown routing {self.routing!r}")
        if self.caching not in POLICIES:
            raise ConfigError(f"unknown caching policy {self.caching!r}")
        checks = [
            (self.levels >= 1 and self.width >= 1 and self.nodes >= 1 and self.depth >= 0, "topology size"),
            (self.custodian_cost >= 0, "custodian_cost must be >= 0"),
            (self.catalog_size >= 1, "catalog_size must be >= 1"),
            (self.beta >= 0, "beta must be >= 0"),
            (self.epoch_length >= 1, "epoch_length must be >= 1"),
            (0 < self.count_decay <= 1, "count_decay must be in (0, 1]"),
            (self.cache_size >= 0, "cache_size must be >= 0"),
            (0 < self.alpha <= 1, "alpha must be in (0, 1]"),
            (0 <= self.exploration_rate < 1, "exploration_rate must be in [0, 1)"),
            (self.sync_period is None or self.sync_period >= 1, "sync_period must be >= 1"),
            (self.hop_budget_max is None or self.hop_budget_max >= 1, "hop_budget_max must be >= 1"),
            (self.frozen_q is None or self.frozen_q >= 0, "frozen_q must be >= 0"),
            (self.steps >= 0, "steps must be >= 0"),
            (0 <= self.warmup_fraction < 1, "warmup_fraction must be in [0, 1)"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    @property
    def strategy(self) -> str:
        for name, combo in STRATEGIES.items():
            if combo == (self.routing, self.caching):
                return name
        raise ConfigError(f"no strategy named for {self.routing}+{self.caching}")

    def with_strategy(self, name: str) -> "SimConfig":
        try:
            routing, caching = STRATEGIES[name]
        except KeyError:
            raise ConfigError(f"unknown strategy {name!r}") from None
        return dataclasses.replace(self, routing=routing, caching=caching)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def warmup_steps(self) -> int:
        return int(self.steps * self.warmup_fraction)


def build_topology(config: SimConfig) -> Topology:
    if config.topology == "layered":
        topo = build_layered(config.levels, config.width, config.custodian_cost)
    elif config.topology == "chain":
        topo = build_chain(config.nodes, config.custodian_cost)
    elif config.topology == "tree":
        topo = build_tree(config.depth, config.custodian_cost)
    else:
        topo = load_topology(config.topology_file)
    if config.arrivals == "leaves":
        topo = topo.with_clients(leaf_nodes(topo))
    return topo


@dataclass
class Request:
    """An in-flight interest; ``path`` ends at the node that served it."""

    nonce: int
    content: int
    origin: int
    weight: float = 1.0
    path: list[int] = field(default_factory=list)
    hop_costs: list[float] = field(default_factory=list)
    accumulated_cost: float = 0.0
    hop_budget: int = 0
    fallback: str | None = None

    @property
    def terminal(self) -> int:
        return self.path[-1]


@dataclass
class MetricsSeries:
    """Per-step and per-run outputs of one simulation.

    ``content_*_tail`` accumulate only from ``tail_start`` on, so per-content
    steady-state costs survive without keeping per-step per-content arrays.
    """

    step_mean_cost: np.ndarray
    step_requests: np.ndarray
    step_custodian_hits: np.ndarray
    step_cache_hits: np.ndarray
    step_diversity: np.ndarray
    content_cost_sum: np.ndarray
    content_count: np.ndarray
    content_cost_sum_tail: np.ndarray
    content_count_tail: np.ndarray
    node_hits: np.ndarray
    node_misses: np.ndarray
    budget_fallbacks: int
    loop_fallbacks: int
    tail_start: int

    @property
    def steps(self) -> int:
        return len(self.step_mean_cost)

    @property
    def total_requests(self) -> float:
        return float(self.step_requests.sum())

    @property
    def custodian_hits_cumulative(self) -> np.ndarray:
        return np.cumsum(self.step_custodian_hits)

    @property
    def hit_probability(self) -> np.ndarray:
        """Measured per-node hit probability (NaN where a node saw nothing)."""
        seen = self.node_hits + self.node_misses
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(seen > 0, self.node_hits / seen, np.nan)

    def content_mean_cost(self, tail: bool = True) -> np.ndarray:
        s, c = (self.content_cost_sum_tail, self.content_count_tail) if tail else (
            self.content_cost_sum, self.content_count)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(c > 0, s / np.where(c > 0, c, 1), np.nan)


class Simulation:
    """Mutable state of one run: topology, caches, Q-tables and metrics."""

    def __init__(self, config: SimConfig, topology: Topology | None = None, *,
                 record_caches: bool = False, debug: bool = False, hop_cost=None):
        """``hop_cost(x, y)`` overrides the per-hop cost ``t`` (default: link cost)."""
        self.config = config.validate()
        self.topology = topo = topology if topology is not None else build_topology(config)
        self.debug = debug
        n = topo.node_count
        self.custodian = topo.custodian

        if config.workload == "trace":
            epochs = load_trace(config.trace_file)
            self.trace = TraceWorkload(epochs, topo.client_weight, config.epoch_length)
            C = len(epochs[0].counts)
        else:
            self.trace = None
            C = config.catalog_size
            self.distribution = RequestDistribution.shared(zipf_weights(C, config.beta), topo.client_weight)
        self.catalog_size = C

        self.caches = [CacheState(config.cache_size, config.caching, C) for _ in range(n)]
        frozen = config.frozen_q is not None
        self.spf_next = topo.spf_next_hops()
        self.q = QTables(
            topo, C, alpha=config.alpha, sync_period=config.sync_period,
            exploration_rate=config.exploration_rate,
            initial=config.frozen_q if frozen else 0.0, frozen=frozen,
        )
        self.hop_budget_max = config.hop_budget_max or 4 * topo.hop_diameter()
        hop_cost = hop_cost or topo.cost
        self._cost = {}
        for x in range(n):
            for y in topo.neighbors(x):
                t = float(hop_cost(x, y))
                if not t >= 0:
                    raise ConfigError(f"hop cost {x}->{y} must be >= 0, got {t}")
                self._cost[(x, y)] = t

        seeds = np.random.SeedSequence(config.seed).spawn(2)
        self.workload_rng = np.random.default_rng(seeds[0])
        self.route_rng = random.Random(int(seeds[1].generate_state(1)[0]))
        self.nonce_rng = random.Random(int(seeds[1].generate_state(2)[1]))

        self.step_index = 0
        self.tail_start = config.warmup_steps
        self.record_caches = record_caches
        self.cache_rows: list[tuple[int, int, int]] = []
        self._reset_metrics()

    # -- bookkeeping ---------------------------------------------------------
    def _reset_metrics(self):
        C, n = self.catalog_size, self.topology.node_count
        self._step_cost: list[float] = []
        self._step_requests: list[float] = []
        self._step_custodian: list[int] = []
        self._step_cache_hits: list[int] = []
        self._step_diversity: list[int] = []
        self.content_cost_sum = np.zeros(C)
        self.content_count = np.zeros(C)
        self.content_cost_sum_tail = np.zeros(C)
        self.content_count_tail = np.zeros(C)
        self.node_hits = np.zeros(n, dtype=np.int64)
        self.node_misses = np.zeros(n, dtype=np.int64)
        self.budget_fallbacks = 0
        self.loop_fallbacks = 0

    def metrics(self) -> MetricsSeries:
        return MetricsSeries(
            step_mean_cost=np.array(self._step_cost, dtype=float),
            step_requests=np.array(self._step_requests, dtype=float),
            step_custodian_hits=np.array(self._step_custodian, dtype=np.int64),
            step_cache_hits=np.array(self._step_cache_hits, dtype=np.int64),
            step_diversity=np.array(self._step_diversity, dtype=np.int64),
            content_cost_sum=self.content_cost_sum.copy(),
            content_count=self.content_count.copy(),
            content_cost_sum_tail=self.content_cost_sum_tail.copy(),
            content_count_tail=self.content_count_tail.copy(),
            node_hits=self.node_hits.copy(),
            node_misses=self.node_misses.copy(),
            budget_fallbacks=self.budget_fallbacks,
            loop_fallbacks=self.loop_fallbacks,
            tail_start=self.tail_start,
        )

    def current_distribution(self) -> RequestDistribution:
        if self.trace is not None:
            return self.trace.distribution(self.step_index)
        return self.distribution

    def diversity(self) -> int:
        return len(set().union(*(c.stored for c in self.caches)))

    # -- lock-step -----------------------------------------------------------
    def generate_requests(self) -> list[tuple[int, int, float]]:
        """(origin, content, weight) for this step, clients in ascending order."""
        dist = self.current_distribution()
        queue = []
        if self.config.expectation:
            for x in dist.clients:
                for d in range(self.catalog_size):
                    w = dist.rate(x, d)
                    if w > 0:
                        queue.append((x, d, w))
            return queue
        counts = dist.request_counts(self.workload_rng)
        for x in dist.clients:
            k = int(counts[x])
            if k:
                for d in dist.sample(x, self.workload_rng, k):
                    queue.append((x, int(d), 1.0))
        return queue

    def step(self) -> None:
        s = self.step_index
        if self.trace is not None and self.trace.is_boundary(s) and self.config.count_decay != 1:
            for cache in self.caches:
                cache.decay(self.config.count_decay)

        cost_sum = weight_sum = 0.0
        custodian = cache_hits = 0
        tail = s >= self.tail_start
        for origin, d, w in self.generate_requests():
            req = self.serve(origin, d, w)
            c = req.accumulated_cost
            cost_sum += w * c
            weight_sum += w
            if req.terminal == self.custodian:
                custodian += 1
            else:
                cache_hits += 1
            self.content_cost_sum[d] += w * c
            self.content_count[d] += w
            if tail:
                self.content_cost_sum_tail[d] += w * c
                self.content_count_tail[d] += w

        self.step_index = s + 1
        self.q.sync_routing_snapshot(self.step_index)
        self._step_cost.append(cost_sum / weight_sum if weight_sum else math.nan)
        self._step_requests.append(weight_sum)
        self._step_custodian.append(custodian)
        self._step_cache_hits.append(cache_hits)
        self._step_diversity.append(self.diversity())
        if self.record_caches:
            for x, cache in enumerate(self.caches):
                for d in sorted(cache.stored):
                    self.cache_rows.append((s, x, d))

    def serve(self, origin: int, d: int, weight: float = 1.0) -> Request:
        """Forward one request to a holder, then run the backward pass."""
        req = Request(self.nonce_rng.getrandbits(64), d, origin, weight, hop_budget=self.hop_budget_max)
        self.forward(req)
        self.backward_pass(req)
        if self.debug:
            self._check_request(req)
        return req

    def forward(self, req: Request) -> int:
        """Route ``req`` until a replica or the custodian; returns the terminal."""
        d = req.content
        x = req.origin
        caches, q, cost = self.caches, self.q, self._cost
        custodian = self.custodian
        step = self.step_index
        use_q = self.config.routing == QROUTING
        rng = self.route_rng
        path = req.path
        hop_costs = req.hop_costs
        path.append(x)
        visited = {x}

        caches[x].counts[d] += req.weight
        if caches[x].lookup(d, step):
            self.node_hits[x] += 1
            return x
        self.node_misses[x] += 1

        upstream = None
        fallback = not use_q
        while True:
            if fallback:
                y = self.spf_next[x]
            elif req.hop_budget <= 0:
                req.fallback = "budget"
                self.budget_fallbacks += 1
                fallback = True
                continue
            else:
                y = q.select_next_hop(x, d, rng, upstream)
                req.hop_budget -= 1
                if y in visited:
                    # duplicate nonce: the arrival is dropped, its NACK still carries y's estimate
                    q_min = q.report(y, d, x)
                    if q_min is not None:
                        q.q_update(x, d, y, cost[(x, y)], q_min)
                    req.fallback = "loop"
                    self.loop_fallbacks += 1
                    fallback = True
                    continue
            t = cost[(x, y)]
            req.accumulated_cost += t
            path.append(y)
            hop_costs.append(t)
            if y == custodian:
                return y
            upstream, x = x, y
            if y in visited:
                # fallback crossing an earlier hop; already known to miss
                continue
            visited.add(y)
            caches[y].counts[d] += req.weight
            if caches[y].lookup(d, step):
                self.node_hits[y] += 1
                return y
            self.node_misses[y] += 1

    def backward_pass(self, req: Request) -> None:
        """Reverse walk from the terminal: Q update, then placement, per hop."""
        path = req.path
        k = len(path) - 1
        if k == 0:
            return
        d = req.content
        q = self.q
        caches = self.caches
        step = self.step_index
        mec = self.config.caching == MEC
        best = q.best
        for i in range(k - 1, -1, -1):
            x, y = path[i], path[i + 1]
            q_min = 0.0 if i + 1 == k else q.report(y, d, x)
            if q_min is not None:
                q.q_update(x, d, y, req.hop_costs[i], q_min)
            cache = caches[x]
            if d in cache:
                continue
            cache.consider_admission(d, best[x].__getitem__ if mec else None, step)

    def _check_request(self, req: Request) -> None:
        total = sum(self._cost[(a, b)] for a, b in zip(req.path, req.path[1:]))
        assert abs(total - req.accumulated_cost) <= 1e-9 * max(1.0, total), (total, req)
        term = req.terminal
        assert term == self.custodian or req.content in self.caches[term]
        if req.fallback is None:
            assert len(set(req.path)) == len(req.path), req.path

    def run(self) -> MetricsSeries:
        for _ in range(self.config.steps):
            self.step()
        return self.metrics()


def run(config: SimConfig, topology: Topology | None = None) -> MetricsSeries:
    """Simulate ``config.steps`` lock-steps from empty caches and zero Q-tables."""
    return Simulation(config, topology).run()
