"""Network graphs of cache-routers with a single virtual custodian.

Cache nodes are numbered ``0 .. node_count - 1``. The custodian is a virtual
node with id ``node_count``: it permanently holds every content, never evicts
and is reachable only through *gateway* nodes, each with its own link cost.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

REFERENCE_BANDWIDTH_MBPS = 20_000.0


class TopologyError(ValueError):
    """Invalid topology parameters or an ill-formed graph."""


class TopologyLoadError(TopologyError):
    """A topology file could not be parsed; ``line`` is 1-based (0 if global)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=True)
class Topology:
    """Immutable undirected graph of caches plus the custodian attachment.

    Parameters
    ----------
    node_count : int
        Number of cache-routers.
    link_cost : mapping
        ``{(a, b): cost}`` with ``a < b``; costs strictly positive.
    gateways : mapping
        ``{node: cost}`` of the links into the custodian. Zero cost is allowed
        here so that custodian-cost sweeps can start at 0.
    client_weight : sequence of float
        Per-node request-rate multiplier; nodes with weight 0 issue no requests.
    bandwidth : mapping, optional
        Raw bandwidths for file-loaded graphs, kept so that serialisation
        round-trips exactly. Keys as in ``link_cost`` plus ``(node, custodian)``.
    """

    node_count: int
    link_cost: Mapping[tuple[int, int], float]
    gateways: Mapping[int, float]
    client_weight: tuple[float, ...]
    bandwidth: Mapping[tuple[int, int], float] | None = field(default=None, compare=False)
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise TopologyError("node_count must be >= 1")
        if len(self.client_weight) != n:
            raise TopologyError("client_weight must have one entry per node")
        if any(w < 0 for w in self.client_weight):
            raise TopologyError("client weights must be non-negative")
        if not any(w > 0 for w in self.client_weight):
            raise TopologyError("at least one node must be a client")
        if not self.gateways:
            raise TopologyError("the custodian must be attached to at least one node")
        adj: list[set[int]] = [set() for _ in range(n)]
        for (a, b), cost in self.link_cost.items():
            if not (0 <= a < n and 0 <= b < n) or a >= b:
                raise TopologyError(f"bad link ({a}, {b})")
            if not cost > 0:
                raise TopologyError(f"link ({a}, {b}) has non-positive cost {cost}")
            adj[a].add(b)
            adj[b].add(a)
        for g, cost in self.gateways.items():
            if not 0 <= g < n:
                raise TopologyError(f"custodian attached to unknown node {g}")
            if cost < 0:
                raise TopologyError("custodian link cost must be >= 0")
            adj[g].add(n)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(s)) for s in adj))
        if not self._connected():
            raise TopologyError("graph is disconnected")

    @property
    def custodian(self) -> int:
        """Id of the virtual custodian node."""
        return self.node_count

    @property
    def custodian_link_cost(self) -> float:
        """Cost of the cheapest link into the custodian."""
        return min(self.gateways.values())

    @property
    def clients(self) -> frozenset[int]:
        return frozenset(x for x, w in enumerate(self.client_weight) if w > 0)

    def custodian_of(self, content: int) -> int:
        # single custodian holds the whole catalog
        return self.custodian

    def neighbors(self, x: int) -> tuple[int, ...]:
        """Sorted neighbour ids of cache node ``x`` (custodian id included)."""
        return self.adjacency[x]

    def cost(self, a: int, b: int) -> float:
        n = self.node_count
        if b == n:
            return self.gateways[a]
        if a == n:
            return self.gateways[b]
        return self.link_cost[_edge(a, b)]

    def _connected(self) -> bool:
        seen = self.bfs_order(0)
        return len(seen) == self.node_count

    def bfs_order(self, start: int) -> list[int]:
        """Cache nodes reachable from ``start`` without passing the custodian."""
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in self.adjacency[x]:
                if y < self.node_count and y not in seen:
                    seen.add(y)
                    order.append(y)
                    queue.append(y)
        return order

    def hop_diameter(self) -> int:
        """Largest hop distance between any two nodes, custodian included."""
        n = self.node_count
        full_adj = [list(a) for a in self.adjacency] + [sorted(self.gateways)]
        best = 0
        for s in range(n + 1):
            dist = {s: 0}
            queue = deque([s])
            while queue:
                x = queue.popleft()
                for y in full_adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            best = max(best, max(dist.values()))
        return best

    def distances_to_custodian(self) -> list[float]:
        """Shortest-path cost from every cache node to the custodian."""
        return self.shortest_paths_from(self.custodian)[: self.node_count]

    def shortest_paths_from(self, source: int) -> list[float]:
        """Dijkstra over caches and custodian; index ``node_count`` is the custodian."""
        n = self.node_count
        full_adj = [list(a) for a in self.adjacency] + [sorted(self.gateways)]
        dist = [float("inf")] * (n + 1)
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            for y in full_adj[x]:
                nd = d + self.cost(x, y)
                if nd < dist[y]:
                    dist[y] = nd
                    heapq.heappush(heap, (nd, y))
        return dist

    def spf_next_hops(self) -> list[int]:
        """Next hop towards the custodian on a shortest path; ties -> lowest id."""
        dist = self.shortest_paths_from(self.custodian)
        hops = []
        for x in range(self.node_count):
            hops.append(min(self.adjacency[x], key=lambda y: (self.cost(x, y) + dist[y], y)))
        return hops

    def spf_path(self, x: int) -> list[int]:
        """Node sequence from ``x`` to the custodian following :meth:`spf_next_hops`."""
        hops = self.spf_next_hops()
        path = [x]
        while path[-1] != self.custodian:
            path.append(hops[path[-1]])
        return path

    def with_custodian_cost(self, cost: float) -> "Topology":
        return Topology(
            self.node_count,
            dict(self.link_cost),
            {g: float(cost) for g in self.gateways},
            self.client_weight,
        )

    def with_clients(self, clients: Iterable[int]) -> "Topology":
        keep = set(clients)
        weights = tuple(w if x in keep else 0.0 for x, w in enumerate(self.client_weight))
        return Topology(self.node_count, dict(self.link_cost), dict(self.gateways), weights, self.bandwidth)

    def to_text(self, reference_bandwidth: float = REFERENCE_BANDWIDTH_MBPS) -> str:
        """Serialise to the line-oriented topology file format."""
        bw = self.bandwidth or {}
        lines = ["# qcaching topology"]
        for x, w in enumerate(self.client_weight):
            lines.append(f"node {x}" if w == 1.0 else f"node {x} client_weight={w!r}")
        for (a, b), cost in sorted(self.link_cost.items()):
            lines.append(f"link {a} {b} {bw.get((a, b), reference_bandwidth / cost)!r}")
        for g, cost in sorted(self.gateways.items()):
            value = bw.get((g, self.custodian))
            if value is None:
                if cost == 0:
                    raise TopologyError("zero-cost custodian link has no finite bandwidth")
                value = reference_bandwidth / cost
            lines.append(f"custodian {g} {value!r}")
        return "\n".join(lines) + "\n"


def _uniform_weights(n: int) -> tuple[float, ...]:
    return (1.0,) * n


def build_chain(n: int, custodian_cost: float = 100.0) -> Topology:
    """Path 0 - 1 - ... - (n-1) with the custodian hanging off node ``n - 1``."""
    if n < 1:
        raise TopologyError("chain needs at least one node")
    links = {(i, i + 1): 1.0 for i in range(n - 1)}
    return Topology(n, links, {n - 1: float(custodian_cost)}, _uniform_weights(n))


def build_tree(depth: int, custodian_cost: float = 100.0) -> Topology:
    """Complete binary tree, root 0, children of ``i`` at ``2i+1`` and ``2i+2``.

    The custodian sits above the root.
    """
    if depth < 0:
        raise TopologyError("tree depth must be >= 0")
    n = 2 ** (depth + 1) - 1
    links = {}
    for i in range(1, n):
        links[((i - 1) // 2, i)] = 1.0
    return Topology(n, links, {0: float(custodian_cost)}, _uniform_weights(n))


def build_layered(levels: int, width: int, custodian_cost: float = 100.0) -> Topology:
    """``levels x width`` grid; level 0 is the top and every top node is a gateway.

    Adjacent levels are fully bipartite-connected and nodes within a level form
    a lateral chain. All internal links cost 1.
    """
    if levels < 1 or width < 1:
        raise TopologyError("levels and width must be >= 1")
    n = levels * width
    links = {}
    for lvl in range(levels):
        base = lvl * width
        for j in range(width - 1):
            links[(base + j, base + j + 1)] = 1.0
        if lvl + 1 < levels:
            for j in range(width):
                for k in range(width):
                    links[(base + j, base + width + k)] = 1.0
    gateways = {j: float(custodian_cost) for j in range(width)}
    return Topology(n, links, gateways, _uniform_weights(n))


def leaf_nodes(topology: Topology) -> list[int]:
    """Nodes farthest (in hops) from the custodian: tree leaves, bottom layer, chain end."""
    n = topology.node_count
    hops = {topology.custodian: 0}
    queue = deque([topology.custodian])
    full_adj = [list(a) for a in topology.adjacency] + [sorted(topology.gateways)]
    while queue:
        x = queue.popleft()
        for y in full_adj[x]:
            if y not in hops:
                hops[y] = hops[x] + 1
                queue.append(y)
    deepest = max(hops[x] for x in range(n))
    return [x for x in range(n) if hops[x] == deepest]


def parse_topology(text: str, reference_bandwidth: float = REFERENCE_BANDWIDTH_MBPS) -> Topology:
    """Parse topology file contents; link cost = reference_bandwidth / bandwidth."""
    weights: dict[int, float] = {}
    links: dict[tuple[int, int], float] = {}
    gateways: dict[int, float] = {}
    bandwidth: dict[tuple[int, int], float] = {}
    pending: list[tuple[int, str, int, int, float]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.partition("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "node":
                if len(parts) not in (2, 3):
                    raise TopologyLoadError("expected 'node <id> [client_weight=<real>]'", lineno)
                node = int(parts[1])
                if node in weights:
                    raise TopologyLoadError(f"duplicate node {node}", lineno)
                w = 1.0
                if len(parts) == 3:
                    key, _, value = parts[2].partition("=")
                    if key != "client_weight":
                        raise TopologyLoadError(f"unknown attribute {key!r}", lineno)
                    w = float(value)
                    if w < 0:
                        raise TopologyLoadError("negative client_weight", lineno)
                weights[node] = w
            elif kind == "link":
                if len(parts) != 4:
                    raise TopologyLoadError("expected 'link <a> <b> <bandwidth_mbps>'", lineno)
                pending.append((lineno, kind, int(parts[1]), int(parts[2]), float(parts[3])))
            elif kind == "custodian":
                if len(parts) != 3:
                    raise TopologyLoadError("expected 'custodian <node> <bandwidth_mbps>'", lineno)
                pending.append((lineno, kind, int(parts[1]), -1, float(parts[2])))
            else:
                raise TopologyLoadError(f"unknown record {kind!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, TopologyLoadError):
                raise
            raise TopologyLoadError(f"malformed number ({exc})", lineno) from None

    if not weights:
        raise TopologyLoadError("no nodes declared")
    n = max(weights) + 1
    if sorted(weights) != list(range(n)):
        raise TopologyLoadError("node ids must be dense 0..N-1")

    for lineno, kind, a, b, bw in pending:
        if a not in weights or (kind == "link" and b not in weights):
            raise TopologyLoadError(f"unknown node id in {kind}", lineno)
        if not bw > 0:
            raise TopologyLoadError("bandwidth must be positive", lineno)
        if kind == "link":
            if a == b:
                raise TopologyLoadError("self loop", lineno)
            key = _edge(a, b)
            if key in links:
                raise TopologyLoadError(f"duplicate link {key}", lineno)
            links[key] = reference_bandwidth / bw
            bandwidth[key] = bw
        else:
            if a in gateways:
                raise TopologyLoadError(f"duplicate custodian link at node {a}", lineno)
            gateways[a] = reference_bandwidth / bw
            bandwidth[(a, n)] = bw

    if not gateways:
        raise TopologyLoadError("no custodian record")
    try:
        return Topology(n, links, gateways, tuple(weights[i] for i in range(n)), bandwidth)
    except TopologyError as exc:
        raise TopologyLoadError(str(exc)) from None


def load_topology(source: str | Path, reference_bandwidth: float = REFERENCE_BANDWIDTH_MBPS) -> Topology:
    return parse_topology(Path(source).read_text(encoding="utf-8"), reference_bandwidth)
