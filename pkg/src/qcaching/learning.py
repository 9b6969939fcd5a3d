"""Tabular cost-to-go estimates for content-oriented Q-routing.

Each cache node ``x`` keeps ``Q_x(d, y)`` for every content ``d`` and every
neighbour ``y`` (the custodian included when ``x`` is a gateway). Routing
reads a snapshot of the table that is refreshed every ``sync_period`` steps,
while learning always writes the live table.
"""
from __future__ import annotations

import io
import math

from .topology import Topology

NEVER = None  # sync_period sentinel: the routing snapshot is never refreshed


class LearningError(ValueError):
    pass


class QTables:
    """Live and routing (snapshot) Q-tables for every cache node.

    Entries start at ``initial`` (0 by default). An entry counts as
    *estimated* once it has received an update. Cost-to-go, the value
    reported upstream and the greedy routing choice all range over estimated
    entries only: an untried neighbour is unknown, not free. Until a node has
    any estimate for a content it routes to its lowest-id neighbour (skipping
    the upstream one) and has nothing to report; exploration and fallback
    paths fill the table in.

    Parameters
    ----------
    topology : Topology
    catalog_size : int
    alpha : float
        Learning rate in (0, 1].
    sync_period : int or None
        Steps between snapshot refreshes; ``None`` freezes the snapshot.
    exploration_rate : float
        Probability in [0, 1) of routing to a random neighbour.
    initial : float
        Initial value of every entry.
    frozen : bool
        When set, entries start estimated at ``initial`` and never change.
    """

    def __init__(
        self,
        topology: Topology,
        catalog_size: int,
        alpha: float = 0.5,
        sync_period: int | None = 50,
        exploration_rate: float = 0.05,
        initial: float = 0.0,
        frozen: bool = False,
    ):
        if not 0 < alpha <= 1:
            raise LearningError("alpha must be in (0, 1]")
        if sync_period is not None and sync_period < 1:
            raise LearningError("sync_period must be a positive integer or None")
        if not 0 <= exploration_rate < 1:
            raise LearningError("exploration_rate must be in [0, 1)")
        if initial < 0 or not math.isfinite(initial):
            raise LearningError("initial value must be finite and >= 0")
        self.topology = topology
        self.catalog_size = catalog_size
        self.alpha = float(alpha)
        self.sync_period = sync_period
        self.exploration_rate = float(exploration_rate)
        self.frozen = frozen
        n = topology.node_count
        self.neighbors = [topology.neighbors(x) for x in range(n)]
        self.index = [{y: j for j, y in enumerate(nb)} for nb in self.neighbors]
        full = [(1 << len(nb)) - 1 if frozen else 0 for nb in self.neighbors]
        start = float(initial)
        self.live = [[[start] * len(self.neighbors[x]) for _ in range(catalog_size)] for x in range(n)]
        self.estimated = [[full[x]] * catalog_size for x in range(n)]
        self.best = [[start if frozen else 0.0] * catalog_size for x in range(n)]
        self.snapshot = [[row[:] for row in node] for node in self.live]
        self.snapshot_estimated = [m[:] for m in self.estimated]
        self.snapshot_step = 0

    # -- learning -----------------------------------------------------------
    def q_update(self, x: int, d: int, y: int, t: float, q_min: float) -> float:
        """Move ``Q_x(d, y)`` a fraction ``alpha`` towards ``t + q_min``."""
        j = self.index[x].get(y)
        if j is None:
            raise LearningError(f"{y} is not a neighbour of {x}")
        if t < 0 or q_min < 0:
            raise LearningError("hop cost and reported cost-to-go must be >= 0")
        row = self.live[x][d]
        if self.frozen:
            return row[j]
        q = row[j] + self.alpha * (t + q_min - row[j])
        row[j] = q
        mask = self.estimated[x][d] | (1 << j)
        self.estimated[x][d] = mask
        self.best[x][d] = min(v for k, v in enumerate(row) if mask >> k & 1)
        return q

    def cost_to_go(self, x: int, d: int) -> float:
        """``Q_x(d)`` from the live table."""
        return self.best[x][d]

    def report(self, y: int, d: int, requester: int | None = None) -> float | None:
        """Value ``y`` returns to ``requester`` in an acknowledgement.

        Routes leading back to the requester are left out (split horizon),
        so two nodes never justify each other's estimate. ``None`` means
        ``y`` has nothing to report; the custodian always reports 0.
        """
        if y == self.topology.custodian:
            return 0.0
        mask = self.estimated[y][d]
        best = None
        for j, (z, v) in enumerate(zip(self.neighbors[y], self.live[y][d])):
            if z != requester and mask >> j & 1 and (best is None or v < best):
                best = v
        return best

    # -- routing -----------------------------------------------------------
    def min_cost_to_go(self, x: int, d: int, snapshot: bool = False) -> tuple[int, float]:
        """Neighbour with the smallest estimated cost and that cost.

        Only estimated entries take part; with none, the lowest-id neighbour
        and 0 are returned. Ties go to the lowest neighbour id.
        """
        nbrs = self.neighbors[x]
        if not nbrs:
            raise LearningError(f"node {x} is isolated")
        row = (self.snapshot if snapshot else self.live)[x][d]
        mask = (self.snapshot_estimated if snapshot else self.estimated)[x][d]
        best_j, best_v = 0, None
        for j, v in enumerate(row):
            if mask >> j & 1 and (best_v is None or v < best_v):
                best_j, best_v = j, v
        return nbrs[best_j], (0.0 if best_v is None else best_v)

    def greedy_next_hop(self, x: int, d: int, upstream: int | None = None) -> int:
        """Snapshot neighbour with the lowest estimated cost, lowest id on ties.

        Without any estimate the lowest-id neighbour other than ``upstream``
        is taken, so an unexplored node does not bounce the request back.
        """
        nbrs = self.neighbors[x]
        row = self.snapshot[x][d]
        mask = self.snapshot_estimated[x][d]
        if not mask:
            return nbrs[1] if nbrs[0] == upstream and len(nbrs) > 1 else nbrs[0]
        best_j, best_v = 0, None
        for j, v in enumerate(row):
            if mask >> j & 1 and (best_v is None or v < best_v):
                best_j, best_v = j, v
        return nbrs[best_j]

    def select_next_hop(self, x: int, d: int, rng, upstream: int | None = None) -> int:
        """Greedy snapshot choice, or with ``exploration_rate`` a random neighbour.

        The random pick avoids ``upstream`` whenever another neighbour exists.
        ``rng`` only needs a ``random()`` method.
        """
        nbrs = self.neighbors[x]
        if not nbrs:
            raise LearningError(f"node {x} is isolated")
        if len(nbrs) == 1:
            return nbrs[0]
        if self.exploration_rate > 0 and rng.random() < self.exploration_rate:
            pool = [y for y in nbrs if y != upstream] if upstream in nbrs else nbrs
            return pool[int(rng.random() * len(pool))]
        return self.greedy_next_hop(x, d, upstream)

    def sync_routing_snapshot(self, step: int) -> bool:
        """Copy live into the snapshot when ``step`` is a multiple of the period."""
        if self.sync_period is None or step % self.sync_period != 0:
            return False
        self.snapshot = [[row[:] for row in node] for node in self.live]
        self.snapshot_estimated = [m[:] for m in self.estimated]
        self.snapshot_step = step
        return True

    # -- dumps ---------------------------------------------------------------
    def to_csv(self) -> str:
        """Live table as ``node,content,neighbor,q_value`` rows."""
        buf = io.StringIO()
        buf.write("node,content,neighbor,q_value\n")
        for x, node in enumerate(self.live):
            nbrs = self.neighbors[x]
            for d, row in enumerate(node):
                for j, v in enumerate(row):
                    buf.write(f"{x},{d},{nbrs[j]},{v!r}\n")
        return buf.getvalue()
