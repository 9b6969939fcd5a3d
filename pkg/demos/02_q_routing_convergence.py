"""
Q-routing learns path costs
===========================

With caching disabled, every Q-table on a chain converges to the exact
remaining cost to the custodian.
"""
from qcaching.simulator import SimConfig, Simulation

cfg = SimConfig(topology="chain", nodes=5, cache_size=0, exploration_rate=0.05, steps=10_000)
sim = Simulation(cfg)
truth = sim.topology.distances_to_custodian()

for checkpoint in (100, 1000, 5000, 10_000):
    while sim.step_index < checkpoint:
        sim.step()
    err = max(abs(sim.q.cost_to_go(x, d) - truth[x]) for x in range(5) for d in range(cfg.catalog_size))
    print(f"step {checkpoint:5d}: max error {err:.3g}")

print("content 0 at node 4:", sim.q.cost_to_go(4, 0), "shortest path:", truth[4])
