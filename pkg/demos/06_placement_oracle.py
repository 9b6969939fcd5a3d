"""
Comparing with the optimal placement
====================================

On a tiny instance every placement can be enumerated. Q-caching's learned
placement gets close to the best one.
"""
import numpy as np

from qcaching.experiment import brute_force_placement_oracle
from qcaching.simulator import SimConfig, Simulation
from qcaching.topology import build_chain
from qcaching.workload import RequestDistribution, zipf_weights

topo = build_chain(3, 100.0).with_clients([0])
cfg = SimConfig(topology="chain", nodes=3, catalog_size=5, cache_size=1, steps=3000)
dist = RequestDistribution.shared(zipf_weights(5, cfg.beta), topo.client_weight)
placement, best = brute_force_placement_oracle(topo, dist, cfg.cache_size)
print("optimal placement:", [sorted(s) for s in placement], "cost %.3f" % best)

sim = Simulation(cfg, topo)
m = sim.run()
print("learned placement:", [sorted(c.stored) for c in sim.caches],
      "cost %.3f" % np.mean(m.step_mean_cost[cfg.warmup_steps:]))
