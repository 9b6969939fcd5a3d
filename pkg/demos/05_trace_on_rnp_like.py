"""
Non-stationary trace on a national backbone
===========================================

The bundled 27-node backbone and synthetic 31-video trace: popularity shifts
every epoch, and caches adapt.
"""
import numpy as np

from qcaching import data_path
from qcaching.simulator import SimConfig, Simulation

base = SimConfig(topology="file", topology_file=data_path("rnp_like.topo"), workload="trace",
                 trace_file=data_path("synthetic_trace.csv"), cache_size=3, epoch_length=50,
                 steps=1500)
for strategy in ("qcaching", "qlfu", "spf-lru"):
    m = Simulation(base.with_strategy(strategy)).run()
    tail = m.step_mean_cost[m.tail_start:]
    cheap = int(np.sum(m.content_mean_cost() < 200))
    print(f"{strategy:8s} cost {np.mean(tail):7.2f} (std {np.std(tail):5.2f}), "
          f"videos under custodian cost: {cheap}, mean diversity {np.mean(m.step_diversity):.1f}")
