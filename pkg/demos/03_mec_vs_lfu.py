"""
Cost-aware caching versus frequency
===================================

MEC weighs request counts by the learned cost-to-go, LFU counts only. With
cost-to-go frozen at 1 the two make identical decisions; with learned
costs MEC keeps more expensive content close to clients.
"""
from qcaching.experiment import experiment
from qcaching.simulator import SimConfig, Simulation

base = SimConfig(topology="chain", nodes=5, catalog_size=20, cache_size=3, steps=300)

frozen = base.replace(frozen_q=1.0)
traces = []
for strategy in ("qcaching", "qlfu"):
    sim = Simulation(frozen.with_strategy(strategy), record_caches=True)
    sim.run()
    traces.append(sim.cache_rows)
print("frozen Q: identical cache traces:", traces[0] == traces[1])

reference = SimConfig(steps=2000)
for strategy in ("qcaching", "qlfu", "inform"):
    res = experiment(reference.with_strategy(strategy), runs=3)
    lo, hi = res.interval("mean_cost")
    print(f"{strategy:9s} mean cost {res.mean['mean_cost']:6.2f}  95% CI [{lo:.2f}, {hi:.2f}]")
