"""
Sweeping a parameter
====================

Mean download cost against the custodian cost for three strategies, with
Student-t confidence intervals, written out as the CLI would.
"""
from scipy import stats

from qcaching.experiment import results_csv, sweep
from qcaching.simulator import SimConfig

costs = [0, 50, 100]
base = SimConfig(steps=1500)
for strategy in ("qcaching", "qlfu", "inform"):
    res = sweep(base.with_strategy(strategy), "custodian_cost", costs, runs_per_point=3)
    means = [r.mean["mean_cost"] for r in res]
    fit = stats.linregress(costs, means)
    print(f"{strategy:9s} costs {[round(m, 1) for m in means]} slope {fit.slope:.3f}")

print(results_csv(res).splitlines()[:4])
