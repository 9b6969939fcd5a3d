"""Multi-run experiments, sweeps, confidence intervals and placement oracles."""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .simulator import ConfigError, MetricsSeries, SimConfig, Simulation
from .topology import Topology
from .workload import RequestDistribution

METRICS = (
    "mean_cost",
    "custodian_hits",
    "custodian_hit_rate",
    "cache_hit_rate",
    "diversity",
    "budget_fallback_rate",
    "loop_fallback_rate",
)


class OracleTooLarge(ValueError):
    def __init__(self, placements: int, limit: int):
        self.placements = placements
        super().__init__(f"{placements} placements to enumerate exceeds the limit of {limit}")


def derive_seed(base_seed: int, value_index: int, run_index: int) -> int:
    """Independent 32-bit seed for one run of one sweep point."""
    return int(np.random.SeedSequence([base_seed, value_index, run_index]).generate_state(1)[0])


def summarize_run(m: MetricsSeries, warmup: int | None = None) -> dict[str, float]:
    """Post-warmup time averages of one run; NaN when nothing is left."""
    if warmup is None:
        warmup = m.steps // 2
    tail = slice(warmup, None)
    requests = m.step_requests[tail].sum()
    costs = m.step_mean_cost[tail]
    costs = costs[~np.isnan(costs)]
    total = m.total_requests
    nan = math.nan
    return {
        "mean_cost": float(costs.mean()) if len(costs) else nan,
        "custodian_hits": float(m.step_custodian_hits[tail].sum()),
        "custodian_hit_rate": float(m.step_custodian_hits[tail].sum() / requests) if requests else nan,
        "cache_hit_rate": float(m.step_cache_hits[tail].sum() / requests) if requests else nan,
        "diversity": float(m.step_diversity[tail].mean()) if m.steps > warmup else nan,
        "budget_fallback_rate": m.budget_fallbacks / total if total else nan,
        "loop_fallback_rate": m.loop_fallbacks / total if total else nan,
    }


def confidence_interval(values: Sequence[float], level: float = 0.95) -> tuple[float, float | None]:
    """Mean and Student-t half-width; the half-width is None for fewer than two values."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return math.nan, None
    mean = float(x.mean())
    if len(x) < 2:
        return mean, None
    sem = x.std(ddof=1) / math.sqrt(len(x))
    return mean, float(stats.t.ppf(0.5 + level / 2, len(x) - 1) * sem)


@dataclass
class ExperimentResult:
    """Aggregated runs at one sweep point."""

    runs: list[MetricsSeries]
    per_run: dict[str, list[float]]
    mean: dict[str, float]
    half_width: dict[str, float | None]
    sweep_value: object = None
    warmup: int = 0

    def interval(self, metric: str) -> tuple[float, float]:
        hw = self.half_width[metric] or 0.0
        return self.mean[metric] - hw, self.mean[metric] + hw


def aggregate(runs: Sequence[MetricsSeries], warmup: int | None = None, sweep_value=None) -> ExperimentResult:
    """Across-run means and 95% Student-t half-widths of the post-warmup metrics."""
    if not runs:
        raise ValueError("aggregate needs at least one run")
    steps = runs[0].steps
    if warmup is None:
        warmup = steps // 2
    if steps and warmup >= steps:
        raise ValueError("warmup must be shorter than the run")
    per_run = {k: [] for k in METRICS}
    for m in runs:
        for k, v in summarize_run(m, warmup).items():
            per_run[k].append(v)
    mean, half = {}, {}
    for k, vals in per_run.items():
        mean[k], half[k] = confidence_interval(vals)
    return ExperimentResult(list(runs), per_run, mean, half, sweep_value, warmup)


def _run_one(config: SimConfig) -> MetricsSeries:
    return Simulation(config).run()


def run_many(configs: Sequence[SimConfig], jobs: int = 1) -> list[MetricsSeries]:
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, configs))
    return [_run_one(c) for c in configs]


def _coerce(base: SimConfig, parameter: str, value):
    if parameter == "strategy":
        return str(value)
    fields = {f.name: f for f in dataclasses.fields(SimConfig)}
    if parameter not in fields:
        raise ConfigError(f"unknown sweep parameter {parameter!r}")
    current = getattr(base, parameter)
    if isinstance(value, str):
        from .config import parse_value

        return parse_value(parameter, value)
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int) and float(value).is_integer():
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def point_configs(base: SimConfig, parameter: str | None, value, value_index: int, runs: int) -> list[SimConfig]:
    cfg = base
    if parameter is not None:
        v = _coerce(base, parameter, value)
        cfg = base.with_strategy(v) if parameter == "strategy" else base.replace(**{parameter: v})
    cfg.validate()
    return [cfg.replace(seed=derive_seed(base.seed, value_index, r)) for r in range(runs)]


def experiment(base: SimConfig, runs: int = 10, jobs: int = 1, warmup: int | None = None) -> ExperimentResult:
    """``runs`` independent repetitions of ``base``."""
    configs = point_configs(base, None, None, 0, runs)
    return aggregate(run_many(configs, jobs), base.warmup_steps if warmup is None else warmup)


def sweep(
    base: SimConfig,
    parameter: str,
    values: Sequence,
    runs_per_point: int = 10,
    jobs: int = 1,
    warmup: int | None = None,
) -> list[ExperimentResult]:
    """One :class:`ExperimentResult` per value of ``parameter``."""
    if not len(values):
        raise ConfigError("sweep needs at least one value")
    batches = [point_configs(base, parameter, v, i, runs_per_point) for i, v in enumerate(values)]
    flat = run_many([c for b in batches for c in b], jobs)
    results = []
    for i, v in enumerate(values):
        chunk = flat[i * runs_per_point:(i + 1) * runs_per_point]
        w = batches[i][0].warmup_steps if warmup is None else warmup
        results.append(aggregate(chunk, w, sweep_value=v))
    return results


# -- analytic baselines and oracles ------------------------------------------
def no_cache_expected_cost(topology: Topology, distribution: RequestDistribution) -> float:
    """Mean download cost with empty caches and shortest-path routing."""
    dist = topology.distances_to_custodian()
    rates = distribution.rates
    return float(sum(rates[x] * dist[x] for x in range(topology.node_count)) / rates.sum())


def placement_cost(topology: Topology, distribution: RequestDistribution,
                   placement: Sequence[Iterable[int]]) -> float:
    """Expected download cost under shortest-path routing with opportunistic hits."""
    holders = [set(p) for p in placement]
    rates = distribution.rates
    total = 0.0
    for x in distribution.clients:
        path = topology.spf_path(x)
        acc = [0.0]
        for a, b in zip(path, path[1:]):
            acc.append(acc[-1] + topology.cost(a, b))
        for d in range(distribution.catalog_size):
            p = distribution.probs[x, d]
            if p == 0:
                continue
            c = acc[-1]
            for node, a in zip(path[:-1], acc):
                if d in holders[node]:
                    c = a
                    break
            total += rates[x] * p * c
    return total / rates.sum()


def brute_force_placement_oracle(
    topology: Topology,
    distribution: RequestDistribution,
    B: int,
    limit: int = 10**6,
) -> tuple[tuple[frozenset[int], ...], float]:
    """Exhaustively search per-node size-``B`` placements for the cheapest one.

    Routing is fixed to shortest paths towards the custodian. Raises
    :class:`OracleTooLarge` when more than ``limit`` placements exist.
    """
    n, C = topology.node_count, distribution.catalog_size
    b = min(B, C)
    per_node = math.comb(C, b)
    count = per_node ** n
    if count > limit:
        raise OracleTooLarge(count, limit)
    choices = [frozenset(s) for s in itertools.combinations(range(C), b)]

    # per (client, content): cumulative cost to each path position
    paths = []
    rates = distribution.rates
    for x in distribution.clients:
        path = topology.spf_path(x)
        acc = [0.0]
        for u, v in zip(path, path[1:]):
            acc.append(acc[-1] + topology.cost(u, v))
        paths.append((x, path[:-1], acc))

    best, best_cost = None, math.inf
    norm = rates.sum()
    for placement in itertools.product(choices, repeat=n):
        total = 0.0
        for x, nodes, acc in paths:
            probs = distribution.probs[x]
            full = acc[-1]
            for d in range(C):
                c = full
                for node, a in zip(nodes, acc):
                    if d in placement[node]:
                        c = a
                        break
                total += rates[x] * probs[d] * c
        total /= norm
        if total < best_cost - 1e-12:
            best, best_cost = placement, total
    return best, best_cost


def diversity_metric(rows: Iterable[tuple[int, int, int]]) -> dict[int, int]:
    """Distinct contents stored network-wide per step, from ``(step, node, content)`` rows."""
    per_step: dict[int, set[int]] = {}
    for step, _node, content in rows:
        per_step.setdefault(step, set()).add(content)
    return {s: len(c) for s, c in sorted(per_step.items())}


# -- output files -------------------------------------------------------------
def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def results_csv(results: Sequence[ExperimentResult]) -> str:
    """``sweep_value,run,metric,value`` rows, one per run and metric."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_value", "run", "metric", "value"])
    for res in results:
        sv = "" if res.sweep_value is None else str(res.sweep_value)
        for r in range(len(res.runs)):
            for k in METRICS:
                w.writerow([sv, r, k, _fmt(res.per_run[k][r])])
    return buf.getvalue()


def timeseries_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_value", "run", "step", "mean_cost", "custodian_hits", "diversity"])
    for res in results:
        sv = "" if res.sweep_value is None else str(res.sweep_value)
        for r, m in enumerate(res.runs):
            for s in range(m.steps):
                w.writerow([sv, r, s, _fmt(m.step_mean_cost[s]), int(m.step_custodian_hits[s]),
                            int(m.step_diversity[s])])
    return buf.getvalue()


def _clean(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return float(v)


def summary_dict(results: Sequence[ExperimentResult], parameter: str | None = None) -> dict:
    points = []
    for res in results:
        points.append({
            "sweep_value": res.sweep_value,
            "runs": len(res.runs),
            "warmup": res.warmup,
            "mean": {k: _clean(res.mean[k]) for k in METRICS},
            "ci95_half_width": {k: _clean(res.half_width[k]) for k in METRICS},
        })
    return {"parameter": parameter, "metrics": list(METRICS), "points": points}


def summary_json(results: Sequence[ExperimentResult], parameter: str | None = None) -> str:
    return json.dumps(summary_dict(results, parameter), indent=2, sort_keys=True) + "\n"
