"""Command-line entry point: ``python -m qcaching {run,sweep,gen-trace}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error. Failures print a
single ``error: ...`` line on stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .caching import CacheError
from .config import apply_overrides, dump_config, load_config
from .learning import LearningError
from .simulator import ConfigError, SimConfig, Simulation
from .topology import TopologyError
from .workload import WorkloadError, synthetic_trace, trace_to_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
log = logging.getLogger("qcaching")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = apply_overrides(cfg, overrides)
    for key in ("topology_file", "trace_file"):
        path = getattr(cfg, key)
        needed = (cfg.topology == "file") if key == "topology_file" else (cfg.workload == "trace")
        if needed and not Path(path).is_file():
            raise ConfigError(f"{key} not found: {path}")
    return cfg


def _write(out: Path, name: str, text: str) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {out / name}: {exc.strerror or exc}", EXIT_IO) from None


def _simulate(configs, jobs, dumps):
    """Run every config; keep the simulations only when dumps are requested."""
    if not dumps:
        return ex.run_many(configs, jobs), []
    sims = []
    for cfg in configs:
        sim = Simulation(cfg, record_caches=True)
        sim.run()
        sims.append(sim)
    return [s.metrics() for s in sims], sims


def _emit(args, results, sims, parameter, values):
    out = Path(args.out)
    _write(out, "metrics.csv", ex.results_csv(results))
    _write(out, "summary.json", ex.summary_json(results, parameter))
    _write(out, "timeseries.csv", ex.timeseries_csv(results))
    if not sims:
        return
    per_point = len(sims) // len(values)
    if args.dump_caches:
        lines = ["sweep_value,run,step,node,content"]
        for i, sim in enumerate(sims):
            sv = "" if values[0] is None else values[i // per_point]
            lines += [f"{sv},{i % per_point},{s},{x},{d}" for s, x, d in sim.cache_rows]
        _write(out, "caches.csv", "\n".join(lines) + "\n")
    if args.dump_qtables:
        parts = []
        for i, sim in enumerate(sims):
            sv = "" if values[0] is None else values[i // per_point]
            body = sim.q.to_csv().splitlines()[1:]
            parts += [f"{sv},{i % per_point},{row}" for row in body]
        _write(out, "qtables.csv", "\n".join(["sweep_value,run,node,content,neighbor,q_value"] + parts) + "\n")


def cmd_run(args) -> int:
    cfg = _config(args)
    configs = ex.point_configs(cfg, None, None, 0, args.runs)
    runs, sims = _simulate(configs, args.jobs, args.dump_caches or args.dump_qtables)
    warmup = cfg.warmup_steps if cfg.steps else 0
    result = ex.aggregate(runs, warmup) if cfg.steps else _empty(runs)
    _write(Path(args.out), "config.ini", dump_config(cfg))
    _emit(args, [result], sims, None, [None])
    log.info("mean cost %.4g over %d run(s)", result.mean["mean_cost"], len(runs))
    return EXIT_OK


def _empty(runs, sweep_value=None) -> ex.ExperimentResult:
    """Placeholder point for zero-step runs: no metric rows at all."""
    nan = float("nan")
    return ex.ExperimentResult([], {k: [] for k in ex.METRICS}, {k: nan for k in ex.METRICS},
                               {k: None for k in ex.METRICS}, sweep_value, 0)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    batches = [ex.point_configs(cfg, args.parameter, v, i, args.runs) for i, v in enumerate(values)]
    flat = [c for b in batches for c in b]
    runs, sims = _simulate(flat, args.jobs, args.dump_caches or args.dump_qtables)
    results = []
    for i, v in enumerate(values):
        chunk = runs[i * args.runs:(i + 1) * args.runs]
        point = batches[i][0]
        if point.steps:
            results.append(ex.aggregate(chunk, point.warmup_steps, sweep_value=v))
        else:
            results.append(_empty(chunk, v))
    _write(Path(args.out), "config.ini", dump_config(cfg))
    _emit(args, results, sims, args.parameter, values)
    for r in results:
        log.info("%s=%s mean cost %.4g", args.parameter, r.sweep_value, r.mean["mean_cost"])
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    try:
        epochs = synthetic_trace(
            args.contents, args.epochs, args.seed, daily_views=args.daily_views,
            weekend_boost=args.weekend_boost, yearly_growth=args.yearly_growth,
        )
    except WorkloadError as exc:
        raise ConfigError(str(exc)) from None
    text = trace_to_csv(epochs)
    if args.out == "-":
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.out)
    try:
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}", EXIT_IO) from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcaching", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI config file (defaults to the reference setup)")
        sp.add_argument("--out", default="results", help="output directory")
        sp.add_argument("--seed", type=int, help="base seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        sp.add_argument("--runs", type=int, default=10, help="independent runs per point")
        sp.add_argument("--override", action="append", metavar="KEY=VALUE", help="set a config key (repeatable)")
        sp.add_argument("--dump-caches", action="store_true", help="write caches.csv")
        sp.add_argument("--dump-qtables", action="store_true", help="write final qtables.csv")

    run = sub.add_parser("run", help="repeat one configuration")
    common(run)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="sweep one config key over comma-separated values")
    sw.add_argument("parameter")
    sw.add_argument("values", help="comma-separated, e.g. 0,0.05,0.1")
    common(sw)
    sw.set_defaults(func=cmd_sweep)

    gt = sub.add_parser("gen-trace", help="write a synthetic epoch,content_id,requests trace")
    gt.add_argument("--contents", type=int, default=31)
    gt.add_argument("--epochs", type=int, default=365)
    gt.add_argument("--seed", type=int, default=0)
    gt.add_argument("--daily-views", type=float, default=400.0)
    gt.add_argument("--weekend-boost", type=float, default=0.3)
    gt.add_argument("--yearly-growth", type=float, default=0.5)
    gt.add_argument("--out", default="-", help="output file, '-' for stdout")
    gt.set_defaults(func=cmd_gen_trace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(message)s")
    try:
        if getattr(args, "runs", 1) < 1 or getattr(args, "jobs", 1) < 1:
            raise ConfigError("--runs and --jobs must be >= 1")
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, TopologyError, WorkloadError, LearningError, CacheError) as exc:
        print(f"error: {str(exc).splitlines()[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        name = f" {exc.filename}" if exc.filename else ""
        print(f"error: I/O failure{name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
