import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from qcaching import data_path
from qcaching.cli import main
from qcaching.config import apply_overrides, dump_config, load_config, parse_config, parse_value
from qcaching.simulator import STRATEGIES, ConfigError, SimConfig

GOLDEN = Path(__file__).parent / "golden"
SMALL = ["--override", "steps=20", "--override", "catalog_size=10", "--override", "cache_size=2", "--runs", "2"]


def test_empty_config_is_the_reference_setup():
    cfg = parse_config("")
    assert cfg == SimConfig()
    assert (cfg.levels * cfg.width, cfg.cache_size, cfg.beta, cfg.catalog_size, cfg.custodian_cost) == (
        12, 10, 0.8, 100, 100.0)


def test_sections_and_strategy_alias():
    cfg = parse_config("[strategy]\nstrategy = qlfu\nsync_period = never\n[run]\nsteps = 7\n")
    assert (cfg.routing, cfg.caching, cfg.sync_period, cfg.steps) == ("qrouting", "lfu", None, 7)


@pytest.mark.parametrize(
    "text",
    ["[strategy]\nalpha = fast\n", "[weather]\nsunny = yes\n", "[run]\nlevels = 3\n", "[run]\nsteps = 1.5\n",
     "[strategy]\nstrategy = nope\n", "no section\n"],
)
def test_bad_configs_raise(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_value_types():
    assert parse_value("hop_budget_max", "") is None
    assert parse_value("frozen_q", "1") == 1.0
    assert parse_value("expectation", "yes") is True
    assert parse_value("cache_size", "10") == 10


configs = st.builds(
    SimConfig,
    topology=st.sampled_from(["layered", "chain", "tree"]),
    levels=st.integers(1, 5),
    custodian_cost=st.floats(0, 1e4, allow_nan=False),
    arrivals=st.sampled_from(["all", "leaves"]),
    beta=st.floats(0, 3),
    expectation=st.booleans(),
    caching=st.sampled_from(["lru", "lfu", "mec"]),
    alpha=st.floats(0.01, 1.0),
    exploration_rate=st.floats(0, 0.99),
    sync_period=st.one_of(st.none(), st.integers(1, 500)),
    hop_budget_max=st.one_of(st.none(), st.integers(1, 50)),
    frozen_q=st.one_of(st.none(), st.floats(0, 10)),
    seed=st.integers(0, 2**32 - 1),
)


@given(configs)
def test_config_round_trip(cfg):
    assert parse_config(dump_config(cfg)) == cfg


def test_relative_data_paths_resolve_against_the_config(tmp_path):
    (tmp_path / "net.topo").write_text(Path(data_path("rnp_like.topo")).read_text())
    (tmp_path / "run.ini").write_text("[topology]\ntopology = file\ntopology_file = net.topo\n")
    assert load_config(tmp_path / "run.ini").topology_file == str(tmp_path / "net.topo")


def test_overrides():
    cfg = apply_overrides(SimConfig(), ["strategy=spf-lru", "cache_size = 3"])
    assert (cfg.routing, cfg.caching, cfg.cache_size) == ("spf", "lru", 3)
    with pytest.raises(ConfigError):
        apply_overrides(SimConfig(), ["cache_size"])


def test_every_named_strategy_round_trips():
    for name in STRATEGIES:
        assert parse_config(dump_config(SimConfig().with_strategy(name))).strategy == name


# -- command line ---------------------------------------------------------------
def test_run_writes_outputs(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--dump-caches", "--dump-qtables", *SMALL]) == 0
    for name in ("metrics.csv", "summary.json", "timeseries.csv", "caches.csv", "qtables.csv", "config.ini"):
        assert (tmp_path / name).is_file()
    assert (tmp_path / "caches.csv").read_text().startswith("sweep_value,run,step,node,content\n")
    assert load_config(tmp_path / "config.ini").steps == 20


def test_outputs_match_golden_files(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--seed", "3", *SMALL]) == 0
    for name in ("metrics.csv", "summary.json"):
        assert (tmp_path / name).read_text() == (GOLDEN / name).read_text(), name


def test_zero_steps_gives_empty_metrics(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--override", "steps=0"]) == 0
    assert (tmp_path / "metrics.csv").read_text() == "sweep_value,run,metric,value\n"


def test_missing_topology_file_is_a_config_error(tmp_path, capsys):
    missing = tmp_path / "nowhere.topo"
    code = main(["run", "--out", str(tmp_path), "--override", "topology=file",
                 "--override", f"topology_file={missing}"])
    err = capsys.readouterr().err.strip()
    assert code == 2
    assert err.startswith("error: ") and str(missing) in err
    assert "\n" not in err


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "x.ini"), "--out", str(tmp_path)]) == 2
    assert "x.ini" in capsys.readouterr().err


def test_bad_override_and_unknown_flag(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--override", "alpha=2"]) == 2
    assert main(["run", "--bogus"]) == 2


def test_unwritable_output_is_an_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--out", str(blocker / "sub"), *SMALL]) == 3
    assert capsys.readouterr().err.startswith("error: ")


def test_sweep_points(tmp_path):
    code = main(["sweep", "exploration_rate", "0,0.025,0.05,0.1,0.2,0.4", "--out", str(tmp_path), *SMALL])
    assert code == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert [p["sweep_value"] for p in doc["points"]] == ["0", "0.025", "0.05", "0.1", "0.2", "0.4"]
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert {line.split(",")[0] for line in lines[1:]} == {"0", "0.025", "0.05", "0.1", "0.2", "0.4"}


def test_custodian_cost_sweep_has_five_points(tmp_path):
    assert main(["sweep", "custodian_cost", "0,25,50,75,100", "--out", str(tmp_path), *SMALL]) == 0
    assert len(json.loads((tmp_path / "summary.json").read_text())["points"]) == 5


def test_empty_sweep_list(tmp_path, capsys):
    assert main(["sweep", "custodian_cost", "", "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_unknown_sweep_parameter(tmp_path):
    assert main(["sweep", "warp", "1,2", "--out", str(tmp_path), *SMALL]) == 2


def test_gen_trace(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["gen-trace", "--contents", "31", "--epochs", "365", "--seed", "2", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "epoch,content_id,requests"
    assert len(rows) - 1 == 31 * 365
    totals = [0] * 31
    for row in rows[1:]:
        _, d, r = row.split(",")
        totals[int(d)] += int(r)
    assert totals[0] >= totals[30]
    again = tmp_path / "again.csv"
    main(["gen-trace", "--contents", "31", "--epochs", "365", "--seed", "2", "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_gen_trace_rejects_bad_parameters(tmp_path):
    assert main(["gen-trace", "--contents", "0", "--out", str(tmp_path / "t.csv")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qcaching", "gen-trace", "--contents", "2", "--epochs", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "epoch,content_id,requests"
