import csv
import json
from importlib import resources

import pytest
import yaml

from cnnldp import cli
from cnnldp.cli import EXIT_CONFIG, EXIT_OK, comparison_rows, main
from cnnldp.config import ScenarioConfig, from_dict, load_config, preset_names
from cnnldp.errors import ConfigError


def write_cfg(path, **sections):
    """network1 preset with some sections patched, written to ``path``."""
    raw = yaml.safe_load((resources.files("cnnldp") / "presets" / "network1.yaml").read_text())
    for name, values in sections.items():
        raw.setdefault(name, {}).update(values)
    path.write_text(yaml.safe_dump(raw))
    return path


def test_presets_load():
    names = preset_names()
    assert {"network1", "network2", "network3", "lowdemand"} <= set(names)
    sizes = {n: load_config(n) for n in ("network1", "network2", "network3")}
    assert [(c.network.node_count, c.network.link_count) for c in sizes.values()] == [(91, 83), (151, 163), (320, 324)]
    low = load_config("lowdemand")
    assert low.traffic.demand_range == (1, 1) and low.run.n_rb == 7
    for c in sizes.values():
        assert c.network.n_channels == c.run.n_rb


@pytest.mark.parametrize(
    "raw",
    [
        {"bogus": 1},
        {"run": {"n_rb": 12}},
        {"run": {"n_rb": 2}},
        {"run": {"horizon": 0}},
        {"run": {"scheduler": "magic"}},
        {"run": {"gate_threshold": 1.5}},
        {"run": {"n_rb": 5}, "network": {"n_channels": 7}},
        {"run": {"shiny": True}},
        {"model": {"learning_rate": -1}},
        {"run": []},
    ],
)
def test_config_errors(raw):
    with pytest.raises(ConfigError):
        from_dict(raw)


def test_defaults_valid():
    cfg = from_dict({})
    assert isinstance(cfg, ScenarioConfig) and cfg.run.n_rb == 7 and cfg.network.n_channels == 7


def test_load_missing_and_bad_yaml(tmp_path):
    with pytest.raises(ConfigError):
        load_config("nope")
    bad = tmp_path / "bad.yaml"
    bad.write_text("run: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--config", "nope"],
        ["run", "--config", "network1", "--horizon", "0"],
        ["run", "--config", "network1", "--seed", "-3"],
        ["run", "--config", "network1", "--scheduler", "cnn"],
        ["train", "--config", "network1"],
    ],
)
def test_cli_config_exit_code(tmp_path, argv, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_cli_run_baseline_outputs(tmp_path, capsys):
    assert main(["run", "--config", "network1", "--scheduler", "baseline", "--horizon", "10", "--out", str(tmp_path)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("baseline: mean SINR")
    headers = {
        "schedule.csv": "t,link,rb,state",
        "events.csv": "t,link,event,packets",
        "sinr.csv": "t,link,rb,sinr_db",
        "nodes.csv": "id,kind,cell,x,y",
        "links.csv": "id,tx,rx,kind,distance",
        "conflicts.csv": "i,j",
        "traffic.csv": "link,first_arrival,period,rel_deadline,demand,priority_class",
    }
    for name, head in headers.items():
        assert (tmp_path / name).read_text().splitlines()[0] == head
    report = json.loads((tmp_path / "report.json").read_text())
    for key in ("mean_sinr_db", "sinr_q25_db", "sinr_q75_db", "schedulable_ratio", "reliability", "capacity",
                "mean_latency_s", "mean_ber", "mean_per", "mean_retrans", "gamma_th", "packet_bytes", "n_bits",
                "bandwidth_hz", "temperature_k", "boltzmann"):
        assert key in report
    assert report["scheduler"] == "baseline" and not (tmp_path / "messages.csv").exists()


def test_cli_seed_changes_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["run", "--config", "network1", "--scheduler", "baseline", "--horizon", "5"]
    main([*base, "--seed", "1", "--out", str(a)])
    main([*base, "--seed", "2", "--out", str(b)])
    assert (a / "nodes.csv").read_bytes() != (b / "nodes.csv").read_bytes()


def test_compare_identical_zero_gain(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", run={"scheduler": "baseline", "horizon": 10})
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg), "--against", str(cfg), "--out", str(out)]) == EXIT_OK
    with open(out / "comparison.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["metric", "a", "b", "gain_percent"]
    for r in rows:
        assert r["a"] == r["b"]
        assert float(r["gain_percent"]) == 0.0 or r["gain_percent"] == "nan"


def test_comparison_gain_formula():
    class R:
        pass

    a, b = R(), R()
    for name in cli.COMPARED_METRICS:
        setattr(a, name, 1.0)
        setattr(b, name, 1.0)
    a.mean_sinr_db, b.mean_sinr_db = 32.09, 15.09
    rows = {r[0]: r[3] for r in comparison_rows(a, b)}
    assert rows["mean_sinr_db"] == pytest.approx(112.657, abs=1e-3)
    assert rows["schedulable_ratio"] == 0.0


def test_cli_cnn_run_with_trained_models(tmp_path, workdir):
    cfg = write_cfg(
        tmp_path / "c.yaml",
        model={"priority": str(workdir / "models/priority.cnn"), "rb": str(workdir / "models/rb.cnn")},
        run={"horizon": 10},
    )
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    msgs = (tmp_path / "o" / "messages.csv").read_text().splitlines()
    assert msgs[0] == "t,round,link,sent" and len(msgs) > 1
    assert json.loads((tmp_path / "o" / "report.json").read_text())["scheduler"] == "cnn"


def test_training_outputs(workdir):
    for which in ("priority", "rb"):
        lines = (workdir / f"models/train_{which}.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,train_acc"
        assert len(lines) == 1 + load_config("network1").model.epochs
    for f in ("features.bin", "labels_priority.bin", "labels_rb.bin", "meta.csv"):
        assert (workdir / "dataset" / f).is_file()
