import json
import os

import pytest

from pcid import runner
from pcid.runner import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    load_config,
    main,
    parse_config,
    resolve_seed,
)


def read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def test_list_subcommands(capsys):
    assert main(["list-specs"]) == EXIT_OK
    out = capsys.readouterr().out
    for kind in ("polya", "reinforced", "uniform_coupled", "gaussian_last_tick",
                 "state_space_cid"):
        assert kind in out
    lines = [ln.split()[0] for ln in out.strip().splitlines()]
    assert lines == sorted(lines)
    assert main(["list-tests"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("check_pcid", "check_stopping_time", "check_clt_forecast_errors",
                 "check_clt_sample_mean", "check_gaussian_limit"):
        assert name in out


def test_unknown_config_exits_2(capsys):
    assert main(["run", "--config", "no_such_config"]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_unknown_spec_kind_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"spec": {"kind": "martian"}, "n_paths": 10, "horizon": 5}))
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    assert "unknown spec kind" in capsys.readouterr().err


def test_unknown_test_name_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"spec": {"kind": "polya"}, "n_paths": 10, "horizon": 5,
                               "tests": [{"name": "check_everything"}]}))
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    assert "unknown check" in capsys.readouterr().err


def test_positive_control_config_passes(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", "polya_baseline", "--out", str(out)]) == EXIT_OK
    report = json.loads(read(out / "report.json"))
    assert report["all_pass"] is True
    assert report["report_schema"] == 1
    assert report["library_version"]
    assert report["master_seed"] == 2024
    assert report["config"]["spec"]["kind"] == "polya"
    assert len(report["verdicts"]) == 3
    assert "overall: PASS" in read(out / "summary.txt")


def test_negative_control_config_fails(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", "broken_weight_coupling", "--out", str(out)])
    assert code == EXIT_CHECK_FAILED
    report = json.loads(read(out / "report.json"))
    assert report["all_pass"] is False
    assert report["verdicts"][0]["name"] == "check_pcid"
    assert report["verdicts"][0]["pass"] is False


def test_report_byte_identical_across_reruns_and_threads(tmp_path):
    args = ["run", "--config", "polya_baseline", "--seed", "7"]
    outs = []
    for i, threads in enumerate(("1", "2", "3")):
        out = tmp_path / f"out{i}"
        assert main(args + ["--threads", threads, "--out", str(out)]) == EXIT_OK
        outs.append(read(out / "report.json"))
    assert outs[0] == outs[1] == outs[2]


def test_seed_resolution_order(monkeypatch):
    monkeypatch.delenv("PCID_SEED", raising=False)
    assert resolve_seed(5, 9) == 5
    assert resolve_seed(None, 9) == 9
    assert resolve_seed(None, None) == 0
    monkeypatch.setenv("PCID_SEED", "123")
    assert resolve_seed(None, None) == 123
    assert resolve_seed(None, 9) == 9
    monkeypatch.setenv("PCID_SEED", "xyz")
    with pytest.raises(ConfigError):
        resolve_seed(None, None)


def test_series_csv_schema(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "name": "series_demo",
        "spec": {"kind": "polya", "n_coords": 2},
        "n_paths": 3, "horizon": 4, "master_seed": 11,
        "record": ["observations", "predictive_mean"],
    }))
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    obs = read(out / "series_observations.csv").strip().splitlines()
    assert obs[0] == "path,step,coordinate,series,value"
    assert len(obs) == 1 + 3 * 4 * 2
    first = obs[1].split(",")
    assert first[0] == "0" and first[1] == "1" and first[2] == "0"
    assert first[3] == "observations"
    float(first[4])
    pred = read(out / "series_predictive_mean.csv").strip().splitlines()
    assert len(pred) == 1 + 3 * 5 * 2          # prior row at step 0
    assert pred[1].split(",")[1] == "0"


def test_series_reject_unavailable(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "spec": {"kind": "polya", "n_coords": 1},
        "n_paths": 2, "horizon": 2, "record": ["arrivals"],
    }))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_cli_overrides_sizes(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "spec": {"kind": "polya", "n_coords": 1},
        "n_paths": 100, "horizon": 10, "master_seed": 3,
        "tests": [{"name": "check_stopping_time",
                   "params": {"tau": {"kind": "constant", "n": 3}}}],
    }))
    assert main(["run", "--config", str(cfg), "--paths", "600", "--horizon", "8",
                 "--out", str(out)]) == EXIT_OK
    report = json.loads(read(out / "report.json"))
    assert report["n_paths"] == 600 and report["horizon"] == 8
    assert report["verdicts"][0]["n_paths"] == 600


def test_parse_config_validates_sizes():
    with pytest.raises(ConfigError, match="n_paths"):
        parse_config({"spec": {"kind": "polya"}, "n_paths": 0, "horizon": 5})
    with pytest.raises(ConfigError, match="format"):
        parse_config({"spec": {"kind": "polya"}, "n_paths": 1, "horizon": 5,
                      "format": "xml"})


def test_load_bundled_configs_all_parse():
    for name in ("polya_baseline", "broken_weight_coupling", "uniform_coupled_demo",
                 "gaussian_last_tick_limit"):
        cfg = load_config(name)
        assert cfg.n_paths >= 1
