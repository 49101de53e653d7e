import json
import os

import pytest

from cue_spectra import harness
from cue_spectra.harness import campaigns, records
from cue_spectra.harness.cli import main
from cue_spectra.harness.config import ConfigError, ExperimentConfig, build_config, read_config_file
from cue_spectra.harness.records import ResultRecord, Row, csv_text, emit_csv, emit_json, load_json


def outputs(directory):
    return sorted(p for p in os.listdir(directory) if not p.startswith("."))


def test_sample_run_twice_gives_identical_bytes(tmp_path):
    args = ["sample", "--n", "4", "--samples", "2", "--seed", "1"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    (name,) = outputs(tmp_path / "a")
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("campaign,extra", [
    ("sample", ["--n", "6", "--samples", "300"]),
    ("thm1", ["--n", "8", "--samples", "200"]),
    ("ratios", ["--samples", "2000"]),
])
def test_worker_count_does_not_change_csv(tmp_path, campaign, extra):
    base = [campaign, "--seed", "3"] + extra
    main(base + ["--workers", "1", "--out", str(tmp_path / "w1")])
    main(base + ["--workers", "2", "--out", str(tmp_path / "w2")])
    (name,) = outputs(tmp_path / "w1")
    assert outputs(tmp_path / "w2") == [name]
    assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w2" / name).read_bytes()


def test_exit_zero_when_checks_pass(tmp_path):
    assert main(["sample", "--n", "8", "--samples", "3000", "--out", str(tmp_path)]) == 0


def test_exit_two_when_a_check_fails(tmp_path, monkeypatch):
    monkeypatch.setitem(campaigns.RUNNERS, "sample", lambda cfg: [campaigns.below_row("x", 2.0, 1.0)])
    assert main(["sample", "--out", str(tmp_path)]) == 2


def test_exit_one_on_config_error(tmp_path, capsys):
    assert main(["thm1", "--c", "2.0", "--out", str(tmp_path)]) == 1
    assert "c:" in capsys.readouterr().err
    assert not os.path.exists(tmp_path) or outputs(tmp_path) == []


def test_exit_one_on_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1


def test_exit_one_on_missing_config_file(tmp_path):
    assert main(["sample", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_clt_sqrt_rule():
    cfg = build_config("clt", overrides={"n": "256"})
    assert cfg.l_rule == "sqrt" and cfg.l_for(256) == 16


def test_clt_rejects_large_l():
    with pytest.raises(ConfigError) as exc:
        build_config("clt", overrides={"n": "64", "l": "40"})
    assert exc.value.field == "l"


@pytest.mark.parametrize("overrides,field", [
    ({"c": "2.0"}, "c"),
    ({"c": "0"}, "c"),
    ({"z": "0.5"}, "z"),
    ({"n": "0"}, "n"),
    ({"samples": "10"}, "samples"),
    ({"k": "0"}, "k"),
    ({"format": "xml"}, "format"),
    ({"seed": "-1"}, "seed"),
    ({"workers": "0"}, "workers"),
    ({"n": "abc"}, "n"),
    ({"bogus": "1"}, "bogus"),
])
def test_field_level_errors(overrides, field):
    with pytest.raises(ConfigError) as exc:
        build_config("thm1", overrides=overrides)
    assert exc.value.field == field


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# study\nn = 8, 16\nsamples = 500  # per size\nseed = 4\nl_rule = sqrt\n")
    pairs = read_config_file(str(path))
    cfg = build_config("clt", pairs, {"samples": "700", "l": "3"})
    assert cfg.n == [8, 16] and cfg.samples == 700 and cfg.seed == 4
    assert cfg.l == 3.0 and cfg.l_rule is None


def test_bad_config_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n 8\n")
    with pytest.raises(ConfigError):
        read_config_file(str(path))


def test_hash_ignores_workers_and_output():
    a = ExperimentConfig("sample", n=[4], workers=1, out_dir="x", format="csv")
    b = ExperimentConfig("sample", n=[4], workers=4, out_dir="y", format="json")
    c = ExperimentConfig("sample", n=[4], seed=1)
    assert a.hash() == b.hash() != c.hash()


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CUE_SPECTRA_OUT", str(tmp_path))
    assert ExperimentConfig("sample").out_dir == str(tmp_path)


def test_header_only_csv():
    rec = ResultRecord("sample", "h", 0, "0")
    assert csv_text(rec) == "statistic,value,std_error,target,tolerance,pass\n"


def test_one_row_csv_bytes():
    rec = ResultRecord("sample", "h", 0, "0", rows=[Row("m", 0.1, None, 1.0, 0.5, True)])
    assert csv_text(rec) == ("statistic,value,std_error,target,tolerance,pass\n"
                             "m,0.10000000000000001,,1,0.5,true\n")


def test_json_round_trip(tmp_path):
    rec = ResultRecord("thm1", "abc", 7, "0.1.0",
                       rows=[Row("a", 1.5, 0.1, 1.0, 0.3, True), Row("b", -2.0)],
                       wall_time=1.25, config={"n": [8], "c": [0.5]})
    path = emit_json(rec, str(tmp_path / "r.json"))
    assert load_json(path) == rec
    assert json.loads(open(path).read())["schema_version"] == records.SCHEMA_VERSION


def test_killed_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"

    def boom(src, dst):
        raise KeyboardInterrupt

    monkeypatch.setattr(records.os, "replace", boom)
    with pytest.raises(KeyboardInterrupt):
        emit_csv(ResultRecord("sample", "h", 0, "0"), str(target))
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    emit_csv(ResultRecord("sample", "h", 0, "0"), str(target))
    assert target.read_text().startswith("statistic,")


def test_run_returns_record_and_writes_both(tmp_path):
    cfg = build_config("ratios", overrides={"samples": "2000", "out": str(tmp_path), "format": "both"})
    rec = harness.run(cfg)
    paths = harness.output_paths(cfg)
    assert set(paths) == {"csv", "json"}
    assert load_json(paths["json"]).rows == rec.rows
    assert rec.config_hash == cfg.hash()
