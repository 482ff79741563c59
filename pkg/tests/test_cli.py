import csv

import numpy as np
import pytest

from fdsim.cli import main
from fdsim.config import apply_overrides, bundled_config_path, config_from_dict, load_config
from fdsim.errors import ConfigError


FAST = ["--set", "ttis_per_drop=60", "--set", "n_drops=1", "--workers", "1"]


def test_validate_bundled_configs(capsys):
    for name in ("indoor", "outdoor_cluster", "outdoor_uniform"):
        assert main(["validate", "--scenario", name]) == 0
        assert "config ok" in capsys.readouterr().out


def test_validate_missing_config_is_config_error(capsys):
    assert main(["validate", "--config", "/nonexistent/path.yaml"]) == 1
    assert "config error" in capsys.readouterr().err


def test_validate_bad_key_names_offender(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("power:\n  p0_dbm: -80.0\n  made_up_key: 3\n")
    assert main(["validate", "--config", str(p)]) == 1
    assert "made_up_key" in capsys.readouterr().err


def test_conflicting_config_sources(capsys):
    assert main(["validate", "--scenario", "indoor", "--config", "x.yaml"]) == 1


def test_fig1_outputs(tmp_path, capsys):
    out = tmp_path / "fig1"
    assert main(["fig1", "--scenario", "indoor", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "fig1_cdf.csv")))
    series = {r["series"] for r in rows}
    assert series == {"bsbs_over_ul", "ueue_over_dl"}
    bsbs = [float(r["value_db"]) for r in rows if r["series"] == "bsbs_over_ul"]
    median = float(np.median(bsbs))
    assert 30.0 <= median <= 60.0
    assert (out / "summary.txt").exists()


def test_run_outputs_and_override_echo(tmp_path):
    out = tmp_path / "run"
    rc = main(["run", "--scenario", "indoor", "--out", str(out),
               "--set", "power.boost_db=3.0"] + FAST)
    assert rc == 0
    summary = (out / "summary.txt").read_text()
    assert "power.boost_db=3.0" in summary       # overrides echo verbatim
    assert "ttis_per_drop=60" in summary
    for f in ("throughput_cdf_dl.csv", "throughput_cdf_ul.csv"):
        rows = list(csv.DictReader(open(out / f)))
        assert len(rows) == 280                  # one per UE of that direction
        probs = [float(r["cum_prob"]) for r in rows]
        assert probs == sorted(probs)
        assert probs[-1] == pytest.approx(1.0)


def test_run_seed_flag_changes_results(tmp_path):
    outs = []
    for seed in (3, 3, 4):
        out = tmp_path / f"run{len(outs)}"
        assert main(["run", "--scenario", "indoor", "--out", str(out),
                     "--seed", str(seed)] + FAST) == 0
        outs.append((out / "throughput_cdf_dl.csv").read_bytes())
    assert outs[0] == outs[1]                    # same seed: bit-identical files
    assert outs[0] != outs[2]


def test_compare_gain_table(tmp_path):
    out = tmp_path / "cmp"
    rc = main(["compare", "--scenario", "indoor", "--modes", "fd,fdd",
               "--out", str(out)] + FAST)
    assert rc == 0
    rows = list(csv.DictReader(open(out / "gains.csv")))
    key = {(r["mode"], r["direction"], r["stat"]) for r in rows}
    assert ("fd", "dl", "mean") in key and ("fd", "ul", "mean") in key
    fdd_dl = [r for r in rows if r["mode"] == "fdd" and r["direction"] == "dl"]
    assert float(fdd_dl[0]["gain_vs_fdd"]) == pytest.approx(1.0)


def test_sweep_outputs(tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--scenario", "indoor", "--out", str(out),
               "--loads", "6e6", "--modes", "fd,fdd",
               "--set", "traffic.model=ftp3", "--set", "ttis_per_drop=400",
               "--set", "n_drops=1", "--workers", "1"])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "gains.csv")))
    assert {r["stat"] for r in rows} == {"mean", "p5", "p50", "p95"}
    assert all(r["dl_load_bps"] == "6e+06" for r in rows)


def test_sweep_requires_ftp3(capsys):
    assert main(["sweep", "--scenario", "indoor", "--loads", "6e6"]) == 1


def test_overrides_parse_and_reject():
    data = {"power": {"p0_dbm": -80.0}}
    apply_overrides(data, ["power.alpha=0.5", "seed=9"])
    cfg = config_from_dict(data)
    assert cfg.power.alpha == 0.5 and cfg.seed == 9
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])
    with pytest.raises(ConfigError):
        config_from_dict({"nonsense": 1})


def test_load_config_round_trips_bundled():
    cfg, raw = load_config(bundled_config_path("indoor"))
    assert cfg.scenario.kind == "indoor_hotzone"
    assert cfg.scenario.channel.models["bs_ue"].los_prob == "inh"
    assert raw["power"]["p0_dbm"] == cfg.power.p0_dbm
