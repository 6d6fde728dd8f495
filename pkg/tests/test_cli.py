from pathlib import Path

import pytest

from consip.cli import main
from consip.config import ConfigError, apply_overrides, dump_config, from_mapping, load_config
from consip.simulator import ScenarioConfig

ROOT = Path(__file__).resolve().parents[1]
SHORT = ["--set", "duration=86400.0"]


def csv_rows(path: Path) -> list[str]:
    return path.read_text().splitlines()


# ---- config


def test_default_config_file_matches_defaults():
    assert load_config(ROOT / "configs" / "default.toml") == ScenarioConfig()


def test_dump_roundtrip(tmp_path):
    cfg = apply_overrides(ScenarioConfig(), ["t_app=5.0", "t_update=disabled", "losses.eps_f=0.2"])
    p = tmp_path / "c.toml"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert cfg.t_update is None and cfg.losses.eps_f == 0.2


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        from_mapping({"bogus": 1})
    with pytest.raises(ConfigError):
        from_mapping({"losses": {"eps_x": 1}})
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["slot_j=1"])
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["no_equals_sign"])
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.toml")


def test_duration_years_key():
    assert from_mapping({"duration_years": 2}).duration == 2 * 365 * 86400.0


# ---- commands


def test_run_disabled_writes_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--out", str(out), "--set", "consip_enabled=false", *SHORT]) == 0
    header, row = csv_rows(out / "report.csv")
    cols = header.split(",")
    for c in ("P_tx_tot_TX", "P_rx_RX", "P_listen_RX", "P_tot_RX", "P_tot", "mu_d", "sigma_d", "d_p99", "d_p99_9", "d_max"):
        assert c in cols
    assert dict(zip(cols, row.split(",")))["listing"] == "disabled"
    for name in ("config.toml", "latency.csv", "exchange_latency.csv", "hist_latency.csv"):
        assert (out / name).is_file()


def test_override_gives_distinct_baseline(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--out", str(a), "--set", "consip_enabled=false", *SHORT]) == 0
    assert main(["run", "--out", str(b), "--set", "consip_enabled=false", "--set", "t_app=5.0", *SHORT]) == 0
    assert csv_rows(a / "report.csv")[1] != csv_rows(b / "report.csv")[1]


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "--out", str(d), "--seed", "4", *SHORT]) == 0
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name


def test_refuses_to_overwrite_without_force(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--out", str(out), *SHORT]) == 0
    assert main(["run", "--out", str(out), *SHORT]) == 2
    assert main(["run", "--out", str(out), "--force", *SHORT]) == 0


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2


def test_config_file_is_used(tmp_path):
    out = tmp_path / "o"
    cfg = ROOT / "configs" / "baseline_tapp5.toml"
    assert main(["run", "--config", str(cfg), "--out", str(out), *SHORT]) == 0
    assert "t_app = 5.0" in (out / "config.toml").read_text()


def test_table_commands(tmp_path):
    assert main(["table2", "--out", str(tmp_path), *SHORT]) == 0
    assert len(csv_rows(tmp_path / "table2.csv")) == 1 + 5
    assert main(["table3", "--out", str(tmp_path), *SHORT]) == 0
    rows = csv_rows(tmp_path / "table3.csv")
    assert [r.split(",")[0] for r in rows[1:]] == ["d_SW", "d_DL", "d_tot"]


@pytest.mark.slow
def test_table1_rows(tmp_path):
    assert main(["table1", "--out", str(tmp_path), "--set", "duration=604800.0"]) == 0
    assert len(csv_rows(tmp_path / "table1.csv")) == 1 + 14


def test_fig4_lossless_single_plateau(tmp_path, capsys):
    assert main(["fig4", "--out", str(tmp_path), "--set", "losses.eps_f=0.0", "--set", "losses.eps_a=0.0", *SHORT]) == 0
    rows = [r.split(",") for r in csv_rows(tmp_path / "fig4_d_sw.csv")[1:]]
    assert rows and all(float(v) < 2.02 for v, _, _ in rows)
    assert float(rows[-1][2]) == 1.0


def test_fig4_empty_run(tmp_path):
    assert main(["fig4", "--out", str(tmp_path), "--set", "duration=0.0"]) == 0
    assert csv_rows(tmp_path / "fig4_d_sw.csv") == ["value_s,pdf,cdf"]


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--horizon", "8"]) == 0
    assert main(["verify", "--horizon", "13"]) == 2
    assert main(["verify", "--horizon", "5", "--mutant", "skip-double-listening", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "counterexample.trace").read_text().startswith("# counterexample")
    assert main(["verify", "--script", "nonsense@1"]) == 2


def test_soak_command(capsys):
    assert main(["soak", "--exchanges", "200", "--eps-f", "0.5", "--eps-a", "0.5"]) == 0
    assert "zero violations" in capsys.readouterr().out
