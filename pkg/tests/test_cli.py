import csv
import io
import json
import subprocess
import sys

import pytest

from dlczmux.cli import BUDGET_COLUMNS, MC_COLUMNS, csv_body
from dlczmux.config import RunConfig, load_config
from dlczmux.errors import ConfigError


def rows(text):
    return list(csv.DictReader(io.StringIO(csv_body(text))))


def header(text, key):
    for line in text.splitlines():
        if line.startswith(f"# {key}: "):
            return line.split(": ", 1)[1]
    raise KeyError(key)


# -- config ------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = RunConfig(epsilon=0.02, wave_times=(1e-6,), n_grid=(1, 7), p=0.003, seed=9)
    again = RunConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg
    path = tmp_path / "c.json"
    path.write_text(again.to_json())
    assert load_config(path) == cfg


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigError, match="finese"):
        RunConfig.from_dict({"finese": 100})


@pytest.mark.parametrize("bad", [{"epsilon": 1.5}, {"beta_s": 0}, {"n_grid": []}, {"epsilon": "x"}])
def test_invalid_values_rejected(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_defaults_match_reference_setup():
    cfg = RunConfig()
    assert (cfg.epsilon, cfg.l0, cfg.attenuation, cfg.fiber_speed) == (0.01, 100e3, 0.2, 2e8)
    assert (cfg.gamma_inh, cfg.finesse, cfg.beta_s, cfg.eta_memory0) == (1e6, 100, 1e-4, 0.5)
    assert (cfg.tau_slow, cfg.tau_fast) == (0.24, 2.4e-3)


# -- dephase -------------------------------------------------------------------


def test_dephase_peaks_at_echo_times(run_cli):
    code, text, _ = run_cli("dephase", config={"n_atoms": 2000})
    assert code == 0
    peaks = [float(v) for v in header(text, "peak_times").split(",")]
    assert peaks == pytest.approx([19e-6, 18e-6, 17e-6], rel=1e-9)
    table = rows(text)
    assert list(table[0]) == ["t", "wave_0", "wave_1", "wave_2"]
    assert table[0]["wave_0"] == ""  # wave 0 does not exist yet at t = 0
    echo = [r for r in table if abs(float(r["t"]) - 19e-6) < 1e-12][0]
    assert float(echo["wave_0"]) == pytest.approx(1.0, abs=1e-10)


def test_dephase_without_waves_is_header_only(run_cli):
    code, text, _ = run_cli("dephase", config={"wave_times": []})
    assert code == 0
    assert csv_body(text) == "t\n"


def test_outputs_embed_config_and_seed(run_cli):
    code, text, _ = run_cli("budget", "--seed", "17")
    assert code == 0
    assert header(text, "seed") == "17"
    assert RunConfig.from_dict(json.loads(header(text, "config"))).seed == 17


# -- budget ----------------------------------------------------------------------


def test_budget_defaults(run_cli):
    code, text, _ = run_cli("budget")
    table = rows(text)
    assert list(table[0]) == BUDGET_COLUMNS
    assert [int(r["N"]) for r in table] == [1, 10, 100, 500]
    assert float(table[-1]["rate_scaling"]) == pytest.approx(0.7153, abs=1e-4)
    assert float(table[0]["rate_scaling"]) == pytest.approx(0.005, rel=1e-15)


def test_budget_free_space_total(run_cli):
    code, text, _ = run_cli("budget", config={"finesse": 1.0, "p": 0.001})
    for r in rows(text):
        assert float(r["err_total"]) == pytest.approx((int(r["N"]) + 1) * 0.001, rel=1e-12)


def test_budget_single_row(run_cli):
    code, text, _ = run_cli("budget", "--n-grid", "1")
    (r,) = rows(text)
    assert float(r["rate_scaling"]) == 0.005
    assert float(r["speedup_vs_N1"]) == 1.0


def test_budget_flags_saturated_modes(run_cli):
    _, text, _ = run_cli("budget", config={"finesse": 10.0, "gamma_inh": 1e6}, name="b.csv")
    assert "N=100 > 5F" in text


# -- mc ------------------------------------------------------------------------


def test_mc_error_reproduces_n_plus_one_p(run_cli):
    cfg = {"finesse": 1.0, "p": 0.01, "n_grid": [10]}
    code, text, _ = run_cli("mc", "error", "--trials", "2000000", config=cfg)
    assert code == 0
    table = rows(text)
    assert list(table[0]) == MC_COLUMNS
    err = [r for r in table if r["estimator"] == "error"][0]
    assert float(err["analytic"]) == pytest.approx(0.11)
    assert abs(float(err["mean"]) - 0.11) < 3 * float(err["std_error"])


def test_mc_link_ideal_single_attempt(run_cli):
    cfg = {"p": 1.0, "attenuation": 0.0, "eta_detect": 1.0, "n_grid": [1]}
    code, text, _ = run_cli("mc", "link", config=cfg)
    (r,) = rows(text)
    assert float(r["mean"]) == 500e-6
    assert float(r["std_error"]) == 0.0


def test_mc_sweep_matches_budget_column(run_cli):
    _, sweep, _ = run_cli("mc", "sweep", name="s.csv")
    _, table, _ = run_cli("budget", name="b.csv")
    speedup = {int(r["N"]): float(r["speedup_vs_N1"]) for r in rows(table)}
    for r in rows(sweep):
        n = int(r["N"])
        assert float(r["analytic"]) == pytest.approx(speedup[n], rel=1e-12)
        if n > 1:
            assert abs(float(r["mean"]) - speedup[n]) < 3 * float(r["std_error"])


def test_mc_chain_runs(run_cli):
    code, text, _ = run_cli("mc", "chain", "--trials", "300", "--n-grid", "100,500")
    assert code == 0
    assert [r["estimator"] for r in rows(text)] == ["chain", "chain"]


# -- exit codes ------------------------------------------------------------------


def test_config_error_exit_code(run_cli):
    code, _, err = run_cli("budget", config={"bogus": 1})
    assert code == 2
    record = json.loads(err.strip().splitlines()[-1])
    assert record["error"] == "config" and "bogus" in record["message"]


def test_statistical_precondition_exit_code(run_cli):
    code, _, err = run_cli("mc", "error", "--trials", "10", "--n-grid", "1")
    assert code == 3
    assert json.loads(err.strip())["exit_code"] == 3


def test_io_error_exit_code(tmp_path, capsys):
    from dlczmux.cli import main

    code = main(["budget", "--out", str(tmp_path / "missing" / "x.csv")])
    assert code == 4
    assert json.loads(capsys.readouterr().err)["error"] == "io"


def test_too_many_modes_is_config_error(run_cli):
    code, _, _ = run_cli("mc", "link", "--n-grid", "600")
    assert code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "b.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "dlczmux", "budget", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "wrote 4 rows" in proc.stdout
