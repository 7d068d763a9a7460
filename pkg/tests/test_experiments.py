import csv
import subprocess
import sys

import pytest
import yaml

from ticksim.cli import main
from ticksim.engine import ConfigError, ScenarioConfig, save_config
from ticksim.experiments import (
    VOL_COLUMNS, SweepSpec, load_sweep_spec, run_grid, run_scenario, run_sweep, run_volatility_curve,
)
from ticksim.metrics import SUMMARY_COLUMNS, market_share_at

BASE = dict(n=40, tau_max=300, t_c=400, t_ab=500, total_steps=5000)


def base(**kw):
    return ScenarioConfig(**{**BASE, **kw})


def spec(**kw):
    kw.setdefault("seeds", (0, 1))
    kw.setdefault("measure_day", 40)
    return SweepSpec(base=base(), **kw)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_scenario_writes_everything(tmp_path):
    out = run_scenario(base(dp_a=0.002, dp_b=0.0005, seed=1), tmp_path)
    for name in ("prices.csv", "trades_A.csv", "trades_B.csv", "share.csv", "summary.csv",
                 "config.yaml", "population.csv", "share_evolution.svg"):
        assert (tmp_path / name).stat().st_size > 0
    assert len(read_csv(tmp_path / "prices.csv")) == 5001
    assert read_csv(tmp_path / "summary.csv")[0] == list(SUMMARY_COLUMNS)
    assert len(read_csv(tmp_path / "share.csv")) == 1 + len(out.share)
    ta, tb = (len(read_csv(tmp_path / f"trades_{m}.csv")) - 1 for m in "AB")
    assert ta + tb == len(out.trades)


def test_cli_run(tmp_path, capsys):
    save_config(tmp_path / "c.yaml", base(seed=2))
    assert main(["run", "--config", str(tmp_path / "c.yaml"), "--seed", "5", "--out", str(tmp_path / "o")]) == 0
    assert "seed=5" in capsys.readouterr().out
    assert yaml.safe_load((tmp_path / "o" / "config.yaml").read_text())["seed"] == 5


def test_cli_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_bad_config(tmp_path, capsys):
    (tmp_path / "c.yaml").write_text("n: 10\ndp_a: 0.00001234\n")
    assert main(["run", "--config", str(tmp_path / "c.yaml"), "--out", str(tmp_path / "o")]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ticksim", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "volcurve" in res.stdout


def test_one_cell_sweep_matches_run_scenario(tmp_path):
    s = spec(dp_a=(0.002,), dp_b=(0.0005,), seeds=(3,))
    report = run_sweep(s, tmp_path / "sweep")
    out = run_scenario(base(dp_a=0.002, dp_b=0.0005, seed=3), tmp_path / "one")
    assert report.cells[0].w_a == [market_share_at(40, out.share)]
    rows = read_csv(tmp_path / "sweep" / "grid.csv")
    assert rows[0][:3] == ["dP_A", "dP_B", "W_A_500d_mean"] and len(rows) == 2
    assert (tmp_path / "sweep" / "grid_heatmap.svg").exists()


def test_sweep_independent_of_jobs_and_order():
    s = spec(dp_a=(0.0005, 0.005), dp_b=(0.0005, 0.002))
    serial = run_grid(s, jobs=1)
    parallel = run_grid(s, jobs=2)
    flipped = run_grid(spec(dp_a=(0.005, 0.0005), dp_b=(0.002, 0.0005)), jobs=1)
    key = lambda r: {(c.dp_a, c.dp_b): c.w_a for c in r.cells}
    assert key(serial) == key(parallel) == key(flipped)
    assert serial.sigma_bar == parallel.sigma_bar


def test_borderline_flags_recomputed():
    report = run_grid(spec(dp_a=(0.0005, 0.005), dp_b=(0.0005, 0.002)))
    for c in report.cells:
        assert report.a_not_coarser(c) == (c.dp_a <= c.dp_b)
        assert report.a_below_vol(c) == (c.dp_a < report.sigma_bar)
    for r in report.rows():
        assert r["a_not_coarser"] == (r["dP_A"] <= r["dP_B"])


def test_single_point_volcurve(tmp_path):
    sigma_bar, points = run_volatility_curve(spec(volcurve_dp_a=(0.002,)), tmp_path)
    assert len(points) == 1 and sigma_bar > 0
    rows = read_csv(tmp_path / "vol_curve.csv")
    assert rows[0] == list(VOL_COLUMNS) and len(rows) == 2
    assert (tmp_path / "vol_curve.svg").exists()


def test_sweep_spec_file(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump({"base": {"n": 40, "seed": 7}, "dp_a": [0.001], "dp_b": [0.01],
                                    "seeds_per_cell": 2, "volcurve": {"dp_b": 0.0002}}))
    s = load_sweep_spec(path)
    assert s.seeds == (7, 8) and s.base.n == 40 and s.volcurve_dp_b == 0.0002
    path.write_text("dp_a: [0.001]\ncolour: red\n")
    with pytest.raises(ConfigError):
        load_sweep_spec(path)
    path.write_text("dp_a: [0.00001234]\n")
    with pytest.raises(ConfigError):
        load_sweep_spec(path)


def test_repo_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "configs"
    from ticksim.engine import load_config
    cfg = load_config(root / "baseline.yaml")
    assert (cfg.n, cfg.t_ab, cfg.ticks_per_day, cfg.dp_a, cfg.dp_b) == (1000, 10000, 2000, 0.1, 0.01)
    assert load_sweep_spec(root / "sweep.yaml").seeds == (0, 1, 2)


def test_failed_run_reported_per_cell(monkeypatch):
    from ticksim.experiments import sweep

    real = sweep.simulate_one

    def flaky(config, measure_day=500):
        if config.dp_a == 0.005:
            raise RuntimeError("boom")
        return real(config, measure_day)

    monkeypatch.setattr(sweep, "simulate_one", flaky)
    report = run_grid(spec(dp_a=(0.0005, 0.005), dp_b=(0.0005,)))
    bad = [c for c in report.cells if c.errors]
    assert [c.dp_a for c in bad] == [0.005] and "boom" in bad[0].errors[0]
    assert all(not c.errors for c in report.cells if c.dp_a == 0.0005)
