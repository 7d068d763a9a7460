"""Scenario runs, tick-size sweeps and their file outputs."""
import csv
from pathlib import Path

from .. import engine, metrics
from ..agents import write_population_csv
from ..orderbook import MARKET_A, MARKET_B, write_trade_csv
from ..router import write_share_csv
from . import plots
from .sweep import (
    BorderlineReport, CellResult, SweepSpec, VolPoint, load_sweep_spec, measure_sigma_bar,
    run_grid, run_many, run_volcurve,
)

__all__ = [
    "BorderlineReport", "CellResult", "SweepSpec", "VolPoint", "load_sweep_spec",
    "measure_sigma_bar", "run_grid", "run_many", "run_volcurve", "run_scenario",
    "run_sweep", "run_volatility_curve", "write_outputs",
]


def _outdir(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_outputs(output, out, profiles=None):
    out = _outdir(out)
    p_f = output.config.p_f
    engine.write_prices_csv(out / "prices.csv", output)
    write_trade_csv(out / "trades_A.csv", output.trades_in(MARKET_A), p_f)
    write_trade_csv(out / "trades_B.csv", output.trades_in(MARKET_B), p_f)
    write_share_csv(out / "share.csv", output.share)
    metrics.write_summary_csv(out / "summary.csv", [metrics.summarize(output)])
    engine.save_config(out / "config.yaml", output.config)
    if profiles is not None:
        write_population_csv(out / "population.csv", profiles)
    c = output.config
    plots.share_evolution(out / "share_evolution.svg", output.share,
                          f"dP_A={c.dp_a:g}%  dP_B={c.dp_b:g}%  seed={c.seed}", c.initial_w_a)
    return out


def run_scenario(config, out):
    """Run one simulation and write every CSV plus the share plot into ``out``."""
    out = _outdir(out)
    sim = engine.Simulation(config)
    output = sim.run()
    write_outputs(output, out, sim.profiles)
    return output


def _write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


def run_sweep(spec, out, jobs=1, cache=None):
    out = _outdir(out)
    report = run_grid(spec, jobs, cache)
    rows = list(report.rows())
    _write_rows(out / "grid.csv", rows, list(rows[0]))
    metrics.write_summary_csv(out / "summary.csv", [r for c in report.cells for r in c.rows])
    plots.grid_heatmap(out / "grid_heatmap.svg", report)
    return report


VOL_COLUMNS = ("dP_A", "dP_B", "sigma_t_pct", "sigma_t_dual_pct", "W_A_500d", "sigma_bar_pct")


def run_volatility_curve(spec, out, jobs=1, cache=None):
    out = _outdir(out)
    sigma_bar, points, rows = run_volcurve(spec, jobs, cache)
    _write_rows(out / "vol_curve.csv", [
        {"dP_A": p.dp_a, "dP_B": p.dp_b, "sigma_t_pct": p.sigma_t, "sigma_t_dual_pct": p.sigma_t_dual,
         "W_A_500d": p.w_a, "sigma_bar_pct": sigma_bar} for p in points
    ], VOL_COLUMNS)
    metrics.write_summary_csv(out / "summary.csv", rows)
    plots.vol_curve(out / "vol_curve.svg", sigma_bar, points)
    return sigma_bar, points
