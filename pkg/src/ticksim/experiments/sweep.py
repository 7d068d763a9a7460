"""Tick-size grid and volatility-curve sweeps.

Every simulation is fully determined by its ScenarioConfig (seed included),
so results do not depend on execution order or on the number of workers.
"""
import dataclasses
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .. import engine, metrics
from ..engine import ConfigError, ScenarioConfig

log = logging.getLogger(__name__)

DEFAULT_GRID = (0.0001, 0.0002, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1)
FINE_TICK = 0.0001


@dataclass
class SweepSpec:
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    dp_a: tuple = DEFAULT_GRID
    dp_b: tuple = DEFAULT_GRID
    seeds: tuple = (0, 1, 2)
    measure_day: int = 500
    reference_dp: float = FINE_TICK
    volcurve_dp_a: tuple = DEFAULT_GRID
    volcurve_dp_b: float = FINE_TICK

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("at least one seed per cell is required")
        for dp in (*self.dp_a, *self.dp_b, *self.volcurve_dp_a, self.volcurve_dp_b, self.reference_dp):
            self.base.replace(dp_a=dp)  # validates representability
        if self.measure_day < 1:
            raise ConfigError("measure_day must be positive")

    @property
    def cells(self):
        return [(a, b) for a in self.dp_a for b in self.dp_b]


_SPEC_KEYS = {"base", "dp_a", "dp_b", "seeds", "seeds_per_cell", "measure_day",
              "reference_dp", "volcurve"}


def load_sweep_spec(path):
    """YAML document: ``base`` (ScenarioConfig keys), grid lists, ``seeds`` or ``seeds_per_cell``."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    unknown = sorted(set(data) - _SPEC_KEYS)
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(unknown)}")
    base = ScenarioConfig.from_dict(data.get("base") or {})
    kw = {"base": base}
    for key in ("dp_a", "dp_b"):
        if key in data:
            kw[key] = tuple(data[key])
    if "seeds" in data and "seeds_per_cell" in data:
        raise ConfigError("give either seeds or seeds_per_cell, not both")
    if "seeds" in data:
        kw["seeds"] = tuple(int(s) for s in data["seeds"])
    elif "seeds_per_cell" in data:
        kw["seeds"] = tuple(base.seed + i for i in range(int(data["seeds_per_cell"])))
    for key in ("measure_day", "reference_dp"):
        if key in data:
            kw[key] = data[key]
    vc = data.get("volcurve") or {}
    bad = sorted(set(vc) - {"dp_a", "dp_b"})
    if bad:
        raise ConfigError(f"unknown volcurve keys: {', '.join(bad)}")
    if "dp_a" in vc:
        kw["volcurve_dp_a"] = tuple(vc["dp_a"])
    if "dp_b" in vc:
        kw["volcurve_dp_b"] = vc["dp_b"]
    return SweepSpec(**kw)


# ------------------------------------------------------------- execution


def _key(config):
    return tuple(sorted(dataclasses.asdict(config).items()))


def simulate_one(config, measure_day=500):
    """Run one config and reduce it to its summary row, the W_A series and
    the time-average of ln(P^t / P_f) of the consolidated price."""
    out = engine.run(config)
    row = metrics.summarize(out, measure_day=measure_day)
    log_dev = float(np.mean(np.log(out.prices / out.origin))) if len(out.prices) else math.nan
    return {"row": row, "share": out.share, "mean_log_dev": log_dev}


def _safe(args):
    config, measure_day = args
    try:
        return simulate_one(config, measure_day)
    except Exception:  # reported per cell, sweep continues
        return {"error": traceback.format_exc(limit=3)}


def run_many(configs, jobs=1, measure_day=500, cache=None):
    """Run configs (deduplicated, optionally memoised in ``cache``); results in input order."""
    cache = {} if cache is None else cache
    todo = []
    for c in configs:
        k = (_key(c), measure_day)
        if k not in cache and k not in {t[0] for t in todo}:
            todo.append((k, c))
    if todo:
        args = [(c, measure_day) for _, c in todo]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_safe, args))
        else:
            results = []
            for i, a in enumerate(args, 1):
                results.append(_safe(a))
                log.info("run %d/%d done", i, len(args))
        for (k, _), r in zip(todo, results):
            cache[k] = r
    return [cache[(_key(c), measure_day)] for c in configs]


@dataclass
class CellResult:
    dp_a: float
    dp_b: float
    w_a: list
    rows: list
    errors: list = field(default_factory=list)

    @property
    def w_a_mean(self):
        ok = [w for w in self.w_a if not math.isnan(w)]
        return float(np.mean(ok)) if ok else math.nan


@dataclass
class BorderlineReport:
    sigma_bar: float  # percent
    cells: list

    # the two borderlines: A's tick no coarser than B's, A's tick below sigma_bar
    @staticmethod
    def a_not_coarser(cell):
        return cell.dp_a <= cell.dp_b

    def a_below_vol(self, cell):
        return cell.dp_a < self.sigma_bar

    def expects_stable(self, cell):
        return self.a_not_coarser(cell) or self.a_below_vol(cell)

    def classified_correctly(self, cell, high=0.6, low=0.5):
        w = cell.w_a_mean
        return w >= high if self.expects_stable(cell) else w <= low

    def fraction_correct(self, high=0.6, low=0.5):
        cells = [c for c in self.cells if not math.isnan(c.w_a_mean)]
        if not cells:
            return math.nan
        return sum(self.classified_correctly(c, high, low) for c in cells) / len(cells)

    def rows(self):
        for c in self.cells:
            yield {
                "dP_A": c.dp_a, "dP_B": c.dp_b, "W_A_500d_mean": c.w_a_mean,
                "n_seeds": len(c.w_a) - len(c.errors), "a_not_coarser": self.a_not_coarser(c),
                "a_below_vol": self.a_below_vol(c),
                "sigma_bar_pct": self.sigma_bar, "errors": len(c.errors),
            }


def measure_sigma_bar(spec, jobs=1, cache=None):
    """Mean one-tick volatility (percent) of market A with fine ticks in both markets."""
    cfgs = [spec.base.replace(dp_a=spec.reference_dp, dp_b=spec.reference_dp, seed=s) for s in spec.seeds]
    res = run_many(cfgs, jobs, spec.measure_day, cache)
    vals = [r["row"]["sigma_t_pct"] for r in res if "row" in r]
    if not vals:
        raise RuntimeError("reference runs for sigma-bar all failed")
    return float(np.mean(vals))


def run_grid(spec, jobs=1, cache=None):
    cache = {} if cache is None else cache
    sigma_bar = measure_sigma_bar(spec, jobs, cache)
    cfgs = [spec.base.replace(dp_a=a, dp_b=b, seed=s) for a, b in spec.cells for s in spec.seeds]
    res = iter(run_many(cfgs, jobs, spec.measure_day, cache))
    cells = []
    for a, b in spec.cells:
        w, rows, errs = [], [], []
        for s in spec.seeds:
            r = next(res)
            if "error" in r:
                errs.append(r["error"])
                w.append(math.nan)
                log.error("cell dP_A=%s dP_B=%s seed=%s failed:\n%s", a, b, s, r["error"])
            else:
                w.append(r["row"]["W_A_500d"])
                rows.append(r["row"])
        cells.append(CellResult(a, b, w, rows, errs))
    return BorderlineReport(sigma_bar, cells)


@dataclass
class VolPoint:
    dp_a: float
    dp_b: float
    sigma_t: float  # market A trading alone at tick dp_a
    sigma_t_dual: float  # market A's series inside the two-market run
    w_a: float


def run_volcurve(spec, jobs=1, cache=None):
    cache = {} if cache is None else cache
    sigma_bar = measure_sigma_bar(spec, jobs, cache)
    points, rows = [], []
    for a in spec.volcurve_dp_a:
        dual = [spec.base.replace(dp_a=a, dp_b=spec.volcurve_dp_b, seed=s) for s in spec.seeds]
        alone = [spec.base.replace(dp_a=a, dp_b=a, initial_w_a=1.0, seed=s) for s in spec.seeds]
        rd = [r for r in run_many(dual, jobs, spec.measure_day, cache) if "row" in r]
        ra = [r for r in run_many(alone, jobs, spec.measure_day, cache) if "row" in r]
        rows.extend(r["row"] for r in rd)

        def mean(rs, col):
            return float(np.mean([r["row"][col] for r in rs])) if rs else math.nan

        points.append(VolPoint(a, spec.volcurve_dp_b, mean(ra, "sigma_t_pct"),
                               mean(rd, "sigma_t_pct"), mean(rd, "W_A_500d")))
    return sigma_bar, points, rows
