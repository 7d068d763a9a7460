"""Observables computed from finished runs."""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .orderbook import MARKET_A, MARKET_B, QUANTA_PER_PF

SUMMARY_COLUMNS = ("dP_A", "dP_B", "seed", "W_A_500d", "sigma_t_pct",
                   "exec_rate", "cancel_rate", "kurtosis", "acf1")


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    source: str = "consolidated"

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("return series contains non-finite entries")

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_prices(cls, prices, source="consolidated", origin=None):
        """Per-step log returns; ``origin`` (the step-0 price) is prepended when given."""
        p = np.asarray(prices, dtype=np.float64)
        if origin is not None:
            p = np.concatenate([[float(origin)], p])
        if np.any(p <= 0):
            raise ValueError("prices must be positive")
        return cls(np.diff(np.log(p)), source)


def returns_of(output, source="A"):
    """Return series of a run: 'A', 'B' or 'consolidated'. Starts from P_f at step 0."""
    prices = {"A": output.prices_a, "B": output.prices_b, "consolidated": output.prices}[source]
    return ReturnSeries.from_prices(prices, source, origin=QUANTA_PER_PF)


def one_tick_volatility(series):
    """Sample standard deviation of per-step log returns, in percent."""
    v = series.values if isinstance(series, ReturnSeries) else np.asarray(series, float)
    if len(v) < 2:
        raise InsufficientDataError("need at least two returns")
    # numpy's var is two-pass (mean first, then pairwise-summed squared deviations)
    return 100.0 * math.sqrt(np.var(v, ddof=1))


def market_share_at(day, share):
    """W_A at the end of ``day`` (1-based) from a per-day share series."""
    if not 1 <= day <= len(share):
        raise IndexError(f"day {day} outside recorded range 1..{len(share)}")
    return float(share[day - 1])


def daily_share(daily_volume, initial_share):
    """One-day trailing share of A per day; a day without trades repeats the previous value."""
    vol = np.asarray(daily_volume)
    out = np.empty(vol.shape[1])
    prev = float(initial_share)
    for d in range(vol.shape[1]):
        total = vol[MARKET_A, d] + vol[MARKET_B, d]
        if total > 0:
            prev = vol[MARKET_A, d] / total
        out[d] = prev
    return out


def _total(counters):
    if "submitted" in counters:
        return counters
    keys = ("submitted", "filled", "expired", "resting")
    return {k: sum(c[k] for c in counters.values()) for k in keys}


def execution_and_cancel_rates(counters):
    """(filled / submitted, expired / submitted). Accepts one counter dict or a dict of them."""
    c = _total(counters)
    if c["submitted"] == 0:
        raise InsufficientDataError("no orders were submitted")
    return c["filled"] / c["submitted"], c["expired"] / c["submitted"]


def sample_returns(series, k):
    """Non-overlapping k-step returns (sums of consecutive per-step log returns)."""
    v = series.values if isinstance(series, ReturnSeries) else np.asarray(series, float)
    m = len(v) // k
    return v[: m * k].reshape(m, k).sum(axis=1)


def excess_kurtosis(x):
    x = np.asarray(x, float)
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 == 0:
        raise InsufficientDataError("zero variance; kurtosis undefined")
    return float(np.mean(d ** 4) / m2 ** 2 - 3.0)


def autocorrelation(x, lags):
    x = np.asarray(x, float)
    d = x - x.mean()
    den = np.dot(d, d)
    if den == 0:
        raise InsufficientDataError("zero variance; autocorrelation undefined")
    return np.array([np.dot(d[:-h], d[h:]) / den for h in range(1, lags + 1)])


def stylized_facts(series, k=100, lags=20, min_samples=10_000):
    """Excess kurtosis of k-step returns and ACF of their squares at lags 1..``lags``."""
    r = sample_returns(series, k)
    if len(r) < min_samples:
        raise InsufficientDataError(f"{len(r)} sampled returns, need {min_samples}")
    return excess_kurtosis(r), autocorrelation(r * r, lags)


def summarize(output, measure_day=500, k=100):
    c = output.config
    try:
        w_a = market_share_at(measure_day, output.share)
    except IndexError:
        w_a = math.nan
    try:
        sigma = one_tick_volatility(returns_of(output, "A"))
    except InsufficientDataError:
        sigma = math.nan
    try:
        exec_rate, cancel_rate = execution_and_cancel_rates(output.counters)
    except InsufficientDataError:
        exec_rate = cancel_rate = math.nan
    try:
        kurt, acf = stylized_facts(returns_of(output, "consolidated"), k=k, lags=1)
        acf1 = float(acf[0])
    except InsufficientDataError:
        kurt = acf1 = math.nan
    return {
        "dP_A": c.dp_a, "dP_B": c.dp_b, "seed": c.seed, "W_A_500d": w_a,
        "sigma_t_pct": sigma, "exec_rate": exec_rate, "cancel_rate": cancel_rate,
        "kurtosis": kurt, "acf1": acf1,
    }


def write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([repr(row[col]) if isinstance(row[col], float) else row[col]
                        for col in SUMMARY_COLUMNS])
