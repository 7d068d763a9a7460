"""Round-robin scheduler over two order books.

Each step ``t``:

1. expire orders with age >= t_c in both books (age counts the
   submission tick), evict stale window counts;
2. agent ``((t - 1) mod n) + 1`` forms its order against the consolidated price;
3. the router picks A or B, the order is rounded to that market's grid and
   submitted;
4. a trade updates the consolidated and per-market last prices and the
   volume window;
5. the consolidated price (carried forward when nothing traded) is stored.

Randomness: ``SeedSequence(seed).spawn(3)`` yields three PCG64 streams, used
for the population, the standard normals (noise term, then order price, per
turn) and the routing uniforms (one per share-rule decision) respectively.
"""
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._jit import jit
from .agents import combine_expectation, decide_side, historical_return, init_population, population_arrays
from .orderbook import (
    M_CXL_BUY, M_CXL_SELL, M_FILL_BUY, M_FILL_SELL, M_NASK, M_NBID, M_SUB_BUY, M_SUB_SELL,
    M_TICK, MARKET_A, MARKET_B, NONE, QUANTA_PER_PF, best_price, new_book_arrays,
    pct_to_quanta, purge_expired, round_to_tick, submit,
)
from .router import PROBABILISTIC, new_window_arrays, route_by_price, window_advance, window_record, window_share

BLOCK = 1 << 16

TRADE_DTYPE = np.dtype([
    ("t", np.int64), ("market", np.int8), ("price", np.int64),
    ("aggressor", np.int8), ("buy_agent", np.int32), ("sell_agent", np.int32),
])

# stats slots
S_SKIP_WEIGHTS = 0
S_SKIP_PRICE = 1
S_SKIP_SIDE = 2
S_DISCARD_ROUNDING = 3
S_ROUTE_PRICE = 4
S_ROUTE_SHARE = 5
STAT_NAMES = ("skip_zero_weights", "skip_nonpositive_price", "skip_no_side",
              "discard_rounding", "routed_by_price", "routed_by_share")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    n: int = 1000
    w1_max: float = 1.0
    w2_max: float = 10.0
    w3_max: float = 1.0
    tau_max: int = 10000
    sigma_eps: float = 0.06
    p_sigma: float = 30.0
    t_c: int = 20000
    p_f: float = 10000.0
    t_ab: int = 10000
    dp_a: float = 0.01  # percent of p_f
    dp_b: float = 0.01
    initial_w_a: float = 0.9
    total_steps: int = 1_000_000
    ticks_per_day: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.ticks_per_day is None:
            self.ticks_per_day = max(self.t_ab // 5, 1)
        self.validate()

    def validate(self):
        for name in ("n", "w1_max", "w2_max", "w3_max", "tau_max", "sigma_eps",
                     "p_sigma", "t_c", "p_f", "t_ab", "ticks_per_day"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("n", "tau_max", "t_c", "t_ab", "ticks_per_day", "total_steps", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.total_steps < 0 or self.seed < 0:
            raise ConfigError("total_steps and seed must be non-negative")
        if not 0.0 < self.initial_w_a <= 1.0:
            raise ConfigError("initial_w_a must lie in (0, 1]")
        try:
            self.tick_a
            self.tick_b
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def tick_a(self):
        return pct_to_quanta(self.dp_a)

    @property
    def tick_b(self):
        return pct_to_quanta(self.dp_b)

    @property
    def n_days(self):
        return self.total_steps // self.ticks_per_day

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


def load_config(path, **overrides):
    """Read a YAML mapping whose keys are ScenarioConfig field names."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig.from_dict(data)


@dataclass
class SimulationOutput:
    config: ScenarioConfig
    prices: np.ndarray  # consolidated price (quanta) after steps 1..T
    prices_a: np.ndarray  # last trade price in A, carried forward
    prices_b: np.ndarray
    trades: np.ndarray  # TRADE_DTYPE, both markets in time order
    share: np.ndarray  # router W_A at the end of each day
    daily_volume: np.ndarray  # (2, days) trades per market per day
    counters: dict
    stats: dict = field(default_factory=dict)

    @property
    def origin(self):
        return QUANTA_PER_PF

    def trades_in(self, market):
        return self.trades[self.trades["market"] == market]

    def to_price_units(self, quanta):
        return np.asarray(quanta) * (self.config.p_f / QUANTA_PER_PF)


# ---------------------------------------------------------------- kernel


@jit
def run_block(t0, t1, w1, w2, w3, tau, sigma_eps, p_sigma, p_f, t_c, ticks_per_day,
              hist, hist_a, hist_b, book_a, book_b, win, normals, nc, uniforms, uc,
              trades_t, trades_m, trades_p, trades_agg, trades_buy, trades_sell,
              share_daily, vol_daily, stats):
    n = w1.shape[0]
    tick_a = book_a.meta[M_TICK]
    tick_b = book_b.meta[M_TICK]
    k = 0
    for t in range(t0, t1):
        purge_expired(book_a, t)
        purge_expired(book_b, t)
        window_advance(win, t)
        last = hist[t - 1]
        last_a = hist_a[t - 1]
        last_b = hist_b[t - 1]
        j = (t - 1) % n
        if w1[j] + w2[j] + w3[j] > 0.0:
            p_t = float(last)
            r_h = historical_return(hist, t, tau[j])
            eps = sigma_eps * normals[nc]
            nc += 1
            p_e = p_t * math.exp(combine_expectation(w1[j], w2[j], w3[j], p_f, p_t, r_h, eps))
            p_o = p_e + p_sigma * normals[nc]
            nc += 1
            if p_o > 0.0:
                side = decide_side(p_e, p_o, t, t_c, p_f)
                if side != NONE:
                    q_a = round_to_tick(p_o, side, tick_a)
                    q_b = round_to_tick(p_o, side, tick_b)
                    opp = 1 - side
                    m = route_by_price(side, q_a, q_b, best_price(book_a, opp), best_price(book_b, opp))
                    if m == PROBABILISTIC:
                        stats[S_ROUTE_SHARE] += 1
                        m = MARKET_A if uniforms[uc] < window_share(win) else MARKET_B
                        uc += 1
                    else:
                        stats[S_ROUTE_PRICE] += 1
                    q = q_a if m == MARKET_A else q_b
                    if q > 0:
                        book = book_a if m == MARKET_A else book_b
                        filled, price, counter = submit(book, side, q, j + 1, t)
                        if filled:
                            trades_t[k] = t
                            trades_m[k] = m
                            trades_p[k] = price
                            trades_agg[k] = side
                            if side == 0:
                                trades_buy[k] = j + 1
                                trades_sell[k] = counter
                            else:
                                trades_buy[k] = counter
                                trades_sell[k] = j + 1
                            k += 1
                            window_record(win, m, t)
                            vol_daily[m, (t - 1) // ticks_per_day] += 1
                            last = price
                            if m == MARKET_A:
                                last_a = price
                            else:
                                last_b = price
                    else:
                        stats[S_DISCARD_ROUNDING] += 1
                else:
                    stats[S_SKIP_SIDE] += 1
            else:
                stats[S_SKIP_PRICE] += 1
        else:
            stats[S_SKIP_WEIGHTS] += 1
        hist[t] = last
        hist_a[t] = last_a
        hist_b[t] = last_b
        if t % ticks_per_day == 0:
            share_daily[t // ticks_per_day - 1] = window_share(win)
    return k, nc, uc


# ---------------------------------------------------------- python driver


class Simulation:
    """One independent run. Not thread-safe; run separate instances in parallel."""

    def __init__(self, config):
        config.validate()
        self.config = c = config
        pop_ss, normal_ss, uniform_ss = np.random.SeedSequence(c.seed).spawn(3)
        self.profiles = init_population(
            c.n, c.w1_max, c.w2_max, c.w3_max, c.tau_max, np.random.Generator(np.random.PCG64(pop_ss))
        )
        self.w1, self.w2, self.w3, self.tau = population_arrays(self.profiles)
        self._normal_rng = np.random.Generator(np.random.PCG64(normal_ss))
        self._uniform_rng = np.random.Generator(np.random.PCG64(uniform_ss))
        self._normals = np.empty(0)
        self._uniforms = np.empty(0)

        T = c.total_steps
        self.hist = np.empty(T + 1, np.int64)
        self.hist_a = np.empty(T + 1, np.int64)
        self.hist_b = np.empty(T + 1, np.int64)
        self.hist[0] = self.hist_a[0] = self.hist_b[0] = QUANTA_PER_PF
        self.books = (new_book_arrays(c.tick_a, c.t_c), new_book_arrays(c.tick_b, c.t_c))
        self.window = new_window_arrays(c.t_ab, c.initial_w_a)
        self.share = np.full(c.n_days, np.nan)
        self.daily_volume = np.zeros((2, -(-T // c.ticks_per_day)), np.int64)
        self.stats = np.zeros(len(STAT_NAMES), np.int64)
        self._trade_chunks = []
        self.t = 0

        self._p_sigma = c.p_sigma / c.p_f * QUANTA_PER_PF

    def _refill(self, nticks):
        # worst case per step: two normals and one uniform
        need = 2 * nticks - len(self._normals)
        if need > 0:
            self._normals = np.concatenate([self._normals, self._normal_rng.standard_normal(need)])
        need = nticks - len(self._uniforms)
        if need > 0:
            self._uniforms = np.concatenate([self._uniforms, self._uniform_rng.random(need)])

    def advance(self, nticks):
        """Run steps t+1 .. t+nticks (clipped at total_steps)."""
        c = self.config
        nticks = min(int(nticks), c.total_steps - self.t)
        if nticks <= 0:
            return 0
        self._refill(nticks)
        cols = [np.empty(nticks, np.int64) for _ in range(6)]
        k, nc, uc = run_block(
            self.t + 1, self.t + nticks + 1, self.w1, self.w2, self.w3, self.tau,
            float(c.sigma_eps), float(self._p_sigma), float(QUANTA_PER_PF), int(c.t_c),
            int(c.ticks_per_day), self.hist, self.hist_a, self.hist_b, self.books[0], self.books[1],
            self.window, self._normals, 0, self._uniforms, 0, *cols,
            self.share, self.daily_volume, self.stats,
        )
        self._normals = self._normals[nc:]
        self._uniforms = self._uniforms[uc:]
        if k:
            chunk = np.empty(k, TRADE_DTYPE)
            for name, col in zip(TRADE_DTYPE.names, cols):
                chunk[name] = col[:k]
            self._trade_chunks.append(chunk)
        self.t += nticks
        return k

    def step(self):
        """Run exactly one step."""
        if self.t >= self.config.total_steps:
            raise RuntimeError("simulation already reached total_steps")
        return self.advance(1)

    def run(self, progress=None):
        while self.t < self.config.total_steps:
            self.advance(BLOCK)
            if progress is not None:
                progress(self.t)
        return self.output()

    @property
    def consolidated_price(self):
        return int(self.hist[self.t])

    def counters(self, market):
        m = self.books[market].meta
        return {
            "submitted": int(m[M_SUB_BUY] + m[M_SUB_SELL]),
            "filled": int(m[M_FILL_BUY] + m[M_FILL_SELL]),
            "expired": int(m[M_CXL_BUY] + m[M_CXL_SELL]),
            "resting": int(m[M_NBID] + m[M_NASK]),
            "submitted_buy": int(m[M_SUB_BUY]),
            "submitted_sell": int(m[M_SUB_SELL]),
            "filled_buy": int(m[M_FILL_BUY]),
            "filled_sell": int(m[M_FILL_SELL]),
            "expired_buy": int(m[M_CXL_BUY]),
            "expired_sell": int(m[M_CXL_SELL]),
            "resting_buy": int(m[M_NBID]),
            "resting_sell": int(m[M_NASK]),
        }

    def output(self):
        t = self.t
        trades = np.concatenate(self._trade_chunks) if self._trade_chunks else np.empty(0, TRADE_DTYPE)
        return SimulationOutput(
            config=self.config,
            prices=self.hist[1:t + 1].copy(),
            prices_a=self.hist_a[1:t + 1].copy(),
            prices_b=self.hist_b[1:t + 1].copy(),
            trades=trades,
            share=self.share[: t // self.config.ticks_per_day].copy(),
            daily_volume=self.daily_volume[:, : -(-t // self.config.ticks_per_day)].copy(),
            counters={"A": self.counters(MARKET_A), "B": self.counters(MARKET_B)},
            stats=dict(zip(STAT_NAMES, self.stats.tolist())),
        )


def run(config, progress=None):
    return Simulation(config).run(progress)


def write_prices_csv(path, output):
    scale = output.config.p_f / QUANTA_PER_PF
    t = np.arange(1, len(output.prices) + 1)
    table = np.column_stack([t, output.prices, output.prices_a, output.prices_b])
    with open(path, "w") as fh:
        fh.write("t,price_quanta,price,price_A_quanta,price_B_quanta\n")
        for (ti, q, qa, qb) in table.tolist():
            fh.write(f"{ti},{q},{q * scale!r},{qa},{qb}\n")


def save_config(path, config):
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))
