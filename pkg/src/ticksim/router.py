"""Venue selection between markets A and B.

An order goes to the market with the better opposite best price when those
prices differ and the order would execute immediately in at least one market.
Otherwise it goes to A with probability W_A = T_A / (T_A + T_B), the share of
trades over the trailing ``t_ab`` steps.
"""
import csv
from collections import namedtuple

import numpy as np

from ._jit import jit
from .orderbook import BUY, MARKET_A, MARKET_B, SELL

PROBABILISTIC = -1

WindowArrays = namedtuple("WindowArrays", ["ring", "state", "share"])

# state slots
W_SUM_A = 0
W_SUM_B = 1
W_NOW = 2


def new_window_arrays(t_ab, initial_share):
    if t_ab < 1:
        raise ValueError("t_ab must be at least 1")
    if not 0.0 <= initial_share <= 1.0:
        raise ValueError("initial share must lie in [0, 1]")
    state = np.zeros(3, np.int64)
    state[W_NOW] = -1
    return WindowArrays(
        ring=np.zeros((2, int(t_ab)), np.int64),
        state=state,
        share=np.array([initial_share], np.float64),
    )


@jit(inline=True)
def window_advance(w, t):
    """Drop counts recorded at steps <= t - t_ab."""
    now = w.state[W_NOW]
    if t <= now:
        return
    tab = w.ring.shape[1]
    if t - now >= tab:
        w.ring[:, :] = 0
        w.state[W_SUM_A] = 0
        w.state[W_SUM_B] = 0
    else:
        for s in range(now + 1, t + 1):
            slot = s % tab
            w.state[W_SUM_A] -= w.ring[0, slot]
            w.state[W_SUM_B] -= w.ring[1, slot]
            w.ring[0, slot] = 0
            w.ring[1, slot] = 0
    w.state[W_NOW] = t


@jit(inline=True)
def window_record(w, market, t):
    window_advance(w, t)
    w.ring[market, t % w.ring.shape[1]] += 1
    w.state[market] += 1


@jit(inline=True)
def window_share(w):
    total = w.state[W_SUM_A] + w.state[W_SUM_B]
    if total > 0:
        w.share[0] = w.state[W_SUM_A] / total
    return w.share[0]


@jit(inline=True)
def route_by_price(side, price_a, price_b, best_a, best_b):
    """Price-based choice, or PROBABILISTIC when the share rule applies.

    ``price_*`` are the order's tick-rounded prices in each market and
    ``best_*`` the opposite-side best prices (0 = side empty, which ranks
    worse than any price).
    """
    if side == BUY:
        mk_a = best_a > 0 and price_a >= best_a
        mk_b = best_b > 0 and price_b >= best_b
    else:
        mk_a = best_a > 0 and price_a <= best_a
        mk_b = best_b > 0 and price_b <= best_b
    if best_a == best_b or not (mk_a or mk_b):
        return PROBABILISTIC
    if best_a == 0:
        return MARKET_B
    if best_b == 0:
        return MARKET_A
    if side == BUY:
        return MARKET_A if best_a < best_b else MARKET_B
    return MARKET_A if best_a > best_b else MARKET_B


class VolumeWindow:
    """Trailing per-market trade counts over ``t_ab`` steps."""

    def __init__(self, t_ab, initial_share=0.9):
        self.t_ab = int(t_ab)
        self.arrays = new_window_arrays(self.t_ab, initial_share)

    def advance(self, t):
        window_advance(self.arrays, t)

    def counts(self, now=None):
        if now is not None:
            self.advance(now)
        s = self.arrays.state
        return int(s[W_SUM_A]), int(s[W_SUM_B])

    @property
    def last_known_share(self):
        return float(self.arrays.share[0])


def record_trade(window, market, t):
    if t < window.arrays.state[W_NOW]:
        raise ValueError("trade times must be non-decreasing")
    window_record(window.arrays, market, t)


def share_A(window, now=None):
    """W_A over the window; falls back to the last known value when empty."""
    if now is not None:
        window.advance(now)
    return float(window_share(window.arrays))


def select_market(side, prices, best_prices, window, rng):
    """Pick MARKET_A or MARKET_B for an order.

    ``prices`` = (rounded price in A, rounded price in B);
    ``best_prices`` = (best opposite price in A, in B), None when empty.
    Draws one ``rng.random()`` only when the share rule applies.
    """
    if side not in (BUY, SELL):
        raise ValueError("side must be BUY or SELL")
    best_a, best_b = (0 if b is None else b for b in best_prices)
    m = route_by_price(side, prices[0], prices[1], best_a, best_b)
    if m != PROBABILISTIC:
        return int(m)
    return MARKET_A if rng.random() < share_A(window) else MARKET_B


def write_share_csv(path, share):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("day", "W_A"))
        for day, v in enumerate(np.asarray(share).tolist(), start=1):
            w.writerow((day, repr(v)))
