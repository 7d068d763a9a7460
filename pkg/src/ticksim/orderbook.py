"""Continuous double auction for one market on an integer tick grid.

Prices are integers in quanta of 1e-7 of the fundamental value, so every
tick size from 0.0001% to 0.1% of P_f is an exact integer (10 .. 10000).

The book state lives in a :class:`BookArrays` tuple so the same kernels run
under numba and in plain Python. Each side is an indexed binary heap keyed by
(price priority, arrival sequence); an arrival-ordered ring drives expiry.
"""
import csv
import math
from collections import namedtuple
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from ._jit import jit

QUANTA_PER_PF = 10_000_000

BUY = 0
SELL = 1
NONE = -1

MARKET_A = 0
MARKET_B = 1
MARKET_NAMES = ("A", "B")
SIDE_NAMES = ("buy", "sell")

# meta slots
M_NBID = 0
M_NASK = 1
M_NFREE = 2
M_RHEAD = 3
M_RCOUNT = 4
M_LAST = 5
M_SEQ = 6
M_SUB_BUY = 7
M_SUB_SELL = 8
M_FILL_BUY = 9
M_FILL_SELL = 10
M_CXL_BUY = 11
M_CXL_SELL = 12
M_NTRADE = 13
M_TICK = 14
M_TC = 15
META_LEN = 16

BookArrays = namedtuple(
    "BookArrays",
    [
        "key", "seq", "price", "agent", "side", "time", "hpos",
        "heap", "free", "ring_slot", "ring_seq", "ring_time", "meta",
    ],
)


def pct_to_quanta(pct):
    """Tick size given as percent of P_f -> integer quanta; raises if inexact."""
    q = Decimal(str(pct)) * QUANTA_PER_PF / 100
    if q <= 0 or q != q.to_integral_value():
        raise ValueError(f"tick {pct}% of P_f is not a positive whole number of quanta")
    return int(q)


def new_book_arrays(tick, t_c, capacity=None):
    if tick <= 0:
        raise ValueError("tick must be positive")
    cap = int(capacity if capacity is not None else t_c + 1)
    meta = np.zeros(META_LEN, dtype=np.int64)
    meta[M_NFREE] = cap
    meta[M_TICK] = tick
    meta[M_TC] = t_c
    return BookArrays(
        key=np.zeros(cap, np.int64),
        seq=np.full(cap, -1, np.int64),
        price=np.zeros(cap, np.int64),
        agent=np.zeros(cap, np.int64),
        side=np.zeros(cap, np.int64),
        time=np.zeros(cap, np.int64),
        hpos=np.full(cap, -1, np.int64),
        heap=np.zeros((2, cap), np.int64),
        # popped from the end, so slot 0 is handed out first
        free=np.arange(cap - 1, -1, -1, dtype=np.int64),
        ring_slot=np.zeros(cap, np.int64),
        ring_seq=np.zeros(cap, np.int64),
        ring_time=np.zeros(cap, np.int64),
        meta=meta,
    )


# ---------------------------------------------------------------- kernels


@jit(inline=True)
def round_to_tick(raw_price, side, tick):
    """Buys floor to the grid, sells ceil; 0 means the order is unusable."""
    if side == BUY:
        q = math.floor(raw_price / tick) * tick
    else:
        q = math.ceil(raw_price / tick) * tick
    if q <= 0:
        return 0
    return np.int64(q)


@jit(inline=True)
def _before(key, seq, i, j):
    return key[i] < key[j] or (key[i] == key[j] and seq[i] < seq[j])


@jit(inline=True)
def _sift_up(h, hpos, key, seq, pos):
    slot = h[pos]
    while pos > 0:
        parent = (pos - 1) >> 1
        other = h[parent]
        if _before(key, seq, slot, other):
            h[pos] = other
            hpos[other] = pos
            pos = parent
        else:
            break
    h[pos] = slot
    hpos[slot] = pos


@jit(inline=True)
def _sift_down(h, n, hpos, key, seq, pos):
    slot = h[pos]
    while True:
        child = 2 * pos + 1
        if child >= n:
            break
        if child + 1 < n and _before(key, seq, h[child + 1], h[child]):
            child += 1
        other = h[child]
        if _before(key, seq, other, slot):
            h[pos] = other
            hpos[other] = pos
            pos = child
        else:
            break
    h[pos] = slot
    hpos[slot] = pos


@jit(inline=True)
def _heap_remove(heap, hpos, key, seq, free, meta, s, slot):
    h = heap[s]
    pos = hpos[slot]
    n = meta[s] - 1
    meta[s] = n
    last = h[n]
    hpos[slot] = -1
    if last != slot:
        h[pos] = last
        hpos[last] = pos
        _sift_up(h, hpos, key, seq, pos)
        _sift_down(h, n, hpos, key, seq, hpos[last])
    free[meta[M_NFREE]] = slot
    meta[M_NFREE] += 1


@jit(inline=True)
def best_price(b, side):
    """Best resting price on ``side`` (BUY -> best bid), 0 if that side is empty."""
    if b.meta[side] == 0:
        return np.int64(0)
    return b.price[b.heap[side, 0]]


@jit(inline=True)
def purge_expired(b, now):
    """Cancel every resting order whose age reaches t_c.

    Age counts the submission tick itself, so an order placed at t is gone at
    the start of tick t + t_c - 1.
    """
    tc = b.meta[M_TC]
    cap = b.ring_slot.shape[0]
    removed = 0
    while b.meta[M_RCOUNT] > 0:
        h = b.meta[M_RHEAD]
        if now - b.ring_time[h] + 1 < tc:
            break
        slot = b.ring_slot[h]
        if b.hpos[slot] >= 0 and b.seq[slot] == b.ring_seq[h]:
            s = b.side[slot]
            _heap_remove(b.heap, b.hpos, b.key, b.seq, b.free, b.meta, s, slot)
            b.meta[M_CXL_BUY + s] += 1
            removed += 1
        b.meta[M_RHEAD] = (h + 1) % cap
        b.meta[M_RCOUNT] -= 1
    return removed


@jit(inline=True)
def submit(b, side, price, agent, now):
    """Match a one-share order or rest it.

    Returns (filled, trade_price, counterparty_agent). A fill always takes the
    single best opposite order at that order's own limit price.
    """
    opp = 1 - side
    b.meta[M_SUB_BUY + side] += 1
    if b.meta[opp] > 0:
        top = b.heap[opp, 0]
        p = b.price[top]
        if (side == BUY and p <= price) or (side == SELL and p >= price):
            counter = b.agent[top]
            _heap_remove(b.heap, b.hpos, b.key, b.seq, b.free, b.meta, opp, top)
            b.meta[M_FILL_BUY] += 1
            b.meta[M_FILL_SELL] += 1
            b.meta[M_LAST] = p
            b.meta[M_NTRADE] += 1
            return True, p, counter
    nf = b.meta[M_NFREE] - 1
    slot = b.free[nf]
    b.meta[M_NFREE] = nf
    seq = b.meta[M_SEQ]
    b.meta[M_SEQ] = seq + 1
    b.seq[slot] = seq
    b.price[slot] = price
    b.key[slot] = price if side == SELL else -price
    b.agent[slot] = agent
    b.side[slot] = side
    b.time[slot] = now
    n = b.meta[side]
    b.meta[side] = n + 1
    b.heap[side, n] = slot
    _sift_up(b.heap[side], b.hpos, b.key, b.seq, n)
    cap = b.ring_slot.shape[0]
    r = (b.meta[M_RHEAD] + b.meta[M_RCOUNT]) % cap
    b.ring_slot[r] = slot
    b.ring_seq[r] = seq
    b.ring_time[r] = now
    b.meta[M_RCOUNT] += 1
    return False, np.int64(0), np.int64(-1)


# ---------------------------------------------------------- python surface


@dataclass(frozen=True)
class Order:
    id: int
    agent_id: int
    side: int
    price: int
    submitted_at: int
    market: int = MARKET_A
    quantity: int = 1


@dataclass(frozen=True)
class Trade:
    t: int
    market: int
    price: int
    aggressor: int
    buy_agent: int
    sell_agent: int


@dataclass(frozen=True)
class ExecutionReport:
    filled: bool
    price: int = 0
    counterparty: int = -1


@dataclass
class LimitOrderBook:
    """One market's book. Thin wrapper over the kernel arrays."""

    tick: int
    t_c: int
    market: int = MARKET_A
    capacity: int = 1024
    trade_log: list = field(default_factory=list)

    def __post_init__(self):
        self.arrays = new_book_arrays(self.tick, self.t_c, self.capacity)
        self._last_t = None

    @property
    def meta(self):
        return self.arrays.meta

    def best_bid(self):
        p = best_price(self.arrays, BUY)
        return int(p) if p else None

    def best_ask(self):
        p = best_price(self.arrays, SELL)
        return int(p) if p else None

    @property
    def last_trade_price(self):
        p = int(self.meta[M_LAST])
        return p or None

    def __len__(self):
        return int(self.meta[M_NBID] + self.meta[M_NASK])

    def resting(self, side):
        """Resting orders on one side as (price, agent, submitted_at), best first."""
        b = self.arrays
        n = int(b.meta[side])
        slots = b.heap[side, :n]
        order = np.lexsort((b.seq[slots], b.key[slots]))
        return [(int(b.price[s]), int(b.agent[s]), int(b.time[s])) for s in slots[order]]

    def purge_expired(self, now):
        return int(purge_expired(self.arrays, now))

    def submit(self, order, now=None):
        now = order.submitted_at if now is None else now
        if order.quantity != 1:
            raise ValueError("only one-share orders are supported")
        if order.price <= 0 or order.price % self.tick:
            raise ValueError(f"price {order.price} is not on the {self.tick}-quanta grid")
        if self._last_t is not None and now < self._last_t:
            raise ValueError("submission times must be non-decreasing")
        self._last_t = now
        if self.meta[M_NFREE] == 0 or self.meta[M_RCOUNT] == len(self.arrays.ring_slot):
            self._grow()
        filled, price, counter = submit(
            self.arrays, order.side, order.price, order.agent_id, now
        )
        if not filled:
            return ExecutionReport(False)
        if order.side == BUY:
            buyer, seller = order.agent_id, int(counter)
        else:
            buyer, seller = int(counter), order.agent_id
        self.trade_log.append(Trade(now, self.market, int(price), order.side, buyer, seller))
        return ExecutionReport(True, int(price), int(counter))

    def counters(self):
        m = self.meta
        return {
            "submitted": int(m[M_SUB_BUY] + m[M_SUB_SELL]),
            "filled": int(m[M_FILL_BUY] + m[M_FILL_SELL]),
            "expired": int(m[M_CXL_BUY] + m[M_CXL_SELL]),
            "resting": len(self),
            "submitted_buy": int(m[M_SUB_BUY]),
            "submitted_sell": int(m[M_SUB_SELL]),
            "filled_buy": int(m[M_FILL_BUY]),
            "filled_sell": int(m[M_FILL_SELL]),
            "expired_buy": int(m[M_CXL_BUY]),
            "expired_sell": int(m[M_CXL_SELL]),
            "resting_buy": int(m[M_NBID]),
            "resting_sell": int(m[M_NASK]),
        }

    def _grow(self):
        old = self.arrays
        cap = len(old.key)
        new = new_book_arrays(self.tick, self.t_c, 2 * cap)
        for name in ("key", "seq", "price", "agent", "side", "time", "hpos"):
            getattr(new, name)[:cap] = getattr(old, name)
        new.heap[:, :cap] = old.heap
        nfree = int(old.meta[M_NFREE])
        new.free[:nfree] = old.free[:nfree]
        extra = np.arange(2 * cap - 1, cap - 1, -1, dtype=np.int64)
        new.free[nfree:nfree + cap] = extra
        head, count = int(old.meta[M_RHEAD]), int(old.meta[M_RCOUNT])
        idx = (head + np.arange(count)) % cap
        new.ring_slot[:count] = old.ring_slot[idx]
        new.ring_seq[:count] = old.ring_seq[idx]
        new.ring_time[:count] = old.ring_time[idx]
        new.meta[:] = old.meta
        new.meta[M_NFREE] = nfree + cap
        new.meta[M_RHEAD] = 0
        self.arrays = new
        self.capacity = 2 * cap


TRADE_CSV_HEADER = ("t", "market", "price_quanta", "price", "aggressor_side", "buy_agent", "sell_agent")


def write_trade_csv(path, trades, p_f=10000.0):
    """``trades`` is an iterable of :class:`Trade` or a structured trade array."""
    scale = p_f / QUANTA_PER_PF
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRADE_CSV_HEADER)
        if isinstance(trades, np.ndarray):
            rows = zip(
                trades["t"].tolist(), trades["market"].tolist(), trades["price"].tolist(),
                trades["aggressor"].tolist(), trades["buy_agent"].tolist(),
                trades["sell_agent"].tolist(),
            )
        else:
            rows = ((x.t, x.market, x.price, x.aggressor, x.buy_agent, x.sell_agent) for x in trades)
        for t, m, q, agg, buyer, seller in rows:
            w.writerow((t, MARKET_NAMES[m], q, repr(q * scale), SIDE_NAMES[agg], buyer, seller))
