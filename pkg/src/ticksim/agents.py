"""Fundamental/technical/noise agents.

Price convention: ``hist[s]`` is the consolidated price after step ``s`` and
``hist[0] == P_f``. The agent acting at step ``t`` sees ``P^t = hist[t-1]``
and ``P^(t-tau) = hist[max(t-1-tau, 0)]``; the historical return is zero
while ``t < tau``.

Random draw order per agent turn: one standard normal for the noise term,
then one for the order price. A turn that is skipped stops consuming draws
at the point it is skipped.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .orderbook import BUY, NONE, SELL


@dataclass(frozen=True)
class AgentProfile:
    id: int
    w1: float
    w2: float
    w3: float
    tau: int


@dataclass(frozen=True)
class OrderIntent:
    agent_id: int
    side: int
    raw_price: float
    expected_price: float


def init_population(n, w1_max, w2_max, w3_max, tau_max, rng):
    """Draw ``n`` immutable profiles.

    Consumes ``rng.random((n, 4))``: row j holds agent j+1's (w1, w2, w3, tau)
    in that order. Weights are uniform on [0, w_max); tau is uniform on
    {1, ..., tau_max}.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if min(w1_max, w2_max, w3_max, tau_max) <= 0:
        raise ValueError("all maxima must be positive")
    u = rng.random((n, 4))
    w = u[:, :3] * np.array([w1_max, w2_max, w3_max])
    tau = 1 + np.floor(u[:, 3] * tau_max).astype(np.int64)
    np.minimum(tau, tau_max, out=tau)
    return [
        AgentProfile(j + 1, float(w[j, 0]), float(w[j, 1]), float(w[j, 2]), int(tau[j]))
        for j in range(n)
    ]


def population_arrays(profiles):
    """Read-only column arrays (w1, w2, w3, tau) for the kernels."""
    w1 = np.array([p.w1 for p in profiles], dtype=np.float64)
    w2 = np.array([p.w2 for p in profiles], dtype=np.float64)
    w3 = np.array([p.w3 for p in profiles], dtype=np.float64)
    tau = np.array([p.tau for p in profiles], dtype=np.int64)
    for a in (w1, w2, w3, tau):
        a.flags.writeable = False
    return w1, w2, w3, tau


def write_population_csv(path, profiles):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("agent_id", "w1", "w2", "w3", "tau"))
        for p in profiles:
            w.writerow((p.id, repr(p.w1), repr(p.w2), repr(p.w3), p.tau))


class PriceHistory:
    """Consolidated price per step, starting from ``P_f`` at step 0."""

    def __init__(self, p_f, capacity=1024):
        self._buf = np.empty(max(int(capacity), 1) + 1, dtype=np.float64)
        self._buf[0] = p_f
        self.t = 0

    @property
    def values(self):
        return self._buf[: self.t + 1]

    @property
    def current(self):
        return float(self._buf[self.t])

    def append(self, price):
        if price <= 0:
            raise ValueError("prices must be positive")
        if self.t + 1 >= len(self._buf):
            self._buf = np.concatenate([self._buf, np.empty_like(self._buf)])
        self.t += 1
        self._buf[self.t] = price

    def historical_return(self, t, tau):
        """r_h for the agent acting at step ``t`` (requires t <= self.t + 1)."""
        if not 1 <= t <= self.t + 1:
            raise IndexError(f"step {t} not reachable from history of length {self.t}")
        return historical_return(self._buf, t, tau)


# ---------------------------------------------------------------- kernels


@jit(inline=True)
def historical_return(hist, t, tau):
    if t < tau:
        return 0.0
    return math.log(hist[t - 1] / hist[max(t - 1 - tau, 0)])


@jit(inline=True)
def combine_expectation(w1, w2, w3, p_f, p_t, r_h, eps):
    """Weighted mix of fundamental, technical and noise terms. Caller checks w1+w2+w3 > 0."""
    return (w1 * math.log(p_f / p_t) + w2 * r_h + w3 * eps) / (w1 + w2 + w3)


@jit(inline=True)
def decide_side(p_e, p_o, t, t_c, p_f):
    """BUY/SELL/NONE; during warmup (t < t_c) the reference is P_f instead of P_e."""
    ref = p_f if t < t_c else p_e
    if ref > p_o:
        return BUY
    if ref < p_o:
        return SELL
    return NONE


# ---------------------------------------------------------- python surface


def expected_return(profile, history, rng, t=None, p_f=None, sigma_eps=0.06, eps=None):
    """Expected log return of ``profile`` at step ``t`` (default: next step).

    ``eps`` overrides the noise draw; otherwise one ``rng.standard_normal()``
    scaled by ``sigma_eps`` is consumed. Returns None for an all-zero weight
    profile, which skips its turn without drawing.
    """
    if profile.w1 + profile.w2 + profile.w3 == 0:
        return None
    t = history.t + 1 if t is None else t
    p_f = history.values[0] if p_f is None else p_f
    r_h = history.historical_return(t, profile.tau)
    p_t = history.values[t - 1]
    if eps is None:
        eps = sigma_eps * rng.standard_normal()
    return combine_expectation(profile.w1, profile.w2, profile.w3, p_f, p_t, r_h, eps)


def expected_price(p_t, r_e):
    if p_t <= 0:
        raise ValueError("price must be positive")
    return p_t * math.exp(r_e)


def draw_order_price(p_e, p_sigma, rng):
    """Order price ~ Normal(p_e, p_sigma); None when the draw is not positive."""
    if p_sigma <= 0:
        raise ValueError("p_sigma must be positive")
    p_o = p_e + p_sigma * rng.standard_normal()
    return p_o if p_o > 0 else None
