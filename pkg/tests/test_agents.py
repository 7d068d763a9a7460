import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ticksim.agents import (
    AgentProfile, PriceHistory, decide_side, draw_order_price, expected_price, expected_return,
    init_population, population_arrays, write_population_csv,
)
from ticksim.orderbook import BUY, NONE, SELL

# values below were evaluated once with mpmath at 50 digits
R_E_EXAMPLE = 0.00917086132112512
P_E_EXAMPLE = 9991.2095074


def test_population_bounds():
    pop = init_population(1000, 1, 10, 1, 10_000, np.random.default_rng(0))
    assert len(pop) == 1000
    assert [p.id for p in pop] == list(range(1, 1001))
    for p in pop:
        assert 0 <= p.w1 < 1 and 0 <= p.w2 < 10 and 0 <= p.w3 < 1
        assert 1 <= p.tau <= 10_000 and isinstance(p.tau, int)


def test_single_profile_is_reproducible():
    a = init_population(1, 2, 3, 4, 5, np.random.default_rng(42))
    b = init_population(1, 2, 3, 4, 5, np.random.default_rng(42))
    assert a == b


def test_population_draw_order():
    u = np.random.default_rng(9).random((3, 4))
    pop = init_population(3, 1, 10, 1, 100, np.random.default_rng(9))
    assert pop[1].w1 == u[1, 0] and pop[1].w2 == u[1, 1] * 10 and pop[1].w3 == u[1, 2]
    assert pop[2].tau == 1 + math.floor(u[2, 3] * 100)


def test_population_means():
    pop = init_population(100_000, 1, 10, 1, 10_000, np.random.default_rng(1))
    w1, w2, w3, tau = population_arrays(pop)
    assert w1.mean() == pytest.approx(0.5, rel=0.01)
    assert w2.mean() == pytest.approx(5.0, rel=0.01)
    assert w3.mean() == pytest.approx(0.5, rel=0.01)
    assert tau.mean() == pytest.approx(5000.5, rel=0.01)
    assert set(np.unique(tau[:50])) <= set(range(1, 10_001))


def test_bad_population_args():
    with pytest.raises(ValueError):
        init_population(0, 1, 1, 1, 1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        init_population(5, 1, 0, 1, 1, np.random.default_rng(0))


def test_profiles_are_immutable():
    pop = init_population(3, 1, 10, 1, 10, np.random.default_rng(0))
    with pytest.raises(dataclasses.FrozenInstanceError):
        pop[0].w1 = 0.3
    w1, *_ = population_arrays(pop)
    with pytest.raises(ValueError):
        w1[0] = 1.0


def history(*prices, p_f=10000.0):
    h = PriceHistory(p_f)
    for p in prices:
        h.append(p)
    return h


def test_equilibrium_expected_return_is_zero():
    prof = AgentProfile(1, 0.3, 2.0, 0.4, 5)
    assert expected_return(prof, history(), None, eps=0.0) == 0.0


def test_expected_return_example():
    prof = AgentProfile(1, 1.0, 10.0, 1.0, 1)
    # P^(t-1) chosen so that r_h = ln(9900/p) = 0.01 exactly in real arithmetic
    h = history(9900 / math.exp(0.01), 9900.0)
    r = expected_return(prof, h, None, eps=0.0)
    assert r == pytest.approx(R_E_EXAMPLE, rel=1e-12)


def test_fundamental_only_expected_return():
    prof = AgentProfile(1, 1.0, 0.0, 0.0, 3)
    assert expected_return(prof, history(20000.0), None, eps=0.0) == pytest.approx(-math.log(2), abs=1e-15)


def test_zero_weights_skip_without_drawing():
    rng = np.random.default_rng(0)
    assert expected_return(AgentProfile(1, 0.0, 0.0, 0.0, 1), history(), rng) is None
    assert rng.random() == np.random.default_rng(0).random()


def test_technical_term_zero_before_tau():
    prof = AgentProfile(1, 0.0, 1.0, 0.0, 5)
    h = history(10100.0, 10200.0)
    assert expected_return(prof, h, None, eps=0.0) == 0.0


def test_noise_draw_scaled_by_sigma():
    prof = AgentProfile(1, 0.0, 0.0, 1.0, 1)
    z = np.random.default_rng(3).standard_normal()
    assert expected_return(prof, history(), np.random.default_rng(3), sigma_eps=0.06) == pytest.approx(0.06 * z)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1.0, 1e6), min_size=1, max_size=40), st.integers(1, 40), st.data())
def test_technical_term_is_historical_log_return(prices, tau, data):
    h = history(*prices)
    t = data.draw(st.integers(1, h.t + 1))
    prof = AgentProfile(1, 0.0, 1.0, 0.0, tau)
    r = expected_return(prof, h, None, t=t, eps=0.0)
    v = h.values
    expected = 0.0 if t < tau else math.log(v[t - 1] / v[max(t - 1 - tau, 0)])
    assert r == expected


@pytest.mark.parametrize("p_t, r_e, expected", [
    (10000, 0.0, 10000.0),
    (10000, math.log(1.01), 10100.0),
    (9900, 0.0091709, 9991.2095074),
])
def test_expected_price(p_t, r_e, expected):
    assert expected_price(p_t, r_e) == pytest.approx(expected, rel=1e-10)


def test_expected_price_chain_from_return_example():
    assert expected_price(9900, R_E_EXAMPLE) == pytest.approx(9991.2091209, rel=1e-10)


def test_order_price_degenerate_limit():
    assert draw_order_price(10000.0, 1e-12, np.random.default_rng(0)) == pytest.approx(10000.0)


def test_order_price_moments():
    rng = np.random.default_rng(11)
    x = np.array([draw_order_price(10000.0, 30.0, rng) for _ in range(100_000)])
    assert abs(x.mean() - 10000) < 0.5
    assert abs(x.std(ddof=1) - 30) < 0.5


def test_nonpositive_order_price_skips():
    assert draw_order_price(-1e6, 1.0, np.random.default_rng(0)) is None


@pytest.mark.parametrize("p_e, p_o, t, expected", [
    (10050, 10020, 30000, BUY),
    (10050, 10080, 30000, SELL),
    (10050, 10050, 30000, NONE),
    (5, 9950, 100, BUY),
    (20000, 10050, 100, SELL),
    (20000, 10000, 100, NONE),
])
def test_decide_side(p_e, p_o, t, expected):
    assert decide_side(float(p_e), float(p_o), t, 20000, 10000.0) == expected


@settings(max_examples=300)
@given(st.floats(1, 1e5), st.floats(1, 1e5), st.integers(20000, 10**7))
def test_side_matches_sign_outside_warmup(p_e, p_o, t):
    side = decide_side(p_e, p_o, t, 20000, 10000.0)
    assert side == (BUY if p_e > p_o else SELL if p_e < p_o else NONE)


def test_population_csv(tmp_path):
    pop = init_population(4, 1, 10, 1, 50, np.random.default_rng(0))
    write_population_csv(tmp_path / "pop.csv", pop)
    lines = (tmp_path / "pop.csv").read_text().splitlines()
    assert lines[0] == "agent_id,w1,w2,w3,tau"
    assert len(lines) == 5 and lines[1].startswith("1,")
