"""Constant-product engine: exact-rational identities and trade semantics."""

from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from privamm.amm import (AmmError, LiquidityError, Order, OrderRejected,
                         PoolState, QuantityError, apply_trade, pool_init,
                         price_impact, quote_buy, quote_sell, spot_price)

F = Fraction

reserves = st.fractions(
    min_value=F(1, 1000), max_value=F(10**6), max_denominator=10**6
)


def fresh_pool(e, m):
    return pool_init(e, m)


def test_pool_init_products():
    assert fresh_pool(100, 100).C == 10000
    assert fresh_pool(1, 1).C == 1
    assert fresh_pool(1000, 1000).C == 10**6


def test_pool_init_rejects_nonpositive():
    with pytest.raises(LiquidityError):
        pool_init(0, 100)
    with pytest.raises(LiquidityError):
        pool_init(100, F(-1))


def test_pool_state_enforces_invariant():
    with pytest.raises(AmmError):
        PoolState(E=F(2), M=F(3), C=F(7))


def test_spot_price_symmetric_pools():
    assert spot_price(fresh_pool(100, 100)) == 1
    assert spot_price(fresh_pool(1000, 1000)) == 1


def test_spot_price_post_trade_state():
    pool = PoolState(E=F(90), M=F(10000, 90), C=F(10000))
    assert spot_price(pool) == F(100, 81)


def test_quote_buy_worked_example():
    quote = quote_buy(fresh_pool(100, 100), 10)
    assert quote.amount_in == F(100, 9)
    assert quote.effective_price == F(10, 9)
    assert quote.price_impact == F(1, 9)


def test_quote_buy_small_trade():
    quote = quote_buy(fresh_pool(1000, 1000), 1)
    assert quote.amount_in == F(1000, 999)


def test_quote_buy_drain_is_liquidity_error():
    with pytest.raises(LiquidityError, match="liquidity error"):
        quote_buy(fresh_pool(100, 100), 100)


def test_quote_rejects_nonpositive_quantity():
    with pytest.raises(QuantityError):
        quote_buy(fresh_pool(100, 100), 0)
    with pytest.raises(QuantityError):
        quote_sell(fresh_pool(100, 100), F(-1))


def test_apply_trade_worked_example():
    pool = fresh_pool(100, 100)
    new_pool, quote = apply_trade(pool, Order("buy", F(10), F(2), "t"))
    assert (new_pool.E, new_pool.M) == (90, F(1000, 9))
    assert new_pool.E * new_pool.M == pool.C
    assert quote.amount_in == F(100, 9)


def test_apply_trade_limit_rejection_leaves_state():
    pool = fresh_pool(100, 100)
    with pytest.raises(OrderRejected):
        apply_trade(pool, Order("buy", F(10), F(1), "t"))
    assert (pool.E, pool.M) == (100, 100)


def test_sell_returns_to_start():
    pool = fresh_pool(100, 100)
    mid, _ = apply_trade(pool, Order("buy", F(10), F(2), "t"))
    back, _ = apply_trade(mid, Order("sell", F(10), F(1, 2), "t"))
    assert (back.E, back.M, back.C) == (pool.E, pool.M, pool.C)


def test_sell_limit_semantics():
    # A sell requires the effective rate to be at least the limit.
    pool = fresh_pool(100, 100)
    with pytest.raises(OrderRejected):
        apply_trade(pool, Order("sell", F(10), F(2), "t"))


def test_price_impact_examples():
    assert price_impact(fresh_pool(100, 100), 10) == F(1, 9)
    assert price_impact(fresh_pool(1000, 1000), 1) == F(1, 999)
    assert price_impact(fresh_pool(100, 100), 50) == 1


def test_order_validation():
    with pytest.raises(QuantityError):
        Order("hold", F(1), F(1), "t")
    with pytest.raises(QuantityError):
        Order("buy", F(0), F(1), "t")


def test_floats_rejected():
    with pytest.raises(TypeError):
        pool_init(1.5, 2)
    with pytest.raises(TypeError):
        quote_buy(fresh_pool(100, 100), 0.5)


# -- properties ---------------------------------------------------------------

@given(reserves, reserves, st.fractions(min_value=F(1, 10**6), max_value=F(1, 2),
                                        max_denominator=10**6))
@settings(max_examples=400)
def test_conservation_and_identities(e0, m0, frac):
    pool = fresh_pool(e0, m0)
    e = pool.E * frac
    assume(e > 0)
    quote = quote_buy(pool, e)
    new_pool, _ = apply_trade(pool, Order("buy", e, quote.effective_price, "t"))
    # Conservation with zero tolerance.
    assert new_pool.E * new_pool.M == pool.C
    # Impact identity: (effective - spot) / spot.
    spot = spot_price(pool)
    assert quote.price_impact == (quote.effective_price - spot) / spot
    # Effective price is amount_in per token.
    assert quote.effective_price == quote.amount_in / quote.amount_out


@given(reserves, reserves,
       st.fractions(min_value=F(1, 1000), max_value=F(1, 3),
                    max_denominator=10**4),
       st.fractions(min_value=F(1, 1000), max_value=F(1, 3),
                    max_denominator=10**4))
@settings(max_examples=200)
def test_monotonicity(e0, m0, f1, f2):
    assume(f1 != f2)
    pool = fresh_pool(e0, m0)
    small, large = sorted((pool.E * f1, pool.E * f2))
    assume(small > 0)
    q_small, q_large = quote_buy(pool, small), quote_buy(pool, large)
    assert q_small.effective_price < q_large.effective_price
    assert q_small.amount_in < q_large.amount_in


@given(reserves, reserves,
       st.fractions(min_value=F(1, 1000), max_value=F(1, 2),
                    max_denominator=10**4))
@settings(max_examples=200)
def test_buy_sell_round_trip(e0, m0, frac):
    pool = fresh_pool(e0, m0)
    e = pool.E * frac
    assume(e > 0)
    mid, _ = apply_trade(pool, Order("buy", e, F(10**12), "t"))
    back, _ = apply_trade(mid, Order("sell", e, F(1, 10**12), "t"))
    assert (back.E, back.M) == (pool.E, pool.M)


@given(reserves, reserves)
@settings(max_examples=200)
def test_spot_price_three_forms(e0, m0):
    pool = fresh_pool(e0, m0)
    p = spot_price(pool)
    assert p == pool.M / pool.E == pool.C / pool.E**2 == pool.M**2 / pool.C
