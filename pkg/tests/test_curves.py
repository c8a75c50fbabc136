import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from default_spread.basis import BasisConfig, build_design, discount_value
from default_spread.bayes import NIGParams, default_prior, posterior_update
from default_spread.curves import (
    SpreadCurve,
    TenorGrid,
    TreasuryCurve,
    integrated_risk,
    spread_at,
    spread_curve,
    treasury_from_panel,
    yield_from_discount,
)
from default_spread.errors import DomainError, EmptyPanelError
from default_spread.basis import BasisDesign

from helpers import priced_members

AS_OF = date(2024, 1, 2)
CFG = BasisConfig()
TREASURY_BETA = np.array([0.8, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def _flat_curve(values, tenors=None):
    tenors = TenorGrid().tenors if tenors is None else np.asarray(tenors, dtype=float)
    values = np.broadcast_to(np.asarray(values, dtype=float), tenors.shape).copy()
    return SpreadCurve("X", AS_OF, tenors, values, values.copy(), values.copy(), 0.95)


def test_tenor_grid():
    grid = TenorGrid()
    assert grid.tenors[0] == 0.25 and grid.tenors[-1] == 30.0 and grid.tenors.size == 120
    with pytest.raises(DomainError):
        TenorGrid([1.0, 1.0])
    with pytest.raises(DomainError):
        TenorGrid([0.0, 1.0])


def test_yield_from_discount():
    assert yield_from_discount(1.0, 7.0) == 0.0
    assert yield_from_discount(math.exp(-0.1), 2.0) == pytest.approx(0.05)
    with pytest.raises(DomainError):
        yield_from_discount(0.0, 1.0)
    with pytest.raises(DomainError):
        yield_from_discount(0.5, 0.0)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(min_value=1e-6, max_value=1.0), t=st.floats(min_value=0.01, max_value=50.0))
def test_yield_round_trip(d, t):
    assert math.exp(-yield_from_discount(d, t) * t) == pytest.approx(d, rel=1e-12, abs=1e-15)


def test_tabulated_treasury_is_exact_at_knots():
    curve = TreasuryCurve.tabulated(AS_OF, [1.0, 5.0, 10.0], [0.03, 0.035, 0.04])

    np.testing.assert_allclose(curve.zero_yield(np.array([1.0, 5.0, 10.0])), [0.03, 0.035, 0.04])
    assert curve.zero_yield(3.0) == pytest.approx(0.0325)
    assert curve.zero_yield(0.25) == 0.03
    assert curve.zero_yield(30.0) == 0.04
    assert curve.discount(5.0) == pytest.approx(math.exp(-0.175))


def test_matching_beta_gives_zero_spread():
    treasury = TreasuryCurve.fitted(AS_OF, TREASURY_BETA, CFG)

    curve = spread_curve(TREASURY_BETA, treasury, TenorGrid(), CFG, as_of=AS_OF)

    np.testing.assert_allclose(curve.spread, 0.0, atol=1e-12)
    assert curve.violations == ()


def test_flat_spread_recovered_against_tabulated_treasury():
    tenors = TenorGrid().tenors
    treasury = TreasuryCurve.tabulated(AS_OF, tenors, 0.03 + 0.001 * np.sqrt(tenors))
    curve_discount = treasury.discount(tenors) * np.exp(-0.02 * tenors)

    spread = [yield_from_discount(d, t) - treasury.zero_yield(t) for d, t in zip(curve_discount, tenors)]

    np.testing.assert_allclose(spread, 0.02, atol=1e-10)


def test_spread_matches_risk_discount_yield():
    treasury = TreasuryCurve.fitted(AS_OF, TREASURY_BETA, CFG)
    rng = np.random.default_rng(1)
    for t in rng.uniform(0.25, 30.0, size=20):
        d_risk = math.exp(-rng.uniform(0.0, 0.05) * t)
        total = treasury.discount(t) * d_risk
        spread = yield_from_discount(total, t) - treasury.zero_yield(t)
        assert spread == pytest.approx(-math.log(d_risk) / t, abs=1e-12)


def test_spread_decreases_in_discount_value():
    treasury = TreasuryCurve.tabulated(AS_OF, [1.0, 30.0], [0.03, 0.04])
    values = [yield_from_discount(d, 5.0) - treasury.zero_yield(5.0) for d in np.linspace(0.5, 0.95, 10)]

    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_treasury_date_must_match_state():
    treasury = TreasuryCurve.fitted(date(2024, 1, 3), TREASURY_BETA, CFG)

    with pytest.raises(DomainError):
        spread_curve(TREASURY_BETA, treasury, TenorGrid(), CFG, as_of=AS_OF)


def test_discount_violations_are_flagged_not_fatal():
    beta = np.zeros(8)
    beta[0], beta[-1] = 3.0, -2.0
    treasury = TreasuryCurve.fitted(AS_OF, TREASURY_BETA, CFG)

    curve = spread_curve(beta, treasury, TenorGrid(), CFG, as_of=AS_OF)

    assert curve.violations
    bad = [i for i, t in enumerate(curve.tenors) if not 0 < discount_value(beta, float(t), CFG) <= 1]
    assert bad
    assert all(math.isnan(curve.spread[i]) or discount_value(beta, float(curve.tenors[i]), CFG) > 1 for i in bad)


def _random_posterior(seed):
    rng = np.random.default_rng(seed)
    cfg = BasisConfig(K=4)
    members = priced_members([0.7, 0.2, 0.05, 0.05], cfg, [1, 2, 3, 5, 7, 10, 20], noise=rng.normal(0, 0.3, 7))
    return posterior_update(default_prior(4, lam=rng.uniform(0.1, 10.0)), build_design(members, cfg)), cfg


@pytest.mark.parametrize("seed", range(5))
def test_bands_bracket_the_point_estimate(seed):
    posterior, cfg = _random_posterior(seed)
    treasury = TreasuryCurve.tabulated(AS_OF, [1.0, 30.0], [0.01, 0.02])

    curve = spread_curve(posterior, treasury, TenorGrid(), cfg, level=0.95, as_of=AS_OF)

    finite = ~np.isnan(curve.spread)
    assert finite.any()
    assert np.all(curve.band_lo[finite] <= curve.spread[finite])
    assert np.all(curve.spread[finite] <= curve.band_hi[finite])


def test_point_curve_has_degenerate_bands():
    treasury = TreasuryCurve.fitted(AS_OF, TREASURY_BETA, CFG)
    beta = np.array([0.75, 0.2, 0.05, 0, 0, 0, 0, 0])

    curve = spread_curve(beta, treasury, TenorGrid(), CFG, as_of=AS_OF)

    np.testing.assert_array_equal(curve.band_lo, curve.spread)
    np.testing.assert_array_equal(curve.band_hi, curve.spread)
    assert set(curve.risk_to) == {1.0, 2.0, 5.0, 10.0, 20.0, 30.0}


def test_integrated_risk_examples():
    assert integrated_risk(_flat_curve(0.02), 10.0) == pytest.approx(0.2)
    assert integrated_risk(_flat_curve(0.0), 7.5) == 0.0

    tenors = TenorGrid().tenors
    linear = SpreadCurve("X", AS_OF, tenors, 0.01 * tenors, 0.01 * tenors, 0.01 * tenors, 0.95)
    assert integrated_risk(linear, 2.0) == pytest.approx(0.0203125, abs=1e-12)
    assert integrated_risk(linear, 2.0) == pytest.approx(0.02, abs=1e-3)

    with pytest.raises(DomainError):
        integrated_risk(_flat_curve(0.02), 31.0)


def test_integrated_risk_between_knots_and_below_first_tenor():
    curve = _flat_curve(0.03)

    assert integrated_risk(curve, 0.1) == pytest.approx(0.003)
    assert integrated_risk(curve, 4.1) == pytest.approx(0.123)


def test_spread_at_interpolates():
    tenors = np.array([1.0, 2.0, 3.0])
    curve = SpreadCurve("X", AS_OF, tenors, np.array([0.01, 0.02, 0.03]), np.zeros(3), np.full(3, 0.05), 0.95)

    assert spread_at(curve, 2.0) == (0.02, 0.0, 0.05)
    assert spread_at(curve, 2.5)[0] == pytest.approx(0.025)
    with pytest.raises(DomainError):
        spread_at(curve, 4.0)


def test_treasury_from_panel_recovers_beta():
    cfg = BasisConfig(K=4)
    beta = np.array([0.8, 0.2, 0.0, 0.0])
    design = build_design(priced_members(beta, cfg, [1, 2, 3, 5, 7, 10, 20, 30]), cfg)

    curve = treasury_from_panel(design, cfg, AS_OF)

    np.testing.assert_allclose(curve.beta, beta, atol=1e-6)
    assert curve.as_of == AS_OF


def test_treasury_from_panel_falls_back_to_ridge(caplog):
    design = build_design(priced_members(TREASURY_BETA, CFG, [2, 5, 10]), CFG)

    curve = treasury_from_panel(design, CFG, AS_OF)

    assert abs(curve.beta.sum() - 1.0) <= 1e-10
    assert "falling back to ridge" in caplog.text


def test_treasury_from_panel_rejects_empty_panel():
    with pytest.raises(EmptyPanelError):
        treasury_from_panel([BasisDesign.empty(CFG)], CFG)
