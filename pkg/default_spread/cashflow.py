"""
Cash-flow schedules, accrued interest and present value for vanilla bonds.

Times are ACT/365 year-fractions measured from the valuation date. Coupon
dates are stepped backwards from maturity in whole months.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Callable, Tuple, Union

import numpy as np
from dateutil.relativedelta import relativedelta

from default_spread.errors import DomainError, MaturedInstrumentError, RejectedInstrumentError
from default_spread.utils import year_fraction

logger = logging.getLogger(__name__)

TIME_TO_NEXT = "time_to_next"
ELAPSED_FRACTION = "elapsed_fraction"
ACCRUAL_CONVENTIONS = (TIME_TO_NEXT, ELAPSED_FRACTION)

PRICE_BASIS = 100.0

DiscountFunction = Callable[[Union[float, np.ndarray]], Union[float, np.ndarray]]


@dataclass(frozen=True)
class BondInstrument:
    bond_id: str
    issuer_id: str
    issue_date: date
    maturity_date: date
    coupon_rate: float
    coupon_freq: int
    face: float
    callable: bool = False
    convertible: bool = False
    variable_rate: bool = False
    senior: bool = True

    def __post_init__(self) -> None:
        if self.maturity_date <= self.issue_date:
            raise DomainError(f"{self.bond_id}: maturity_date must be after issue_date")
        if self.coupon_rate < 0:
            raise DomainError(f"{self.bond_id}: negative coupon_rate {self.coupon_rate}")
        if self.face <= 0:
            raise DomainError(f"{self.bond_id}: face must be positive")
        if self.coupon_freq < 0 or (self.coupon_freq and 12 % self.coupon_freq):
            raise DomainError(f"{self.bond_id}: unsupported coupon_freq {self.coupon_freq}")

    @property
    def is_vanilla(self) -> bool:
        return not self.callable and not self.convertible and not self.variable_rate and self.senior

    @property
    def pays_coupons(self) -> bool:
        return self.coupon_freq > 0 and self.coupon_rate > 0

    @property
    def coupon_amount(self) -> float:
        if not self.pays_coupons:
            return 0.0
        return self.face * self.coupon_rate / self.coupon_freq

    @property
    def original_term(self) -> float:
        return year_fraction(self.issue_date, self.maturity_date)


@dataclass(frozen=True, eq=False)
class CashFlowSequence:
    times: np.ndarray
    amounts: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        amounts = np.asarray(self.amounts, dtype=float)
        if times.shape != amounts.shape or times.ndim != 1:
            raise DomainError("times and amounts must be 1-d arrays of equal length")
        if times.size and (np.any(times <= 0) or np.any(np.diff(times) <= 0)):
            raise DomainError("payment times must be positive and strictly increasing")
        if np.any(amounts <= 0) or not np.all(np.isfinite(amounts)):
            raise DomainError("payment amounts must be positive and finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amounts", amounts)

    @property
    def M(self) -> int:
        return int(self.times.size)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def scaled(self, factor: float) -> "CashFlowSequence":
        return CashFlowSequence(times=self.times, amounts=self.amounts * factor)


@dataclass(frozen=True)
class PriceObservation:
    bond_id: str
    trade_date: date
    clean_price: float
    dirty_price: float
    weight: float = field(default=1.0)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.clean_price) and self.clean_price > 0):
            raise DomainError(f"{self.bond_id}: clean price must be positive and finite")
        if not (np.isfinite(self.dirty_price) and self.dirty_price > 0):
            raise DomainError(f"{self.bond_id}: dirty price must be positive and finite")


def _coupon_dates(bond: BondInstrument, valuation_date: date):
    months = 12 // bond.coupon_freq
    dates = []
    step = 0
    while True:
        payment = bond.maturity_date - relativedelta(months=months * step)
        if payment <= valuation_date or payment <= bond.issue_date:
            break
        dates.append(payment)
        step += 1
    dates.reverse()
    return dates


def _check_live(bond: BondInstrument, valuation_date: date) -> None:
    if not bond.is_vanilla:
        raise RejectedInstrumentError(f"{bond.bond_id} is not a vanilla bond")
    if valuation_date >= bond.maturity_date:
        raise MaturedInstrumentError(
            f"{bond.bond_id} matured on {bond.maturity_date.isoformat()} "
            f"(valuation {valuation_date.isoformat()})"
        )


def generate_schedule(bond: BondInstrument, valuation_date: date) -> CashFlowSequence:
    _check_live(bond, valuation_date)

    if not bond.pays_coupons:
        return CashFlowSequence(
            times=np.array([year_fraction(valuation_date, bond.maturity_date)]),
            amounts=np.array([bond.face]),
        )

    dates = _coupon_dates(bond, valuation_date)
    times = np.array([year_fraction(valuation_date, payment) for payment in dates])
    amounts = np.full(times.shape, bond.coupon_amount)
    amounts[-1] += bond.face
    return CashFlowSequence(times=times, amounts=amounts)


def coupon_period_context(bond: BondInstrument, valuation_date: date) -> Tuple[float, float, float]:
    """
    Returns (c_next, t_next, t_coupon): the next coupon amount, the time until
    it, and the length of the coupon period containing valuation_date.
    """
    _check_live(bond, valuation_date)
    if not bond.pays_coupons:
        remaining = year_fraction(valuation_date, bond.maturity_date)
        return 0.0, remaining, remaining

    next_coupon = _coupon_dates(bond, valuation_date)[0]
    previous = next_coupon - relativedelta(months=12 // bond.coupon_freq)
    previous = max(previous, bond.issue_date)
    t_next = year_fraction(valuation_date, next_coupon)
    t_coupon = year_fraction(previous, next_coupon)
    return bond.coupon_amount, t_next, t_coupon


def accrued_interest(
    c_next: float,
    t_next: float,
    t_coupon: float,
    convention: str = TIME_TO_NEXT,
) -> float:
    if convention not in ACCRUAL_CONVENTIONS:
        raise DomainError(f"Unknown accrual convention: {convention}")
    if c_next < 0 or t_next < 0 or t_coupon <= 0:
        raise DomainError("accrued interest inputs must be nonnegative with t_coupon > 0")
    if t_next > t_coupon:
        raise DomainError(f"t_next={t_next} exceeds coupon period {t_coupon}")

    if convention == TIME_TO_NEXT:
        return c_next * t_next / t_coupon
    return c_next * (t_coupon - t_next) / t_coupon


def accrued_per_hundred(bond: BondInstrument, valuation_date: date, convention: str = TIME_TO_NEXT) -> float:
    c_next, t_next, t_coupon = coupon_period_context(bond, valuation_date)
    return accrued_interest(c_next, t_next, t_coupon, convention) * PRICE_BASIS / bond.face


def dirty_price(
    bond: BondInstrument,
    clean_price: float,
    trade_date: date,
    convention: str = TIME_TO_NEXT,
) -> PriceObservation:
    accrued = accrued_per_hundred(bond, trade_date, convention)
    return PriceObservation(
        bond_id=bond.bond_id,
        trade_date=trade_date,
        clean_price=clean_price,
        dirty_price=clean_price + accrued,
    )


def present_value(cf: CashFlowSequence, d: DiscountFunction) -> float:
    if cf.M == 0:
        raise DomainError("cannot price an empty cash-flow sequence")
    factors = np.broadcast_to(np.asarray(d(cf.times), dtype=float), cf.times.shape)
    if np.any((factors < 0) | (factors > 1)):
        logger.debug("Discount factors outside [0, 1] at times %s", cf.times[(factors < 0) | (factors > 1)])
    return float(cf.amounts @ factors)
