from datetime import date
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from default_spread.basis import BasisConfig, basis_matrix
from default_spread.cashflow import CashFlowSequence, PriceObservation
from default_spread.ingest import read_issues, read_prices, read_treasury
from default_spread.models import IssueRecord, PriceRecord
from default_spread.synth import SyntheticUniverse, write_universe

TRADE_DATE = date(2024, 1, 2)


def bullet_schedule(term: float, coupon: float = 5.0, freq: int = 1) -> CashFlowSequence:
    count = int(round(term * freq))
    times = np.arange(1, count + 1) / freq
    amounts = np.full(count, coupon / freq)
    amounts[-1] += 100.0
    return CashFlowSequence(times=times, amounts=amounts)


def priced_members(
    beta: Sequence[float],
    cfg: BasisConfig,
    terms: Sequence[float],
    trade_date: date = TRADE_DATE,
    noise: Sequence[float] = (),
    coupon: float = 5.0,
) -> List[Tuple[PriceObservation, CashFlowSequence]]:
    """Bonds priced exactly by the discount function with weights beta (plus optional noise)."""
    beta = np.asarray(beta, dtype=float)
    members = []
    for i, term in enumerate(terms):
        cf = bullet_schedule(term, coupon)
        price = float(cf.amounts @ basis_matrix(cf.times, cfg) @ beta)
        if len(noise):
            price += float(noise[i])
        observation = PriceObservation(
            bond_id=f"B{i:02d}",
            trade_date=trade_date,
            clean_price=price,
            dirty_price=price,
        )
        members.append((observation, cf))
    return members


def universe_records(universe: SyntheticUniverse, state_index: int = 0):
    issues = [
        IssueRecord(
            bond_id=bond.bond_id,
            issuer_id=bond.issuer_id,
            issue_date=bond.issue_date,
            maturity_date=bond.maturity_date,
            coupon_rate=bond.coupon_rate,
            coupon_freq=bond.coupon_freq,
            face=bond.face,
            callable=False,
            convertible=False,
            variable_rate=False,
            senior=True,
        )
        for bond in universe.bonds
    ]
    prices = [
        PriceRecord(bond_id=bond_id, trade_date=trade_date, clean_price=clean)
        for bond_id, trade_date, clean in universe.prices[state_index]
    ]
    return issues, prices


def all_price_records(universe: SyntheticUniverse) -> List[PriceRecord]:
    return [
        PriceRecord(bond_id=bond_id, trade_date=trade_date, clean_price=clean)
        for rows in universe.prices
        for bond_id, trade_date, clean in rows
    ]


def reingest(universe: SyntheticUniverse, directory: Path):
    paths = write_universe(universe, directory)
    return read_issues(paths["issues"]), read_prices(paths["prices"]), read_treasury(paths["treasury"])
