"""
Row models for the issue-descriptor and price files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional

from default_spread.cashflow import BondInstrument
from default_spread.utils import parse_bool, parse_date

ISSUE_COLUMNS = (
    "bond_id",
    "issuer_id",
    "issue_date",
    "maturity_date",
    "coupon_rate",
    "coupon_freq",
    "face",
    "callable",
    "convertible",
    "variable_rate",
    "senior",
)
PRICE_COLUMNS = ("bond_id", "trade_date", "clean_price")
TREASURY_COLUMNS = ("tenor_years", "zero_yield")

COUPON_FREQUENCIES = (0, 1, 2, 4, 12)


@dataclass(frozen=True)
class IssueRecord:
    bond_id: str
    issuer_id: str
    issue_date: date
    maturity_date: date
    coupon_rate: float
    coupon_freq: int
    face: float
    callable: bool
    convertible: bool
    variable_rate: bool
    senior: bool

    @property
    def is_vanilla(self) -> bool:
        return not self.callable and not self.convertible and not self.variable_rate and self.senior

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> Optional["IssueRecord"]:
        try:
            record = cls(
                bond_id=row["bond_id"].strip(),
                issuer_id=row["issuer_id"].strip(),
                issue_date=parse_date(row["issue_date"]),
                maturity_date=parse_date(row["maturity_date"]),
                coupon_rate=float(row["coupon_rate"]),
                coupon_freq=int(row["coupon_freq"]),
                face=float(row["face"]),
                callable=parse_bool(row["callable"]),
                convertible=parse_bool(row["convertible"]),
                variable_rate=parse_bool(row["variable_rate"]),
                senior=parse_bool(row["senior"]),
            )
        except (KeyError, ValueError, TypeError, AttributeError):
            return None
        if not record.bond_id or not record.issuer_id:
            return None
        if record.coupon_freq not in COUPON_FREQUENCIES:
            return None
        if not (math.isfinite(record.coupon_rate) and record.coupon_rate >= 0):
            return None
        if not (math.isfinite(record.face) and record.face > 0):
            return None
        if record.maturity_date <= record.issue_date:
            return None
        return record

    def to_instrument(self) -> BondInstrument:
        return BondInstrument(
            bond_id=self.bond_id,
            issuer_id=self.issuer_id,
            issue_date=self.issue_date,
            maturity_date=self.maturity_date,
            coupon_rate=self.coupon_rate,
            coupon_freq=self.coupon_freq,
            face=self.face,
            callable=self.callable,
            convertible=self.convertible,
            variable_rate=self.variable_rate,
            senior=self.senior,
        )


@dataclass(frozen=True)
class PriceRecord:
    bond_id: str
    trade_date: date
    clean_price: float

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> Optional["PriceRecord"]:
        try:
            record = cls(
                bond_id=row["bond_id"].strip(),
                trade_date=parse_date(row["trade_date"]),
                clean_price=float(row["clean_price"]),
            )
        except (KeyError, ValueError, TypeError, AttributeError):
            return None
        if not record.bond_id or not (math.isfinite(record.clean_price) and record.clean_price > 0):
            return None
        return record
