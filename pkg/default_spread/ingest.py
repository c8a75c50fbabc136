"""
Read issue, price and Treasury files and assemble per-issuer single-date panels.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from default_spread.basis import INVERSE_TERM, BasisConfig, BasisDesign, build_design
from default_spread.cashflow import (
    TIME_TO_NEXT,
    PRICE_BASIS,
    CashFlowSequence,
    PriceObservation,
    dirty_price,
    generate_schedule,
)
from default_spread.curves import TreasuryCurve
from default_spread.errors import DataIntegrityError, DomainError
from default_spread.models import ISSUE_COLUMNS, PRICE_COLUMNS, TREASURY_COLUMNS, IssueRecord, PriceRecord
from default_spread.utils import year_fraction

logger = logging.getLogger(__name__)

STANDARD_BUCKETS = (1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0)

Record = TypeVar("Record")


@dataclass(frozen=True)
class ValuationConfig:
    accrual: str = TIME_TO_NEXT
    strict: bool = False
    buckets: Tuple[float, ...] = STANDARD_BUCKETS


@dataclass
class IngestTally:
    unresolved_bond: int = 0
    off_date: int = 0
    non_vanilla: int = 0
    matured: int = 0
    not_on_the_run: int = 0
    duplicate: int = 0
    invalid_price: int = 0
    malformed: int = 0
    kept: int = 0

    @property
    def excluded(self) -> int:
        return sum(getattr(self, item.name) for item in fields(self) if item.name != "kept")

    @property
    def total(self) -> int:
        return self.excluded + self.kept

    def as_dict(self) -> Dict[str, int]:
        return {item.name: getattr(self, item.name) for item in fields(self)}


@dataclass(frozen=True)
class Panel:
    issuer_id: str
    as_of: date
    members: Tuple[Tuple[PriceObservation, CashFlowSequence], ...] = field(default_factory=tuple)

    @property
    def N(self) -> int:
        return len(self.members)

    def design(self, cfg: BasisConfig, weight_scheme: str = INVERSE_TERM) -> BasisDesign:
        return build_design(self.members, cfg, weight_scheme)


def _check_columns(fieldnames: Optional[Sequence[str]], required: Sequence[str], path: Path) -> None:
    present = {name.strip() for name in fieldnames or ()}
    missing = [name for name in required if name not in present]
    if missing:
        raise DomainError(f"{path}: missing required column(s) {', '.join(missing)}")


def _read_records(
    path: Path,
    required: Sequence[str],
    parse: Callable[[Dict[str, str]], Optional[Record]],
    strict: bool,
) -> Tuple[List[Record], int]:
    records: List[Record] = []
    malformed = 0
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        _check_columns(reader.fieldnames, required, Path(path))
        for line_no, row in enumerate(reader, start=2):
            row = {(key or "").strip(): value for key, value in row.items()}
            parsed = parse(row)
            if parsed is None:
                if strict:
                    raise DataIntegrityError(f"{path}:{line_no}: malformed row")
                logger.warning("Skipping malformed row %s:%s", path, line_no)
                malformed += 1
                continue
            records.append(parsed)
    return records, malformed


def read_issues(path: Path, strict: bool = False, tally: Optional[IngestTally] = None) -> List[IssueRecord]:
    records, malformed = _read_records(path, ISSUE_COLUMNS, IssueRecord.from_row, strict)
    if tally is not None:
        tally.malformed += malformed
    logger.info("Loaded %s issues from %s", len(records), path)
    return records


def read_prices(path: Path, strict: bool = False, tally: Optional[IngestTally] = None) -> List[PriceRecord]:
    records, malformed = _read_records(path, PRICE_COLUMNS, PriceRecord.from_row, strict)
    if tally is not None:
        tally.malformed += malformed
    logger.info("Loaded %s prices from %s", len(records), path)
    return records


def read_treasury(path: Path, as_of: Optional[date] = None) -> TreasuryCurve:
    tenors: List[float] = []
    yields: List[float] = []
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        _check_columns(reader.fieldnames, TREASURY_COLUMNS, Path(path))
        for line_no, row in enumerate(reader, start=2):
            try:
                tenors.append(float(row["tenor_years"]))
                yields.append(float(row["zero_yield"]))
            except (TypeError, ValueError) as exc:
                raise DomainError(f"{path}:{line_no}: bad Treasury row ({exc})") from exc
    order = np.argsort(tenors, kind="stable")
    return TreasuryCurve.tabulated(as_of, np.asarray(tenors)[order], np.asarray(yields)[order])


def trade_dates(prices: Iterable[PriceRecord]) -> List[date]:
    return sorted({price.trade_date for price in prices})


def term_bucket(record: IssueRecord, buckets: Sequence[float] = STANDARD_BUCKETS) -> float:
    term = year_fraction(record.issue_date, record.maturity_date)
    return min(buckets, key=lambda bucket: (abs(bucket - term), bucket))


def select_on_the_run(
    issues: Sequence[IssueRecord],
    as_of: date,
    buckets: Sequence[float] = STANDARD_BUCKETS,
) -> List[IssueRecord]:
    """Keeps the latest issue per original-term bucket; ties go to the smallest bond_id."""
    groups: Dict[float, List[IssueRecord]] = defaultdict(list)
    for record in issues:
        if record.issue_date <= as_of:
            groups[term_bucket(record, buckets)].append(record)
    survivors = [
        min(group, key=lambda record: (-record.issue_date.toordinal(), record.bond_id))
        for group in groups.values()
    ]
    return sorted(survivors, key=lambda record: record.bond_id)


def _on_the_run_ids(issues: Iterable[IssueRecord], as_of: date, buckets: Sequence[float]) -> set:
    by_issuer: Dict[str, List[IssueRecord]] = defaultdict(list)
    for record in issues:
        if record.is_vanilla and record.issue_date <= as_of < record.maturity_date:
            by_issuer[record.issuer_id].append(record)
    return {
        record.bond_id
        for records in by_issuer.values()
        for record in select_on_the_run(records, as_of, buckets)
    }


def _exclude(tally: IngestTally, reason: str, price: PriceRecord, strict: bool, message: str) -> None:
    setattr(tally, reason, getattr(tally, reason) + 1)
    if strict and reason == "unresolved_bond":
        raise DataIntegrityError(message)
    logger.debug("Excluded %s on %s: %s", price.bond_id, price.trade_date.isoformat(), message)


def build_panels(
    issues: Sequence[IssueRecord],
    prices: Sequence[PriceRecord],
    as_of: date,
    valuation: ValuationConfig = ValuationConfig(),
) -> Tuple[List[Panel], IngestTally]:
    issues_by_id: Dict[str, IssueRecord] = {}
    for record in issues:
        if record.bond_id in issues_by_id:
            logger.warning("Duplicate issue record for %s; keeping the last one", record.bond_id)
        issues_by_id[record.bond_id] = record
    on_the_run = _on_the_run_ids(issues_by_id.values(), as_of, valuation.buckets)

    tally = IngestTally()
    members: Dict[str, Dict[str, Tuple[PriceObservation, CashFlowSequence]]] = defaultdict(dict)
    for price in sorted(prices, key=lambda item: (item.bond_id, item.trade_date)):
        record = issues_by_id.get(price.bond_id)
        if record is None:
            logger.warning("Price for unknown bond %s", price.bond_id)
            _exclude(tally, "unresolved_bond", price, valuation.strict, f"unknown bond_id {price.bond_id}")
            continue
        if price.trade_date != as_of:
            _exclude(tally, "off_date", price, valuation.strict, "trade date differs from as_of")
            continue
        if not record.is_vanilla:
            _exclude(tally, "non_vanilla", price, valuation.strict, "not a vanilla bond")
            continue
        if not record.issue_date <= as_of < record.maturity_date:
            _exclude(tally, "matured", price, valuation.strict, "not live on as_of")
            continue
        if record.bond_id not in on_the_run:
            _exclude(tally, "not_on_the_run", price, valuation.strict, "superseded by a newer issue")
            continue
        if record.bond_id in members[record.issuer_id]:
            _exclude(tally, "duplicate", price, valuation.strict, "second price on the same date")
            continue

        bond = record.to_instrument()
        try:
            schedule = generate_schedule(bond, as_of).scaled(PRICE_BASIS / bond.face)
            observation = dirty_price(bond, price.clean_price, as_of, valuation.accrual)
        except DomainError as exc:
            _exclude(tally, "invalid_price", price, valuation.strict, str(exc))
            continue
        members[record.issuer_id][record.bond_id] = (observation, schedule)
        tally.kept += 1

    panels = [
        Panel(
            issuer_id=issuer_id,
            as_of=as_of,
            members=tuple(bonds[bond_id] for bond_id in sorted(bonds)),
        )
        for issuer_id, bonds in sorted(members.items())
        if bonds
    ]
    if tally.non_vanilla:
        logger.info("Skipped %s non-vanilla priced bond(s) on %s", tally.non_vanilla, as_of.isoformat())
    logger.info("Built %s panel(s) for %s (%s observations kept)", len(panels), as_of.isoformat(), tally.kept)
    return panels, tally
