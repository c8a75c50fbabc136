"""
Synthetic bond universes with known Treasury and default-risk discount functions.

Prices are computed from d_time(t) * d_risk(t) with d_risk(t) = exp(-s(t) t),
so the true default spread at every tenor is s(t). Gaussian noise is added to
the dirty price; the clean price written to file is dirty minus accrued
interest under the chosen convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dateutil.relativedelta import relativedelta

from default_spread.basis import BasisConfig
from default_spread.cashflow import TIME_TO_NEXT, PRICE_BASIS, BondInstrument, accrued_per_hundred, generate_schedule
from default_spread.config import tomllib
from default_spread.curves import DEFAULT_RISK_HORIZONS, SpreadCurve, TenorGrid, TreasuryCurve, integrated_risk
from default_spread.errors import DomainError
from default_spread.models import ISSUE_COLUMNS, PRICE_COLUMNS, TREASURY_COLUMNS
from default_spread.utils import atomic_write_text, csv_text, format_exact, parse_date

logger = logging.getLogger(__name__)

FLAT = "flat"
LINEAR = "linear"
WIDENING = "widening"
SPREAD_KINDS = (FLAT, LINEAR, WIDENING)

DEFAULT_TERMS = (1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0)
DEFAULT_START = date(2024, 1, 2)
DEFAULT_TREASURY_BETA = (0.8, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

TRUTH_COLUMNS = ("state_date", "tenor", "true_spread")


@dataclass(frozen=True)
class SyntheticIssuerSpec:
    """
    Spread shapes: flat(level), linear(level + slope * t) and
    widening(level + step * state_index).
    """

    issuer_id: str
    spread_kind: str = FLAT
    level: float = 0.02
    slope: float = 0.0
    step: float = 0.0
    bond_terms: Tuple[float, ...] = DEFAULT_TERMS
    coupon_rate: float = 0.05
    coupon_freq: int = 2
    face: float = 1000.0
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.spread_kind not in SPREAD_KINDS:
            raise DomainError(f"unknown spread kind {self.spread_kind!r}")
        if self.noise_sd < 0:
            raise DomainError("noise_sd must be nonnegative")
        if not self.bond_terms or any(term <= 0 for term in self.bond_terms):
            raise DomainError("bond_terms must be positive")

    def spread_at(self, t, state_index: int = 0):
        t = np.asarray(t, dtype=float)
        if self.spread_kind == LINEAR:
            return self.level + self.slope * t
        if self.spread_kind == WIDENING:
            return np.full_like(t, self.level + self.step * state_index)
        return np.full_like(t, self.level)

    def bonds(self, start_date: date) -> List[BondInstrument]:
        issue_date = start_date - relativedelta(months=1)
        return [
            BondInstrument(
                bond_id=f"{self.issuer_id}-{term:g}Y",
                issuer_id=self.issuer_id,
                issue_date=issue_date,
                maturity_date=issue_date + relativedelta(months=int(round(term * 12))),
                coupon_rate=self.coupon_rate,
                coupon_freq=self.coupon_freq,
                face=self.face,
            )
            for term in self.bond_terms
        ]


@dataclass
class SyntheticUniverse:
    bonds: List[BondInstrument]
    state_dates: List[date]
    prices: List[List[Tuple[str, date, float]]]
    truth: List[SpreadCurve]
    treasury: TreasuryCurve
    grid: TenorGrid = field(default_factory=TenorGrid)

    def issues_csv(self) -> str:
        rows = [
            [
                bond.bond_id,
                bond.issuer_id,
                bond.issue_date.isoformat(),
                bond.maturity_date.isoformat(),
                format_exact(bond.coupon_rate),
                str(bond.coupon_freq),
                format_exact(bond.face),
                "false",
                "false",
                "false",
                "true",
            ]
            for bond in self.bonds
        ]
        return csv_text(ISSUE_COLUMNS, rows)

    def prices_csv(self, state_index: Optional[int] = None) -> str:
        states = range(len(self.prices)) if state_index is None else [state_index]
        rows = [
            [bond_id, trade_date.isoformat(), format_exact(clean)]
            for index in states
            for bond_id, trade_date, clean in self.prices[index]
        ]
        return csv_text(PRICE_COLUMNS, rows)

    def treasury_csv(self) -> str:
        yields = self.treasury.zero_yield(self.grid.tenors)
        rows = [[format_exact(t), format_exact(y)] for t, y in zip(self.grid.tenors, yields)]
        return csv_text(TREASURY_COLUMNS, rows)

    def truth_csv(self) -> str:
        rows = [
            [curve.as_of.isoformat(), format_exact(t), format_exact(s)]
            for curve in self.truth
            for t, s in zip(curve.tenors, curve.spread)
        ]
        return csv_text(TRUTH_COLUMNS, rows)


def default_treasury(as_of: Optional[date] = None, basis: Optional[BasisConfig] = None) -> TreasuryCurve:
    basis = basis or BasisConfig()
    beta = np.zeros(basis.K)
    head = np.asarray(DEFAULT_TREASURY_BETA[: basis.K], dtype=float)
    beta[: head.size] = head
    beta[-1] += 1.0 - beta.sum()
    return TreasuryCurve.fitted(as_of, beta, basis)


def _truth_curve(spec: SyntheticIssuerSpec, state_index: int, as_of: date, grid: TenorGrid) -> SpreadCurve:
    spread = np.asarray(spec.spread_at(grid.tenors, state_index), dtype=float)
    curve = SpreadCurve(
        issuer_id=spec.issuer_id,
        as_of=as_of,
        tenors=grid.tenors,
        spread=spread,
        band_lo=spread.copy(),
        band_hi=spread.copy(),
        level=0.0,
    )
    risk_to = {
        horizon: integrated_risk(curve, horizon)
        for horizon in DEFAULT_RISK_HORIZONS
        if horizon <= grid.tenors[-1]
    }
    return replace(curve, risk_to=risk_to)


def generate_universe(
    spec: SyntheticIssuerSpec,
    treasury: TreasuryCurve,
    n_states: int,
    start_date: date = DEFAULT_START,
    grid: Optional[TenorGrid] = None,
    accrual: str = TIME_TO_NEXT,
) -> SyntheticUniverse:
    if n_states < 1:
        raise DomainError("n_states must be at least 1")
    grid = grid or TenorGrid()
    rng = np.random.default_rng(spec.seed)
    bonds = spec.bonds(start_date)

    state_dates: List[date] = []
    prices: List[List[Tuple[str, date, float]]] = []
    truth: List[SpreadCurve] = []
    for index in range(n_states):
        as_of = start_date + timedelta(days=index)
        state_rows: List[Tuple[str, date, float]] = []
        for bond in bonds:
            if as_of >= bond.maturity_date:
                continue
            schedule = generate_schedule(bond, as_of).scaled(PRICE_BASIS / bond.face)
            spread = spec.spread_at(schedule.times, index)
            discount = treasury.discount(schedule.times) * np.exp(-spread * schedule.times)
            dirty = float(schedule.amounts @ discount)
            if spec.noise_sd > 0:
                dirty += float(rng.normal(0.0, spec.noise_sd))
            clean = dirty - accrued_per_hundred(bond, as_of, accrual)
            state_rows.append((bond.bond_id, as_of, clean))
        state_dates.append(as_of)
        prices.append(state_rows)
        truth.append(_truth_curve(spec, index, as_of, grid))

    logger.debug("Generated %s states for %s (%s bonds)", n_states, spec.issuer_id, len(bonds))
    return SyntheticUniverse(
        bonds=bonds,
        state_dates=state_dates,
        prices=prices,
        truth=truth,
        treasury=treasury,
        grid=grid,
    )


def merge_universes(universes: Sequence[SyntheticUniverse]) -> SyntheticUniverse:
    if not universes:
        raise DomainError("nothing to merge")
    first = universes[0]
    n_states = len(first.state_dates)
    if any(len(universe.state_dates) != n_states for universe in universes):
        raise DomainError("universes must share the state calendar")
    return SyntheticUniverse(
        bonds=[bond for universe in universes for bond in universe.bonds],
        state_dates=list(first.state_dates),
        prices=[[row for universe in universes for row in universe.prices[i]] for i in range(n_states)],
        truth=[curve for universe in universes for curve in universe.truth],
        treasury=first.treasury,
        grid=first.grid,
    )


def write_universe(universe: SyntheticUniverse, out_dir: Path) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        "issues": out_dir / "issues.csv",
        "prices": out_dir / "prices.csv",
        "treasury": out_dir / "treasury.csv",
        "truth": out_dir / "truth.csv",
    }
    atomic_write_text(paths["issues"], universe.issues_csv())
    atomic_write_text(paths["prices"], universe.prices_csv())
    atomic_write_text(paths["treasury"], universe.treasury_csv())
    atomic_write_text(paths["truth"], universe.truth_csv())
    for path in paths.values():
        logger.info("Saved: %s", path)
    return paths


def _issuer_from_table(table: dict, default_seed: int) -> SyntheticIssuerSpec:
    spread = table.get("spread", {})
    return SyntheticIssuerSpec(
        issuer_id=str(table["id"]),
        spread_kind=str(spread.get("kind", FLAT)),
        level=float(spread.get("level", 0.02)),
        slope=float(spread.get("slope", 0.0)),
        step=float(spread.get("step", 0.0)),
        bond_terms=tuple(float(term) for term in table.get("bond_terms", DEFAULT_TERMS)),
        coupon_rate=float(table.get("coupon_rate", 0.05)),
        coupon_freq=int(table.get("coupon_freq", 2)),
        face=float(table.get("face", 1000.0)),
        noise_sd=float(table.get("noise_sd", 0.0)),
        seed=int(table.get("seed", default_seed)),
    )


def load_universe_spec(path: Path, seed: Optional[int] = None):
    """
    Reads a TOML universe spec. Returns (issuer specs, treasury, n_states,
    start_date). A seed given here overrides every issuer's seed by offset.
    """
    try:
        with Path(path).open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise DomainError(f"{path}: invalid TOML ({exc})") from exc

    try:
        universe = data.get("universe", {})
        n_states = int(universe.get("n_states", 1))
        start_date = parse_date(universe.get("start_date", DEFAULT_START.isoformat()))
        base_seed = int(universe.get("seed", 0)) if seed is None else int(seed)

        basis_table = data.get("basis", {})
        basis = BasisConfig(
            K=int(basis_table.get("K", 8)),
            basis_decay=float(basis_table.get("alpha_decay", 0.05)),
        )
        treasury_table = data.get("treasury", {})
        if "tenors" in treasury_table:
            treasury = TreasuryCurve.tabulated(
                start_date,
                [float(t) for t in treasury_table["tenors"]],
                [float(y) for y in treasury_table["yields"]],
            )
        elif "beta" in treasury_table:
            treasury = TreasuryCurve.fitted(start_date, np.array(treasury_table["beta"], dtype=float), basis)
        else:
            treasury = default_treasury(start_date, basis)

        issuer_tables = data.get("issuer", [])
        if not issuer_tables:
            raise DomainError(f"{path}: no [[issuer]] tables")
        issuers = []
        for offset, table in enumerate(issuer_tables):
            issuer = _issuer_from_table(table, base_seed + offset)
            if seed is not None:
                issuer = replace(issuer, seed=base_seed + offset)
            issuers.append(issuer)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{path}: malformed universe spec ({exc})") from exc
    return issuers, treasury, n_states, start_date
