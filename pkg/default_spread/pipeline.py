"""
High-level pipeline helpers: ingest, fit or filter every issuer, write outputs.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from default_spread.basis import UNIFORM, BasisDesign
from default_spread.bayes import NIGParams, default_prior, posterior_update
from default_spread.config import RunConfig
from default_spread.curves import SpreadCurve, TenorGrid, TreasuryCurve, spread_curve, treasury_from_panel
from default_spread.errors import DataIntegrityError, DomainError, EmptyPanelError, SpreadModelError
from default_spread.export import (
    TRACK_FILE,
    curve_payload,
    issuer_dir,
    write_fit_outputs,
    write_timeseries,
)
from default_spread.ingest import (
    Panel,
    ValuationConfig,
    build_panels,
    read_issues,
    read_prices,
    read_treasury,
    trade_dates,
)
from default_spread.lsq import condition_number, fit_ols, fit_rwls, fit_wls
from default_spread.models import IssueRecord, PriceRecord
from default_spread.statespace import IssuerTrack, load_track, run_filter, save_track

logger = logging.getLogger(__name__)

Item = TypeVar("Item")
Result = TypeVar("Result")


@dataclass(frozen=True, eq=False)
class IssuerFit:
    issuer_id: str
    as_of: date
    estimator: str
    n_obs: int
    condition: float
    beta_full: np.ndarray
    curve: SpreadCurve
    lam: Optional[float] = None
    posterior: Optional[NIGParams] = None


def _map(func: Callable[[Item], Result], items: Sequence[Item], jobs: int) -> List[Result]:
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def valuation_config(cfg: RunConfig) -> ValuationConfig:
    return ValuationConfig(accrual=cfg.accrual, strict=cfg.strict)


def load_inputs(cfg: RunConfig) -> Tuple[List[IssueRecord], List[PriceRecord]]:
    issues = read_issues(cfg.issues, strict=cfg.strict)
    prices = read_prices(cfg.prices, strict=cfg.strict)
    return issues, prices


def resolve_as_of(prices: Sequence[PriceRecord], as_of: Optional[date] = None) -> date:
    dates = trade_dates(prices)
    if as_of is not None:
        if as_of not in dates:
            logger.warning("No prices dated %s in the price file", as_of.isoformat())
        return as_of
    if len(dates) != 1:
        raise DomainError(f"price file holds {len(dates)} trade dates; pass --as-of")
    return dates[0]


def dates_in_range(prices: Sequence[PriceRecord], date_from: Optional[date], date_to: Optional[date]) -> List[date]:
    return [
        day
        for day in trade_dates(prices)
        if (date_from is None or day >= date_from) and (date_to is None or day <= date_to)
    ]


def weight_scheme(cfg: RunConfig) -> str:
    return UNIFORM if cfg.estimator == "ols" else cfg.weights


def bayes_prior(cfg: RunConfig) -> NIGParams:
    return default_prior(cfg.K, lam=cfg.lam, ig_shape=cfg.prior_shape, sigma2=cfg.prior_sigma2)


class TreasurySource:
    """Treasury curve per state date, from a tabulated file or a designated issuer's panel."""

    def __init__(self, cfg: RunConfig, issues: Sequence[IssueRecord], prices: Sequence[PriceRecord]) -> None:
        self.cfg = cfg
        self.issues = issues
        self.prices = prices
        self._tabulated = None if cfg.treasury_issuer else read_treasury(cfg.treasury)

    def on(self, as_of: date, panels: Optional[Sequence[Panel]] = None) -> TreasuryCurve:
        if self._tabulated is not None:
            return self._tabulated.on(as_of)
        if panels is None:
            panels, _ = build_panels(self.issues, self.prices, as_of, valuation_config(self.cfg))
        for panel in panels:
            if panel.issuer_id == self.cfg.treasury_issuer:
                design = panel.design(self.cfg.basis, self.cfg.weights)
                return treasury_from_panel(design, self.cfg.basis, as_of, self.cfg.lam)
        raise EmptyPanelError(f"no prices for Treasury issuer {self.cfg.treasury_issuer} on {as_of.isoformat()}")


def fit_issuer(panel: Panel, cfg: RunConfig, treasury: TreasuryCurve, grid: TenorGrid) -> IssuerFit:
    basis = cfg.basis
    design = panel.design(basis, weight_scheme(cfg))
    posterior = None
    lam = None
    if cfg.estimator == "ols":
        beta = fit_ols(design).beta_full
    elif cfg.estimator == "wls":
        beta = fit_wls(design).beta_full
    elif cfg.estimator == "rwls":
        lam = cfg.lam
        beta = fit_rwls(design, lam).beta_full
    else:
        lam = cfg.lam
        posterior = posterior_update(bayes_prior(cfg), design)
        beta = posterior.beta_full

    curve = spread_curve(
        posterior if posterior is not None else beta,
        treasury,
        grid,
        basis,
        level=cfg.level,
        issuer_id=panel.issuer_id,
        as_of=panel.as_of,
    )
    condition = condition_number(design)
    logger.debug("%s: N=%s condition=%.3g", panel.issuer_id, design.N, condition)
    return IssuerFit(
        issuer_id=panel.issuer_id,
        as_of=panel.as_of,
        estimator=cfg.estimator,
        n_obs=design.N,
        condition=condition,
        beta_full=beta,
        curve=curve,
        lam=lam,
        posterior=posterior,
    )


def _guarded(issuer_id: str, strict: bool, func: Callable[[], Result]) -> Optional[Result]:
    try:
        return func()
    except DataIntegrityError:
        raise
    except SpreadModelError as exc:
        if strict:
            raise DataIntegrityError(f"{issuer_id}: {exc}") from exc
        logger.error("Skipping %s: %s", issuer_id, exc)
        return None


def fit_universe(cfg: RunConfig, grid: Optional[TenorGrid] = None) -> List[IssuerFit]:
    grid = grid or TenorGrid()

    logger.info("Step 1: Loading issues and prices...")
    issues, prices = load_inputs(cfg)
    as_of = resolve_as_of(prices, cfg.as_of)

    logger.info("Step 2: Building panels for %s...", as_of.isoformat())
    panels, tally = build_panels(issues, prices, as_of, valuation_config(cfg))
    logger.debug("Ingest tally: %s", tally.as_dict())
    treasury = TreasurySource(cfg, issues, prices).on(as_of, panels)
    panels = [panel for panel in panels if panel.issuer_id != cfg.treasury_issuer]

    logger.info("Step 3: Fitting %s issuer(s) with %s...", len(panels), cfg.estimator)
    fits = _map(
        lambda panel: _guarded(panel.issuer_id, cfg.strict, lambda: fit_issuer(panel, cfg, treasury, grid)),
        panels,
        cfg.jobs,
    )
    fits = [fit for fit in fits if fit is not None]
    if not fits:
        raise EmptyPanelError(f"no issuer produced a curve on {as_of.isoformat()}")

    logger.info("Step 4: Writing outputs to %s...", cfg.out)
    for fit in fits:
        payload = curve_payload(
            fit.curve,
            fit.beta_full,
            cfg.basis,
            fit.estimator,
            fit.n_obs,
            fit.condition,
            lam=fit.lam,
            posterior=fit.posterior,
        )
        write_fit_outputs(cfg.out, fit.curve, payload)
    return fits


def _resume_tracks(cfg: RunConfig, issuer_ids: Sequence[str]) -> Dict[str, IssuerTrack]:
    if cfg.resume is None:
        return {}
    resume = Path(cfg.resume)
    if resume.is_file():
        candidates = [resume]
    else:
        candidates = [issuer_dir(resume, issuer_id) / TRACK_FILE for issuer_id in issuer_ids]

    tracks: Dict[str, IssuerTrack] = {}
    for path in candidates:
        if not path.exists():
            continue
        track, basis = load_track(path)
        if basis != cfg.basis:
            raise DomainError(f"{path}: track basis {basis} differs from --K/--alpha-decay")
        if track.config != cfg.filter:
            logger.warning("%s: continuing with the stored filter settings", path)
        tracks[track.issuer_id] = track
        logger.info("Resuming %s from %s (%s states)", track.issuer_id, path, len(track.states))
    return tracks


def filter_universe(cfg: RunConfig, grid: Optional[TenorGrid] = None) -> Dict[str, IssuerTrack]:
    grid = grid or TenorGrid()
    basis = cfg.basis

    logger.info("Step 1: Loading issues and prices...")
    issues, prices = load_inputs(cfg)
    dates = dates_in_range(prices, cfg.date_from, cfg.date_to)
    if not dates:
        raise DomainError("no trade dates inside --from/--to")

    logger.info("Step 2: Building panels for %s state(s)...", len(dates))
    valuation = valuation_config(cfg)
    panels_by_date: Dict[date, Dict[str, Panel]] = {}
    for day in dates:
        panels, tally = build_panels(issues, prices, day, valuation)
        logger.debug("Ingest tally %s: %s", day.isoformat(), tally.as_dict())
        panels_by_date[day] = {panel.issuer_id: panel for panel in panels}
    issuer_ids = sorted(
        {issuer_id for panels in panels_by_date.values() for issuer_id in panels} - {cfg.treasury_issuer}
    )
    resumed = _resume_tracks(cfg, issuer_ids)

    def designs_for(issuer_id: str) -> List[Tuple[date, BasisDesign]]:
        track = resumed.get(issuer_id)
        after = track.last.state_date if track is not None else None
        designs = []
        for day in dates:
            if after is not None and day <= after:
                continue
            panel = panels_by_date[day].get(issuer_id)
            design = panel.design(basis, cfg.weights) if panel is not None else BasisDesign.empty(basis)
            designs.append((day, design))
        return designs

    def run(issuer_id: str) -> Optional[IssuerTrack]:
        return run_filter(
            issuer_id,
            designs_for(issuer_id),
            cfg.filter,
            prior=bayes_prior(cfg),
            resume_from=resumed.get(issuer_id),
        )

    logger.info("Step 3: Filtering %s issuer(s)...", len(issuer_ids))
    results = _map(lambda issuer_id: _guarded(issuer_id, cfg.strict, lambda: run(issuer_id)), issuer_ids, cfg.jobs)
    tracks = {issuer_id: track for issuer_id, track in zip(issuer_ids, results) if track is not None}
    if not tracks:
        raise EmptyPanelError("no issuer produced a track inside --from/--to")

    logger.info("Step 4: Writing tracks and time series to %s...", cfg.out)
    source = TreasurySource(cfg, issues, prices)
    treasury_by_date: Dict[date, TreasuryCurve] = {}
    for issuer_id, track in tracks.items():
        curves = []
        for state in track.states:
            if state.state_date not in treasury_by_date:
                treasury_by_date[state.state_date] = source.on(
                    state.state_date, list(panels_by_date.get(state.state_date, {}).values()) or None
                )
            curves.append(
                spread_curve(
                    state.posterior,
                    treasury_by_date[state.state_date],
                    grid,
                    basis,
                    level=cfg.level,
                    issuer_id=issuer_id,
                    as_of=state.state_date,
                )
            )
        save_track(track, issuer_dir(cfg.out, issuer_id) / TRACK_FILE, basis)
        write_timeseries(cfg.out, issuer_id, curves)
    return tracks
