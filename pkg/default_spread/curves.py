"""
Yield curves, default spreads, integrated risk and the Treasury curve.

All rates are continuously compounded. Spreads are issuer zero yield minus
Treasury zero yield on a tenor grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from default_spread.basis import BasisConfig, BasisDesign, concat_designs, discount_value, reduced_basis_vector
from default_spread.bayes import NIGParams, credible_interval, predictive
from default_spread.cashflow import CashFlowSequence
from default_spread.errors import DomainError, EmptyPanelError, RankDeficiencyError
from default_spread.lsq import DEFAULT_LAMBDA, fit_rwls, fit_wls

logger = logging.getLogger(__name__)

FITTED = "fitted"
TABULATED = "tabulated"
DEFAULT_RISK_HORIZONS = (1.0, 2.0, 5.0, 10.0, 20.0, 30.0)


@dataclass(frozen=True, eq=False)
class TenorGrid:
    tenors: np.ndarray = field(default_factory=lambda: 0.25 * np.arange(1, 121))

    def __post_init__(self) -> None:
        tenors = np.asarray(self.tenors, dtype=float).reshape(-1)
        if tenors.size == 0 or np.any(tenors <= 0) or np.any(np.diff(tenors) <= 0):
            raise DomainError("tenor grid must be nonempty, positive and strictly increasing")
        object.__setattr__(self, "tenors", tenors)


@dataclass(frozen=True, eq=False)
class TreasuryCurve:
    as_of: Optional[date]
    mode: str
    beta: Optional[np.ndarray] = None
    basis: Optional[BasisConfig] = None
    knot_tenors: Optional[np.ndarray] = None
    knot_yields: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.mode == FITTED:
            if self.beta is None or self.basis is None:
                raise DomainError("fitted Treasury curve needs beta and basis config")
            beta = np.asarray(self.beta, dtype=float)
            if abs(beta.sum() - 1.0) > 1e-10:
                raise DomainError("fitted Treasury beta must sum to 1")
            object.__setattr__(self, "beta", beta)
        elif self.mode == TABULATED:
            if self.knot_tenors is None or self.knot_yields is None:
                raise DomainError("tabulated Treasury curve needs tenors and yields")
            tenors = np.asarray(self.knot_tenors, dtype=float)
            yields = np.asarray(self.knot_yields, dtype=float)
            if tenors.size == 0 or tenors.shape != yields.shape:
                raise DomainError("tabulated Treasury curve needs matching nonempty tenors and yields")
            if np.any(np.diff(tenors) <= 0) or not np.all(np.isfinite(yields)):
                raise DomainError("Treasury tenors must increase and yields must be finite")
            object.__setattr__(self, "knot_tenors", tenors)
            object.__setattr__(self, "knot_yields", yields)
        else:
            raise DomainError(f"Unknown Treasury curve mode: {self.mode}")

    @classmethod
    def fitted(cls, as_of: Optional[date], beta: np.ndarray, basis: BasisConfig) -> "TreasuryCurve":
        return cls(as_of=as_of, mode=FITTED, beta=beta, basis=basis)

    @classmethod
    def tabulated(cls, as_of: Optional[date], tenors: Sequence[float], yields: Sequence[float]) -> "TreasuryCurve":
        return cls(as_of=as_of, mode=TABULATED, knot_tenors=tenors, knot_yields=yields)

    def on(self, as_of: date) -> "TreasuryCurve":
        return replace(self, as_of=as_of)

    def discount(self, t: Union[float, np.ndarray]):
        if self.mode == FITTED:
            return discount_value(self.beta, t, self.basis)
        return np.exp(-self.zero_yield(t) * np.asarray(t, dtype=float))

    def zero_yield(self, t: Union[float, np.ndarray]):
        if self.mode == TABULATED:
            # linear in yield, flat beyond the end knots
            values = np.interp(t, self.knot_tenors, self.knot_yields)
            return float(values) if np.ndim(t) == 0 else values
        t_arr = np.asarray(t, dtype=float)
        values = -np.log(self.discount(t_arr)) / t_arr
        return float(values) if np.ndim(t) == 0 else values


@dataclass(frozen=True, eq=False)
class SpreadCurve:
    issuer_id: str
    as_of: Optional[date]
    tenors: np.ndarray
    spread: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    level: float
    risk_to: Dict[float, float] = field(default_factory=dict)
    violations: Tuple[float, ...] = ()


def yield_from_discount(d_value: float, t: float) -> float:
    if not t > 0:
        raise DomainError(f"yield undefined at tenor {t}")
    if not d_value > 0:
        raise DomainError(f"discount value {d_value} at tenor {t} is not positive")
    return -math.log(d_value) / t


def discount_band(posterior: NIGParams, t: float, cfg: BasisConfig, level: float) -> Tuple[float, float, float]:
    """(point, lo, hi) for d(t), priced as a unit zero-coupon payment at t."""
    x, offset = reduced_basis_vector(CashFlowSequence(times=np.array([t]), amounts=np.array([1.0])), cfg)
    pred = predictive(posterior, x, include_noise=False)
    lo, hi = credible_interval(pred, level)
    return pred.location + offset, lo + offset, hi + offset


def _spread_or_nan(d_value: float, t: float, treasury_yield: float) -> float:
    if not d_value > 0:
        return math.nan
    return yield_from_discount(d_value, t) - treasury_yield


def spread_curve(
    issuer: Union[np.ndarray, NIGParams],
    treasury: TreasuryCurve,
    grid: TenorGrid,
    cfg: BasisConfig,
    level: float = 0.95,
    issuer_id: str = "",
    as_of: Optional[date] = None,
    risk_horizons: Sequence[float] = DEFAULT_RISK_HORIZONS,
) -> SpreadCurve:
    if as_of is not None and treasury.as_of is not None and treasury.as_of != as_of:
        raise DomainError(
            f"Treasury curve is dated {treasury.as_of.isoformat()}, issuer state is {as_of.isoformat()}"
        )

    posterior = issuer if isinstance(issuer, NIGParams) else None
    beta = posterior.beta_full if posterior is not None else np.asarray(issuer, dtype=float)
    treasury_yields = treasury.zero_yield(grid.tenors)

    spread = np.empty(grid.tenors.size)
    band_lo = np.empty(grid.tenors.size)
    band_hi = np.empty(grid.tenors.size)
    violations = []
    for i, t in enumerate(grid.tenors):
        if posterior is not None:
            d_point, d_lo, d_hi = discount_band(posterior, t, cfg, level)
        else:
            d_point = d_lo = d_hi = discount_value(beta, t, cfg)
        if not 0 < d_point <= 1:
            violations.append(float(t))
        spread[i] = _spread_or_nan(d_point, t, treasury_yields[i])
        if math.isnan(spread[i]):
            band_lo[i] = band_hi[i] = math.nan
            continue
        # lower discount bound gives the upper yield bound
        band_lo[i] = _spread_or_nan(d_hi, t, treasury_yields[i])
        band_hi[i] = _spread_or_nan(d_lo, t, treasury_yields[i]) if d_lo > 0 else math.inf

    if violations:
        logger.warning(
            "%s: discount outside (0, 1] at %s tenor(s), first at %.4g",
            issuer_id or "issuer",
            len(violations),
            violations[0],
        )

    curve = SpreadCurve(
        issuer_id=issuer_id,
        as_of=as_of if as_of is not None else treasury.as_of,
        tenors=grid.tenors,
        spread=spread,
        band_lo=band_lo,
        band_hi=band_hi,
        level=level,
        violations=tuple(violations),
    )
    risk_to = {
        float(horizon): integrated_risk(curve, horizon)
        for horizon in risk_horizons
        if horizon <= grid.tenors[-1]
    }
    return replace(curve, risk_to=risk_to)


def integrated_risk(spread: SpreadCurve, T: float) -> float:
    """
    Integral of the spread from 0 to T: trapezoids on the grid, with the
    first segment [0, t1] taken as s(t1) * t1.
    """
    tenors, values = spread.tenors, spread.spread
    if not 0 < T <= tenors[-1] + 1e-12:
        raise DomainError(f"T={T} outside the tenor grid (0, {tenors[-1]}]")
    if T <= tenors[0]:
        return float(values[0] * T)

    inside = tenors <= T
    knots_t = tenors[inside]
    knots_s = values[inside]
    if knots_t[-1] < T:
        knots_t = np.append(knots_t, T)
        knots_s = np.append(knots_s, np.interp(T, tenors, values))
    head = values[0] * tenors[0]
    body = np.sum(0.5 * (knots_s[1:] + knots_s[:-1]) * np.diff(knots_t))
    return float(head + body)


def spread_at(curve: SpreadCurve, tenor: float) -> Tuple[float, float, float]:
    """(spread, band_lo, band_hi) at a tenor, interpolating between grid points."""
    matches = np.flatnonzero(np.isclose(curve.tenors, tenor, rtol=0.0, atol=1e-12))
    if matches.size:
        i = int(matches[0])
        return float(curve.spread[i]), float(curve.band_lo[i]), float(curve.band_hi[i])
    if not curve.tenors[0] <= tenor <= curve.tenors[-1]:
        raise DomainError(f"tenor {tenor} outside the curve grid")
    return (
        float(np.interp(tenor, curve.tenors, curve.spread)),
        float(np.interp(tenor, curve.tenors, curve.band_lo)),
        float(np.interp(tenor, curve.tenors, curve.band_hi)),
    )


def treasury_from_panel(
    designs: Union[BasisDesign, Sequence[BasisDesign]],
    cfg: BasisConfig,
    as_of: Optional[date] = None,
    lam: float = DEFAULT_LAMBDA,
) -> TreasuryCurve:
    if isinstance(designs, BasisDesign):
        designs = [designs]
    designs = [design for design in designs if not design.is_empty]
    if not designs:
        raise EmptyPanelError("cannot fit a Treasury curve from an empty panel")
    design = concat_designs(designs)

    try:
        fit = fit_wls(design)
    except RankDeficiencyError as exc:
        logger.warning("Treasury panel cannot support WLS (%s); falling back to ridge lambda=%s", exc, lam)
        fit = fit_rwls(design, lam)
    logger.debug("Treasury fit %s on N=%s, condition %.3g", fit.method, design.N, fit.condition)
    return TreasuryCurve.fitted(as_of, fit.beta_full, cfg)
