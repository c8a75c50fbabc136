"""
Random-walk evolution of an issuer's posterior across trading dates.

Between states the location is carried forward, the scaled covariance is
bumped by ``ridge_bump * I`` and the inverse-gamma prior on the noise variance
is moment matched so its mean grows by ``delta_sq`` and its variance by
``epsilon``. The posterior noise variance is floored at ``delta_sq`` so a run
of exactly priced states cannot collapse it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

from default_spread.basis import BasisConfig, BasisDesign
from default_spread.bayes import NIGParams, default_prior, posterior_update, sigma2_mean
from default_spread.errors import DomainError, OrderingError, TrackFormatError, UndefinedVarianceError
from default_spread.utils import atomic_write_text, parse_date

logger = logging.getLogger(__name__)

TRACK_FORMAT = "default-spread-track"
TRACK_VERSION = 1


@dataclass(frozen=True)
class FilterConfig:
    delta_sq: float = 1e-4
    epsilon: float = 1e-6
    ridge_bump: float = 1e-3
    scale_by_business_days: bool = False

    def __post_init__(self) -> None:
        if self.delta_sq < 0 or self.epsilon < 0:
            raise DomainError("delta_sq and epsilon must be nonnegative")
        if not self.ridge_bump > 0:
            raise DomainError(f"ridge_bump must be positive, got {self.ridge_bump}")


@dataclass(frozen=True)
class TrackState:
    state_date: date
    posterior: NIGParams
    n_obs: int


@dataclass(frozen=True)
class IssuerTrack:
    issuer_id: str
    config: FilterConfig
    states: Tuple[TrackState, ...] = field(default_factory=tuple)

    @property
    def last(self) -> TrackState:
        if not self.states:
            raise DomainError(f"track for {self.issuer_id} has no states")
        return self.states[-1]

    @property
    def dates(self) -> Tuple[date, ...]:
        return tuple(state.state_date for state in self.states)

    def appended(self, state: TrackState) -> "IssuerTrack":
        return replace(self, states=self.states + (state,))


def propagate_prior(prev_posterior: NIGParams, cfg: FilterConfig, delta_sq: Optional[float] = None) -> NIGParams:
    shape, scale = prev_posterior.ig_shape, prev_posterior.ig_scale
    if shape <= 2:
        raise UndefinedVarianceError(f"inverse-gamma variance undefined for shape {shape} <= 2")
    amplifier = cfg.delta_sq if delta_sq is None else delta_sq

    mean = scale / (shape - 1.0)
    shifted_mean = mean + amplifier
    shifted_var = mean ** 2 / (shape - 2.0) + cfg.epsilon
    new_shape = shifted_mean ** 2 / shifted_var + 2.0
    new_scale = shifted_mean * (new_shape - 1.0)

    Lambda = prev_posterior.Lambda + cfg.ridge_bump * np.eye(prev_posterior.mu.size)
    return NIGParams(mu=prev_posterior.mu.copy(), Lambda=Lambda, ig_shape=new_shape, ig_scale=new_scale)


def floor_sigma2(posterior: NIGParams, floor: float) -> NIGParams:
    if sigma2_mean(posterior) >= floor:
        return posterior
    logger.debug("Flooring E[s2]=%.6g at %.6g", sigma2_mean(posterior), floor)
    return NIGParams(
        mu=posterior.mu,
        Lambda=posterior.Lambda,
        ig_shape=posterior.ig_shape,
        ig_scale=floor * (posterior.ig_shape - 1.0),
    )


def scaled_delta_sq(cfg: FilterConfig, previous: date, current: date) -> float:
    if not cfg.scale_by_business_days:
        return cfg.delta_sq
    elapsed = int(np.busday_count(previous, current))
    return cfg.delta_sq * max(elapsed, 1)


def initialize_track(
    issuer_id: str,
    first_design: BasisDesign,
    cfg: FilterConfig,
    state_date: date,
    prior: Optional[NIGParams] = None,
    lam: float = 1.0,
) -> IssuerTrack:
    if first_design.is_empty:
        raise DomainError(f"cannot start a track for {issuer_id} from an empty design")
    if prior is None:
        prior = default_prior(first_design.columns + 1, lam=lam)
    posterior = posterior_update(prior, first_design)
    track = IssuerTrack(issuer_id=issuer_id, config=cfg)
    return track.appended(TrackState(state_date=state_date, posterior=posterior, n_obs=first_design.N))


def filter_step(track: IssuerTrack, design: BasisDesign, state_date: date) -> IssuerTrack:
    last = track.last
    if state_date <= last.state_date:
        raise OrderingError(
            f"{track.issuer_id}: state {state_date.isoformat()} is not after {last.state_date.isoformat()}"
        )
    amplifier = scaled_delta_sq(track.config, last.state_date, state_date)
    prior = propagate_prior(last.posterior, track.config, amplifier)
    posterior = posterior_update(prior, design)
    posterior = floor_sigma2(posterior, track.config.delta_sq)
    logger.debug(
        "%s %s: N=%s E[s2]=%.6g shape=%.4g",
        track.issuer_id,
        state_date.isoformat(),
        design.N,
        sigma2_mean(posterior),
        posterior.ig_shape,
    )
    return track.appended(TrackState(state_date=state_date, posterior=posterior, n_obs=design.N))


def run_filter(
    issuer_id: str,
    designs: Iterable[Tuple[date, BasisDesign]],
    cfg: FilterConfig,
    prior: Optional[NIGParams] = None,
    lam: float = 1.0,
    resume_from: Optional[IssuerTrack] = None,
) -> Optional[IssuerTrack]:
    """Filters an ordered sequence of (date, design); leading empty designs are skipped."""
    track = resume_from
    for state_date, design in designs:
        if track is None:
            if design.is_empty:
                logger.info("%s: no observations on %s, waiting for first panel", issuer_id, state_date.isoformat())
                continue
            track = initialize_track(issuer_id, design, cfg, state_date, prior=prior, lam=lam)
        else:
            track = filter_step(track, design, state_date)
    return track


def _config_from_dict(data: dict) -> FilterConfig:
    try:
        return FilterConfig(
            delta_sq=float(data["delta_sq"]),
            epsilon=float(data["epsilon"]),
            ridge_bump=float(data["ridge_bump"]),
            scale_by_business_days=bool(data.get("scale_by_business_days", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TrackFormatError(f"invalid filter config in track file: {exc}") from exc


def track_to_dict(track: IssuerTrack, basis: BasisConfig) -> dict:
    return {
        "format": TRACK_FORMAT,
        "version": TRACK_VERSION,
        "issuer_id": track.issuer_id,
        "config": asdict(track.config),
        "basis": asdict(basis),
        "states": [
            {
                "state_date": state.state_date.isoformat(),
                "n_obs": state.n_obs,
                "mu": state.posterior.mu.tolist(),
                "Lambda": state.posterior.Lambda.tolist(),
                "ig_shape": state.posterior.ig_shape,
                "ig_scale": state.posterior.ig_scale,
            }
            for state in track.states
        ],
    }


def track_from_dict(data: dict) -> Tuple[IssuerTrack, BasisConfig]:
    if data.get("format") != TRACK_FORMAT:
        raise TrackFormatError(f"not a track file (format={data.get('format')!r})")
    if data.get("version") != TRACK_VERSION:
        raise TrackFormatError(f"unsupported track version {data.get('version')!r}")
    try:
        basis = BasisConfig(K=int(data["basis"]["K"]), basis_decay=float(data["basis"]["basis_decay"]))
        states = tuple(
            TrackState(
                state_date=parse_date(item["state_date"]),
                posterior=NIGParams(
                    mu=np.array(item["mu"], dtype=float),
                    Lambda=np.array(item["Lambda"], dtype=float),
                    ig_shape=float(item["ig_shape"]),
                    ig_scale=float(item["ig_scale"]),
                ),
                n_obs=int(item["n_obs"]),
            )
            for item in data["states"]
        )
        issuer_id = str(data["issuer_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TrackFormatError(f"malformed track file: {exc}") from exc

    dates = [state.state_date for state in states]
    if any(later <= earlier for earlier, later in zip(dates, dates[1:])):
        raise TrackFormatError("track state dates are not strictly increasing")
    return IssuerTrack(issuer_id=issuer_id, config=_config_from_dict(data["config"]), states=states), basis


def save_track(track: IssuerTrack, path: Path, basis: BasisConfig) -> Path:
    # json writes floats with repr(), which round-trips exactly.
    text = json.dumps(track_to_dict(track, basis), indent=1)
    return atomic_write_text(Path(path), text + "\n")


def load_track(path: Path) -> Tuple[IssuerTrack, BasisConfig]:
    try:
        with Path(path).open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise TrackFormatError(f"{path}: not valid JSON ({exc})") from exc
    return track_from_dict(data)
