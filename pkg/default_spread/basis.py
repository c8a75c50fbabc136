"""
Exponential-spline discount basis and the constraint-reduced weighted regression design.

A discount function is modelled as d(t) = sum_k beta_k * exp(-alpha * k * t)
with sum(beta) = 1 so that d(0) = 1. The constraint is removed by regressing
on differences against the last basis column; ``recover_full_beta`` is the
only place the last coefficient is rebuilt.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from default_spread.cashflow import CashFlowSequence, PriceObservation
from default_spread.errors import DomainError, DuplicateObservationError, EmptyPanelError

logger = logging.getLogger(__name__)

INVERSE_TERM = "inverse_term"
PROPORTIONAL_TERM = "proportional_term"
UNIFORM = "uniform"
WEIGHT_SCHEMES = (INVERSE_TERM, PROPORTIONAL_TERM, UNIFORM)

SUM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class BasisConfig:
    K: int = 8
    basis_decay: float = 0.05

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 2:
            raise DomainError(f"K must be an integer >= 2, got {self.K}")
        if not self.basis_decay > 0:
            raise DomainError(f"basis_decay must be positive, got {self.basis_decay}")

    @property
    def exponents(self) -> np.ndarray:
        return self.basis_decay * np.arange(1, self.K + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class BasisDesign:
    y: np.ndarray
    X: np.ndarray
    W_diag: np.ndarray
    raw_B: np.ndarray
    bond_ids: Tuple[str, ...]
    prices: np.ndarray
    terms: np.ndarray

    @property
    def N(self) -> int:
        return int(self.y.size)

    @property
    def columns(self) -> int:
        return int(self.X.shape[1])

    @property
    def underdetermined(self) -> bool:
        return self.N < self.columns

    @property
    def is_empty(self) -> bool:
        return self.N == 0

    @classmethod
    def empty(cls, cfg: BasisConfig) -> "BasisDesign":
        return cls(
            y=np.zeros(0),
            X=np.zeros((0, cfg.K - 1)),
            W_diag=np.zeros(0),
            raw_B=np.zeros((0, cfg.K)),
            bond_ids=(),
            prices=np.zeros(0),
            terms=np.zeros(0),
        )


def _check_index(k: int, cfg: BasisConfig) -> None:
    if not 1 <= k <= cfg.K:
        raise DomainError(f"basis index {k} outside 1..{cfg.K}")


def basis_fn(k: int, t: float, cfg: BasisConfig) -> float:
    _check_index(k, cfg)
    if t < 0:
        raise DomainError(f"basis functions are defined for t >= 0, got {t}")
    return float(np.exp(-cfg.basis_decay * k * t))


def basis_matrix(times: Union[Sequence[float], np.ndarray], cfg: BasisConfig) -> np.ndarray:
    """M x K matrix of basis discount factors at the given times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.exp(-np.outer(times, cfg.exponents))


def discount_value(beta: np.ndarray, t: Union[float, np.ndarray], cfg: BasisConfig):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (cfg.K,):
        raise DomainError(f"beta must have {cfg.K} entries, got shape {beta.shape}")
    if abs(beta.sum() - 1.0) > SUM_TOLERANCE:
        raise DomainError(f"beta must sum to 1, sums to {beta.sum():.16g}")
    values = basis_matrix(t, cfg) @ beta
    if np.ndim(t) == 0:
        return float(values[0])
    return values


def basis_price_vector(cf: CashFlowSequence, cfg: BasisConfig) -> np.ndarray:
    if cf.M == 0:
        raise DomainError("cannot build basis prices for an empty schedule")
    return cf.amounts @ basis_matrix(cf.times, cfg)


def recover_full_beta(beta_reduced: np.ndarray) -> np.ndarray:
    beta_reduced = np.asarray(beta_reduced, dtype=float)
    return np.append(beta_reduced, 1.0 - beta_reduced.sum())


def reduce_row(basis_prices: np.ndarray, weight: float = 1.0) -> Tuple[np.ndarray, float]:
    """Maps a K-vector of basis prices to (x, offset) in regression space."""
    root = np.sqrt(weight)
    last = basis_prices[-1]
    return root * (basis_prices[:-1] - last), float(root * last)


def reduced_basis_vector(cf: CashFlowSequence, cfg: BasisConfig, weight: float = 1.0) -> Tuple[np.ndarray, float]:
    return reduce_row(basis_price_vector(cf, cfg), weight)


def normalized_weights(terms: np.ndarray, scheme: str = INVERSE_TERM) -> np.ndarray:
    terms = np.asarray(terms, dtype=float)
    if scheme == INVERSE_TERM:
        raw = 1.0 / terms
    elif scheme == PROPORTIONAL_TERM:
        raw = terms.copy()
    elif scheme == UNIFORM:
        raw = np.ones_like(terms)
    else:
        raise DomainError(f"Unknown weight scheme: {scheme}")
    return raw / raw.mean()


def build_design(
    observations: Iterable[Tuple[PriceObservation, CashFlowSequence]],
    cfg: BasisConfig,
    weight_scheme: str = INVERSE_TERM,
) -> BasisDesign:
    members: List[Tuple[PriceObservation, CashFlowSequence]] = list(observations)
    if not members:
        raise EmptyPanelError("cannot build a design from an empty panel")

    seen = set()
    for observation, _ in members:
        if observation.bond_id in seen:
            raise DuplicateObservationError(
                f"{observation.bond_id} observed twice on {observation.trade_date.isoformat()}"
            )
        seen.add(observation.bond_id)
    if len({observation.trade_date for observation, _ in members}) > 1:
        raise DomainError("all observations in a design must share one trade date")

    raw_B = np.vstack([basis_price_vector(cf, cfg) for _, cf in members])
    prices = np.array([observation.dirty_price for observation, _ in members])
    terms = np.array([cf.final_time for _, cf in members])
    weights = normalized_weights(terms, weight_scheme)

    root = np.sqrt(weights)
    last = raw_B[:, -1]
    y = root * (prices - last)
    X = root[:, None] * (raw_B[:, :-1] - last[:, None])

    design = BasisDesign(
        y=y,
        X=X,
        W_diag=weights,
        raw_B=raw_B,
        bond_ids=tuple(observation.bond_id for observation, _ in members),
        prices=prices,
        terms=terms,
    )
    if design.underdetermined:
        logger.debug("Design has N=%s < K-1=%s; only ridge-type fits apply", design.N, design.columns)
    return design


def concat_designs(designs: Sequence[BasisDesign]) -> BasisDesign:
    """Stacks already-weighted designs row-wise."""
    if not designs:
        raise EmptyPanelError("no designs to concatenate")
    return BasisDesign(
        y=np.concatenate([d.y for d in designs]),
        X=np.vstack([d.X for d in designs]),
        W_diag=np.concatenate([d.W_diag for d in designs]),
        raw_B=np.vstack([d.raw_B for d in designs]),
        bond_ids=tuple(bond_id for d in designs for bond_id in d.bond_ids),
        prices=np.concatenate([d.prices for d in designs]),
        terms=np.concatenate([d.terms for d in designs]),
    )


def design_from_arrays(X: np.ndarray, y: np.ndarray) -> BasisDesign:
    """Wraps a precomputed reduced design (unit weights)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    return BasisDesign(
        y=y,
        X=X,
        W_diag=np.ones(n),
        raw_B=np.hstack([X, np.zeros((n, 1))]) if n else np.zeros((0, X.shape[1] + 1)),
        bond_ids=tuple(f"row{i}" for i in range(n)),
        prices=y.copy(),
        terms=np.ones(n),
    )


def subset_design(design: BasisDesign, rows: Sequence[int]) -> BasisDesign:
    rows = np.asarray(rows, dtype=int)
    return BasisDesign(
        y=design.y[rows],
        X=design.X[rows],
        W_diag=design.W_diag[rows],
        raw_B=design.raw_B[rows],
        bond_ids=tuple(design.bond_ids[i] for i in rows),
        prices=design.prices[rows],
        terms=design.terms[rows],
    )


def with_weights(design: BasisDesign, weights: np.ndarray, normalize: bool = True) -> BasisDesign:
    """Rebuilds a design's weighted rows from its raw basis prices."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (design.N,) or np.any(weights <= 0):
        raise DomainError("weights must be positive with one entry per observation")
    if normalize:
        weights = weights / weights.mean()
    root = np.sqrt(weights)
    last = design.raw_B[:, -1]
    return BasisDesign(
        y=root * (design.prices - last),
        X=root[:, None] * (design.raw_B[:, :-1] - last[:, None]),
        W_diag=weights,
        raw_B=design.raw_B,
        bond_ids=design.bond_ids,
        prices=design.prices,
        terms=design.terms,
    )
