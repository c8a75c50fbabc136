"""
Closed-form least-squares estimators over a constraint-reduced design.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import linalg

from default_spread.basis import BasisDesign, recover_full_beta, subset_design
from default_spread.errors import DomainError, EmptyPanelError, RankDeficiencyError

logger = logging.getLogger(__name__)

OLS = "OLS"
WLS = "WLS"
RWLS = "RWLS"

CONDITION_LIMIT = 1e12
DEFAULT_LAMBDA = 1.0


@dataclass(frozen=True, eq=False)
class PointFit:
    beta_reduced: np.ndarray
    beta_full: np.ndarray
    residuals: np.ndarray
    method: str
    lam: float
    condition: float


def condition_number(design: BasisDesign) -> float:
    if design.is_empty:
        return float("inf")
    return float(np.linalg.cond(design.X.T @ design.X))


def _solve_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    gram = X.T @ X
    gram[np.diag_indices_from(gram)] += lam
    factor = linalg.cho_factor(gram)
    return linalg.cho_solve(factor, X.T @ y)


def _price_residuals(design: BasisDesign, beta_reduced: np.ndarray) -> np.ndarray:
    return (design.y - design.X @ beta_reduced) / np.sqrt(design.W_diag)


def _fit_unregularized(design: BasisDesign, method: str) -> PointFit:
    if design.is_empty:
        raise EmptyPanelError(f"{method} needs at least one observation")

    condition = condition_number(design)
    if design.underdetermined or not np.isfinite(condition) or condition > CONDITION_LIMIT:
        rank = int(np.linalg.matrix_rank(design.X))
        raise RankDeficiencyError(
            f"{method} normal equations are rank deficient (rank {rank} of {design.columns}, "
            f"N={design.N}, condition {condition:.3g}); use fit_rwls",
            rank=rank,
            columns=design.columns,
            condition=condition,
        )
    try:
        beta_reduced = _solve_ridge(design.X, design.y, 0.0)
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            f"{method} normal equations are not positive definite; use fit_rwls",
            rank=int(np.linalg.matrix_rank(design.X)),
            columns=design.columns,
            condition=condition,
        ) from exc

    return PointFit(
        beta_reduced=beta_reduced,
        beta_full=recover_full_beta(beta_reduced),
        residuals=_price_residuals(design, beta_reduced),
        method=method,
        lam=0.0,
        condition=condition,
    )


def fit_ols(design: BasisDesign) -> PointFit:
    if not np.allclose(design.W_diag, 1.0):
        raise DomainError("OLS requires a design built with uniform weights")
    return _fit_unregularized(design, OLS)


def fit_wls(design: BasisDesign) -> PointFit:
    return _fit_unregularized(design, WLS)


def fit_rwls(design: BasisDesign, lam: float = DEFAULT_LAMBDA) -> PointFit:
    if not lam > 0:
        raise DomainError(f"ridge strength must be positive, got {lam}")
    if design.is_empty:
        raise EmptyPanelError("RWLS needs at least one observation")

    beta_reduced = _solve_ridge(design.X, design.y, lam)
    return PointFit(
        beta_reduced=beta_reduced,
        beta_full=recover_full_beta(beta_reduced),
        residuals=_price_residuals(design, beta_reduced),
        method=RWLS,
        lam=float(lam),
        condition=condition_number(design),
    )


def ridge_objective(design: BasisDesign, beta_reduced: np.ndarray, lam: float) -> float:
    residual = design.y - design.X @ beta_reduced
    return float(residual @ residual + lam * beta_reduced @ beta_reduced)


def select_lambda(
    design: BasisDesign,
    lambdas: Sequence[float],
    folds: Sequence[Sequence[int]],
) -> Tuple[float, Dict[float, float]]:
    """
    Grid search for the ridge strength. Each fold lists held-out row indices;
    the score is the mean squared held-out residual in regression space.
    """
    if not lambdas:
        raise DomainError("lambda grid is empty")
    if not folds:
        raise DomainError("at least one fold is required")

    everything = np.arange(design.N)
    scores: Dict[float, float] = {}
    for lam in lambdas:
        errors = []
        for fold in folds:
            held_out = np.asarray(fold, dtype=int)
            training = np.setdiff1d(everything, held_out)
            if held_out.size == 0 or training.size == 0:
                raise DomainError("each fold needs held-out and training rows")
            fit = fit_rwls(subset_design(design, training), lam)
            test = subset_design(design, held_out)
            residual = test.y - test.X @ fit.beta_reduced
            errors.append(residual @ residual / held_out.size)
        scores[float(lam)] = float(np.mean(errors))
        logger.debug("lambda=%s cv_score=%.6g", lam, scores[float(lam)])

    best = min(scores, key=lambda key: (scores[key], key))
    return best, scores
