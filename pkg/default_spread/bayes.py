"""
Conjugate Normal-Inverse-Gamma regression over a constraint-reduced design.

Model: y | beta, s2 ~ N(X beta, s2 I), beta | s2 ~ N(mu, s2 Lambda),
s2 ~ InvGamma(ig_shape, ig_scale). The ig_shape here is unrelated to the
basis decay rate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg, stats

from default_spread.basis import BasisConfig, BasisDesign, recover_full_beta, reduced_basis_vector
from default_spread.cashflow import CashFlowSequence
from default_spread.errors import DomainError, NegativeScaleError

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-10
DEFAULT_IG_SHAPE = 2.01
DEFAULT_SIGMA2_MEAN = 1.0


@dataclass(frozen=True, eq=False)
class NIGParams:
    mu: np.ndarray
    Lambda: np.ndarray
    ig_shape: float
    ig_scale: float

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        Lambda = np.atleast_2d(np.asarray(self.Lambda, dtype=float))
        if Lambda.shape != (mu.size, mu.size):
            raise DomainError(f"Lambda shape {Lambda.shape} does not match mu of length {mu.size}")
        scale = max(1.0, float(np.max(np.abs(Lambda)))) if Lambda.size else 1.0
        if not np.allclose(Lambda, Lambda.T, rtol=0.0, atol=SYMMETRY_TOLERANCE * scale):
            raise DomainError("Lambda must be symmetric")
        if mu.size and np.linalg.eigvalsh(Lambda)[0] <= 0:
            raise DomainError("Lambda must be positive definite")
        if not (self.ig_shape > 0 and self.ig_scale > 0):
            raise DomainError(f"inverse-gamma parameters must be positive ({self.ig_shape}, {self.ig_scale})")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Lambda", Lambda)
        object.__setattr__(self, "ig_shape", float(self.ig_shape))
        object.__setattr__(self, "ig_scale", float(self.ig_scale))

    @property
    def beta_full(self) -> np.ndarray:
        return recover_full_beta(self.mu)

    @property
    def sigma2_mean(self) -> float:
        return sigma2_mean(self)


@dataclass(frozen=True)
class PredictiveT:
    dof: float
    location: float
    scale: float

    def __post_init__(self) -> None:
        if not self.dof > 0:
            raise DomainError(f"degrees of freedom must be positive, got {self.dof}")
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise DomainError(f"scale must be finite and nonnegative, got {self.scale}")

    @property
    def variance(self) -> float:
        if self.dof <= 2:
            return float("inf")
        return self.scale ** 2 * self.dof / (self.dof - 2.0)


def sigma2_mean(params: NIGParams) -> float:
    if params.ig_shape <= 1:
        return float("inf")
    return params.ig_scale / (params.ig_shape - 1.0)


def ridge_prior(
    K: int,
    lam: float = 1.0,
    ig_shape: float = DEFAULT_IG_SHAPE,
    sigma2: float = DEFAULT_SIGMA2_MEAN,
) -> NIGParams:
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    return NIGParams(
        mu=np.zeros(K - 1),
        Lambda=np.eye(K - 1) / lam,
        ig_shape=ig_shape,
        ig_scale=sigma2 * (ig_shape - 1.0),
    )


def default_prior(
    K: int,
    lam: float = 1.0,
    ig_shape: float = DEFAULT_IG_SHAPE,
    sigma2: float = DEFAULT_SIGMA2_MEAN,
) -> NIGParams:
    """Equal weight on every basis function, Lambda = I / lam, E[s2] = sigma2."""
    prior = ridge_prior(K, lam, ig_shape, sigma2)
    return NIGParams(
        mu=np.full(K - 1, 1.0 / K),
        Lambda=prior.Lambda,
        ig_shape=prior.ig_shape,
        ig_scale=prior.ig_scale,
    )


def _precision(Lambda: np.ndarray) -> np.ndarray:
    factor = linalg.cho_factor(Lambda)
    precision = linalg.cho_solve(factor, np.eye(Lambda.shape[0]))
    return 0.5 * (precision + precision.T)


def posterior_update(prior: NIGParams, design: BasisDesign) -> NIGParams:
    if design.is_empty:
        return prior
    if design.columns != prior.mu.size:
        raise DomainError(f"design has {design.columns} columns, prior has {prior.mu.size}")

    X, y = design.X, design.y
    prior_precision = _precision(prior.Lambda)
    shifted = prior_precision @ prior.mu

    system = X.T @ X + prior_precision
    rhs = X.T @ y + shifted
    factor = linalg.cho_factor(system)
    mu = linalg.cho_solve(factor, rhs)
    Lambda = linalg.cho_solve(factor, np.eye(mu.size))
    Lambda = 0.5 * (Lambda + Lambda.T)

    ig_shape = prior.ig_shape + design.N / 2.0
    # mu' (X'X + P0) mu reuses the system: it equals mu' rhs.
    ig_scale = prior.ig_scale + 0.5 * (y @ y + prior.mu @ shifted - mu @ rhs)
    if not ig_scale > 0:
        raise NegativeScaleError(
            f"posterior inverse-gamma scale is {ig_scale:.6g} (prior {prior.ig_scale:.6g}, "
            f"N={design.N}, y'y={y @ y:.6g}); prior and data scales are inconsistent"
        )

    return NIGParams(mu=mu, Lambda=Lambda, ig_shape=ig_shape, ig_scale=ig_scale)


def predictive(posterior: NIGParams, x_new: np.ndarray, include_noise: bool = True) -> PredictiveT:
    """
    Student-t predictive for a new row. With include_noise=False the result is
    the posterior of the regression mean x'beta rather than of a new observation.
    """
    x_new = np.asarray(x_new, dtype=float).reshape(-1)
    quad = float(x_new @ posterior.Lambda @ x_new)
    noise = 1.0 if include_noise else 0.0
    scale_sq = posterior.ig_scale / posterior.ig_shape * (noise + quad)
    return PredictiveT(
        dof=2.0 * posterior.ig_shape,
        location=float(x_new @ posterior.mu),
        scale=float(np.sqrt(max(scale_sq, 0.0))),
    )


def credible_interval(pred: PredictiveT, level: float) -> Tuple[float, float]:
    if not 0 < level < 1:
        raise DomainError(f"credible level must lie in (0, 1), got {level}")
    half_width = float(stats.t.ppf(0.5 * (1.0 + level), pred.dof)) * pred.scale
    return pred.location - half_width, pred.location + half_width


def predict_price(
    posterior: NIGParams,
    cf: CashFlowSequence,
    cfg: BasisConfig,
    weight: float = 1.0,
    include_noise: bool = True,
) -> PredictiveT:
    """Predictive for the dirty price of a schedule, in price units."""
    x, offset = reduced_basis_vector(cf, cfg, weight)
    pred = predictive(posterior, x, include_noise)
    root = np.sqrt(weight)
    return PredictiveT(dof=pred.dof, location=(pred.location + offset) / root, scale=pred.scale / root)
