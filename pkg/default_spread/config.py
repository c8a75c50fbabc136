"""
Configuration loading and defaults for the dspread CLI.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional

try:
    import tomllib  # type: ignore
except ImportError:  # pragma: no cover - fallback for Python <3.11
    import tomli as tomllib  # type: ignore

from default_spread.basis import INVERSE_TERM, WEIGHT_SCHEMES, BasisConfig
from default_spread.bayes import DEFAULT_IG_SHAPE, DEFAULT_SIGMA2_MEAN
from default_spread.cashflow import ACCRUAL_CONVENTIONS, TIME_TO_NEXT
from default_spread.errors import DomainError
from default_spread.statespace import FilterConfig
from default_spread.utils import parse_bool, parse_optional_date

DEFAULT_CONFIG_NAME = "dspread.toml"
DEFAULT_OUT_DIR = "out"

ESTIMATORS = ("ols", "wls", "rwls", "bayes", "filter")

DEFAULT_CONFIG_TEXT = """# default-spread configuration

[paths]
# Relative paths are resolved against this file's directory.
issues = "data/issues.csv"
prices = "data/prices.csv"
treasury = "data/treasury.csv"
out = "out"

[basis]
K = 8
alpha_decay = 0.05
# inverse_term | proportional_term | uniform
weights = "inverse_term"

[estimator]
# ols | wls | rwls | bayes | filter
name = "bayes"
lambda = 1.0
level = 0.95
# inverse-gamma prior on the price noise variance
prior_shape = 2.01
prior_sigma2 = 1.0
# time_to_next | elapsed_fraction
accrual = "time_to_next"
strict = false

[filter]
delta_sq = 1e-4
epsilon = 1e-6
ridge_bump = 1e-3
scale_by_business_days = false

[run]
jobs = 1
# overrides the seeds of `dspread simulate` specs
# seed = 7
"""


def _resolve_path(value: Optional[object], base_dir: Path) -> Optional[Path]:
    if value is None or value == "":
        return None
    path = Path(str(value))
    if not path.is_absolute():
        return base_dir / path
    return path


@dataclass
class RunConfig:
    issues: Optional[Path] = None
    prices: Optional[Path] = None
    treasury: Optional[Path] = None
    out: Path = Path(DEFAULT_OUT_DIR)
    estimator: str = "bayes"
    K: int = 8
    alpha_decay: float = 0.05
    weights: str = INVERSE_TERM
    lam: float = 1.0
    level: float = 0.95
    prior_shape: float = DEFAULT_IG_SHAPE
    prior_sigma2: float = DEFAULT_SIGMA2_MEAN
    accrual: str = TIME_TO_NEXT
    strict: bool = False
    delta_sq: float = 1e-4
    epsilon: float = 1e-6
    ridge_bump: float = 1e-3
    scale_by_business_days: bool = False
    jobs: int = 1
    seed: Optional[int] = None
    as_of: Optional[date] = None
    date_from: Optional[date] = None
    date_to: Optional[date] = None
    resume: Optional[Path] = None
    treasury_issuer: Optional[str] = None

    @property
    def basis(self) -> BasisConfig:
        return BasisConfig(K=self.K, basis_decay=self.alpha_decay)

    @property
    def filter(self) -> FilterConfig:
        return FilterConfig(
            delta_sq=self.delta_sq,
            epsilon=self.epsilon,
            ridge_bump=self.ridge_bump,
            scale_by_business_days=self.scale_by_business_days,
        )

    def validate(self, command: str = "fit") -> None:
        """Raises DomainError naming the offending flag."""
        if self.estimator not in ESTIMATORS:
            raise DomainError(f"--estimator must be one of {', '.join(ESTIMATORS)}, got {self.estimator!r}")
        if self.weights not in WEIGHT_SCHEMES:
            raise DomainError(f"--weights must be one of {', '.join(WEIGHT_SCHEMES)}, got {self.weights!r}")
        if self.accrual not in ACCRUAL_CONVENTIONS:
            raise DomainError(f"--accrual must be one of {', '.join(ACCRUAL_CONVENTIONS)}, got {self.accrual!r}")
        if not 0 < self.level < 1:
            raise DomainError(f"--level must lie in (0, 1), got {self.level}")
        if not self.lam > 0:
            raise DomainError(f"--lambda must be positive, got {self.lam}")
        if not self.prior_shape > 2:
            raise DomainError(f"--prior-shape must exceed 2, got {self.prior_shape}")
        if not self.prior_sigma2 > 0:
            raise DomainError(f"--prior-sigma2 must be positive, got {self.prior_sigma2}")
        if self.jobs < 1:
            raise DomainError(f"--jobs must be at least 1, got {self.jobs}")
        # both constructors validate their fields
        _ = (self.basis, self.filter)

        for flag, path in (("--issues", self.issues), ("--prices", self.prices)):
            if path is None or not Path(path).is_file():
                raise DomainError(f"{flag} file not found: {path}")
        if self.treasury_issuer is None and (self.treasury is None or not Path(self.treasury).is_file()):
            raise DomainError(f"--treasury file not found: {self.treasury}")

        if command == "fit" and self.estimator == "filter":
            raise DomainError("--estimator filter needs the filter subcommand")
        if command == "filter":
            if self.date_from and self.date_to and self.date_from > self.date_to:
                raise DomainError(f"--from {self.date_from} is after --to {self.date_to}")
            if self.resume is not None and not Path(self.resume).exists():
                raise DomainError(f"--resume path not found: {self.resume}")

        out = Path(self.out)
        writable_root = out if out.exists() else out.parent
        while not writable_root.exists() and writable_root != writable_root.parent:
            writable_root = writable_root.parent
        if (out.exists() and not out.is_dir()) or not os.access(writable_root, os.W_OK):
            raise DomainError(f"--out directory is not writable: {out}")


def _read_toml(path: Path) -> dict:
    with path.open("rb") as handle:
        return tomllib.load(handle)


def find_config(path: Optional[str] = None) -> Optional[Path]:
    if path is None:
        candidate = Path(DEFAULT_CONFIG_NAME)
        return candidate if candidate.exists() else None
    candidate = Path(path)
    if not candidate.exists():
        raise FileNotFoundError(f"Config file not found: {candidate}")
    return candidate


def load_config(path: Optional[str] = None) -> RunConfig:
    config_path = find_config(path)
    config = RunConfig()
    if config_path is None:
        return config

    base_dir = config_path.parent
    data: dict = _read_toml(config_path)

    paths = data.get("paths", {})
    basis = data.get("basis", {})
    estimator = data.get("estimator", {})
    filtering = data.get("filter", {})
    run = data.get("run", {})

    config.issues = _resolve_path(paths.get("issues"), base_dir)
    config.prices = _resolve_path(paths.get("prices"), base_dir)
    config.treasury = _resolve_path(paths.get("treasury"), base_dir)
    config.out = _resolve_path(paths.get("out", DEFAULT_OUT_DIR), base_dir) or config.out

    if "K" in basis:
        config.K = int(basis["K"])
    if "alpha_decay" in basis:
        config.alpha_decay = float(basis["alpha_decay"])
    if "weights" in basis:
        config.weights = str(basis["weights"])

    if "name" in estimator:
        config.estimator = str(estimator["name"]).lower()
    if "lambda" in estimator:
        config.lam = float(estimator["lambda"])
    if "level" in estimator:
        config.level = float(estimator["level"])
    if "prior_shape" in estimator:
        config.prior_shape = float(estimator["prior_shape"])
    if "prior_sigma2" in estimator:
        config.prior_sigma2 = float(estimator["prior_sigma2"])
    if "accrual" in estimator:
        config.accrual = str(estimator["accrual"])
    if "strict" in estimator:
        config.strict = parse_bool(estimator["strict"])
    if "as_of" in estimator:
        config.as_of = parse_optional_date(str(estimator["as_of"]))

    if "delta_sq" in filtering:
        config.delta_sq = float(filtering["delta_sq"])
    if "epsilon" in filtering:
        config.epsilon = float(filtering["epsilon"])
    if "ridge_bump" in filtering:
        config.ridge_bump = float(filtering["ridge_bump"])
    if "scale_by_business_days" in filtering:
        config.scale_by_business_days = parse_bool(filtering["scale_by_business_days"])

    if "jobs" in run:
        config.jobs = int(run["jobs"])
    if "seed" in run:
        config.seed = int(run["seed"])
    return config


def write_default_config(path: Path, force: bool = False) -> bool:
    if path.exists() and not force:
        return False
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(DEFAULT_CONFIG_TEXT, encoding="utf-8")
    return True
