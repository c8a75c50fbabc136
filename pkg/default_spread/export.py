"""
Per-issuer output files: spread.csv, curve.json, timeseries.csv and the track.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from default_spread.basis import BasisConfig
from default_spread.bayes import NIGParams
from default_spread.curves import SpreadCurve, spread_at
from default_spread.utils import (
    OUTPUT_SIGNIFICANT_DIGITS,
    atomic_write_text,
    csv_text,
    format_number,
    sanitize_filename,
)

logger = logging.getLogger(__name__)

SPREAD_COLUMNS = ("tenor", "spread", "band_lo", "band_hi")
TIMESERIES_COLUMNS = ("state_date", "tenor", "spread", "band_lo", "band_hi", "risk_5y")

SPREAD_FILE = "spread.csv"
CURVE_FILE = "curve.json"
TIMESERIES_FILE = "timeseries.csv"
TRACK_FILE = "track.json"


def issuer_dir(out_dir: Path, issuer_id: str) -> Path:
    return Path(out_dir) / sanitize_filename(issuer_id)


def _rounded(value: float) -> Optional[float]:
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return value
    return float(format(value, f".{OUTPUT_SIGNIFICANT_DIGITS}g"))


def _rounded_list(values: Iterable[float]) -> List[Optional[float]]:
    return [_rounded(value) for value in np.asarray(values, dtype=float).reshape(-1)]


def spread_csv_text(curve: SpreadCurve) -> str:
    rows = (
        [format_number(t), format_number(s), format_number(lo), format_number(hi)]
        for t, s, lo, hi in zip(curve.tenors, curve.spread, curve.band_lo, curve.band_hi)
    )
    return csv_text(SPREAD_COLUMNS, rows)


def curve_payload(
    curve: SpreadCurve,
    beta_full: np.ndarray,
    basis: BasisConfig,
    estimator: str,
    n_obs: int,
    condition: float,
    lam: Optional[float] = None,
    posterior: Optional[NIGParams] = None,
) -> dict:
    payload = {
        "issuer_id": curve.issuer_id,
        "as_of": curve.as_of.isoformat() if curve.as_of else None,
        "estimator": estimator,
        "basis": {"K": basis.K, "alpha_decay": _rounded(basis.basis_decay)},
        "beta": _rounded_list(beta_full),
        "level": _rounded(curve.level) if posterior is not None else None,
        "diagnostics": {
            "N": n_obs,
            "condition": _rounded(condition),
            "lambda": _rounded(lam) if lam is not None else None,
            "violations": _rounded_list(curve.violations),
            "risk_to": {format_number(horizon): _rounded(value) for horizon, value in sorted(curve.risk_to.items())},
        },
    }
    if posterior is not None:
        payload["posterior"] = {
            "mu": _rounded_list(posterior.mu),
            "Lambda": [_rounded_list(row) for row in posterior.Lambda],
            "ig_shape": _rounded(posterior.ig_shape),
            "ig_scale": _rounded(posterior.ig_scale),
        }
    return payload


def write_fit_outputs(out_dir: Path, curve: SpreadCurve, payload: dict) -> Dict[str, Path]:
    target = issuer_dir(out_dir, curve.issuer_id)
    paths = {
        "spread": atomic_write_text(target / SPREAD_FILE, spread_csv_text(curve)),
        "curve": atomic_write_text(target / CURVE_FILE, json.dumps(payload, indent=2, sort_keys=True) + "\n"),
    }
    logger.info("Saved: %s", target)
    return paths


def timeseries_csv_text(curves: Sequence[SpreadCurve]) -> str:
    rows = []
    for curve in sorted(curves, key=lambda item: item.as_of):
        risk_5y = curve.risk_to.get(5.0, math.nan)
        for t in curve.tenors:
            spread, lo, hi = spread_at(curve, float(t))
            rows.append(
                [
                    curve.as_of.isoformat(),
                    format_number(t),
                    format_number(spread),
                    format_number(lo),
                    format_number(hi),
                    format_number(risk_5y),
                ]
            )
    return csv_text(TIMESERIES_COLUMNS, rows)


def write_timeseries(out_dir: Path, issuer_id: str, curves: Sequence[SpreadCurve]) -> Path:
    path = issuer_dir(out_dir, issuer_id) / TIMESERIES_FILE
    atomic_write_text(path, timeseries_csv_text(curves))
    logger.info("Saved: %s", path)
    return path


def read_spread_csv(path: Path) -> Dict[str, np.ndarray]:
    columns: Dict[str, List[float]] = {name: [] for name in SPREAD_COLUMNS}
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            for name in SPREAD_COLUMNS:
                text = row[name]
                columns[name].append(float(text) if text != "" else math.nan)
    return {name: np.asarray(values) for name, values in columns.items()}
