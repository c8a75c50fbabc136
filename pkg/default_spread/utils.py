"""
Helper utilities for dates, number formatting, filenames and atomic writes.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

ISO_DATE_FORMAT = "%Y-%m-%d"
DAYS_PER_YEAR = 365.0
OUTPUT_SIGNIFICANT_DIGITS = 12

_TRUE_VALUES = {"true", "t", "1", "yes", "y"}
_FALSE_VALUES = {"false", "f", "0", "no", "n", ""}


def parse_date(value: Union[str, date, datetime]) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    text = str(value).strip()
    for fmt in (ISO_DATE_FORMAT, "%m-%d-%Y"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"Unrecognized date: {value!r}")


def parse_optional_date(value: Optional[str]) -> Optional[date]:
    if value is None or str(value).strip() == "":
        return None
    return parse_date(value)


def parse_bool(value: object) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE_VALUES:
        return True
    if text in _FALSE_VALUES:
        return False
    raise ValueError(f"Unrecognized boolean: {value!r}")


def year_fraction(start: date, end: date) -> float:
    """ACT/365 fixed."""
    return (end - start).days / DAYS_PER_YEAR


def format_number(value: float, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), f".{digits}g")


def format_exact(value: float) -> str:
    return format(float(value), ".17g")


def sanitize_filename(value: str, max_length: int = 140) -> str:
    cleaned = value.strip()
    cleaned = cleaned.replace("&", "and")
    cleaned = re.sub(r"[\\/:\*\?\"<>\|]", "-", cleaned)
    cleaned = re.sub(r"\s+", "_", cleaned)
    cleaned = re.sub(r"_+", "_", cleaned)
    cleaned = cleaned.strip("._-")
    if not cleaned:
        return "unknown"
    return cleaned[:max_length]


def atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as tmp:
            tmp.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()
