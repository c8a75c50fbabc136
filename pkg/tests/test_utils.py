import math
from datetime import date, datetime

import pytest

from default_spread.utils import (
    atomic_write_text,
    csv_text,
    format_exact,
    format_number,
    parse_bool,
    parse_date,
    parse_optional_date,
    sanitize_filename,
    year_fraction,
)


def test_sanitize_filename_basic():
    assert sanitize_filename("ACME/Corp & Co") == "ACME-Corp_and_Co"
    assert sanitize_filename("  ") == "unknown"


def test_parse_date_formats():
    assert parse_date("2024-01-02") == date(2024, 1, 2)
    assert parse_date("01-02-2024") == date(2024, 1, 2)
    assert parse_date(datetime(2024, 1, 2, 15, 30)) == date(2024, 1, 2)
    assert parse_optional_date("") is None
    with pytest.raises(ValueError):
        parse_date("2024/01/02")


def test_parse_bool():
    assert parse_bool("TRUE") is True
    assert parse_bool("n") is False
    assert parse_bool("") is False
    with pytest.raises(ValueError):
        parse_bool("maybe")


def test_year_fraction_is_act_365():
    assert year_fraction(date(2024, 1, 1), date(2025, 1, 1)) == 366 / 365
    assert year_fraction(date(2023, 1, 1), date(2024, 1, 1)) == 1.0


def test_number_formatting():
    assert format_number(0.1 + 0.2) == "0.3"
    assert format_number(math.nan) == ""
    assert float(format_exact(0.1 + 0.2)) == 0.1 + 0.2


def test_csv_text_and_atomic_write(tmp_path):
    text = csv_text(("a", "b"), [["1", "x,y"]])
    assert text == 'a,b\n1,"x,y"\n'

    path = atomic_write_text(tmp_path / "nested" / "file.csv", text)
    assert path.read_text(encoding="utf-8") == text
    assert [item.name for item in path.parent.iterdir()] == ["file.csv"]
