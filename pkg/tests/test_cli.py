import csv
import json

import numpy as np
import pytest

from default_spread import __version__
from default_spread.cli import main
from default_spread.curves import TenorGrid
from default_spread.export import read_spread_csv

UNIVERSE_SPEC = """
[universe]
start_date = "2024-01-02"
n_states = {n_states}
seed = 3

[[issuer]]
id = "ACME"
spread = {{ kind = "flat", level = 0.02 }}
noise_sd = {noise}

[[issuer]]
id = "WIDGET"
spread = {{ kind = "widening", level = 0.01, step = 0.0025 }}
noise_sd = {noise}
"""


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _simulate(tmp_path, n_states=1, noise=0.0, name="synth", seed=None):
    spec = tmp_path / f"{name}.toml"
    spec.write_text(UNIVERSE_SPEC.format(n_states=n_states, noise=noise), encoding="utf-8")
    out = tmp_path / name
    argv = ["--quiet", "simulate", "--spec", str(spec), "--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    main(argv)
    return out


def _inputs(data_dir):
    return [
        "--issues",
        str(data_dir / "issues.csv"),
        "--prices",
        str(data_dir / "prices.csv"),
        "--treasury",
        str(data_dir / "treasury.csv"),
    ]


def _rows(path):
    with path.open("r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_init_writes_config(tmp_path, capsys):
    main(["init"])
    assert (tmp_path / "dspread.toml").exists()
    main(["init"])
    assert "already exists" in capsys.readouterr().out


def test_fit_rwls_recovers_flat_spread(tmp_path, capsys):
    data = _simulate(tmp_path)
    out = tmp_path / "out"

    main(["fit", *_inputs(data), "--out", str(out), "--estimator", "rwls"])

    spread = read_spread_csv(out / "ACME" / "spread.csv")
    five = int(np.flatnonzero(spread["tenor"] == 5.0)[0])
    assert spread["spread"][five] == pytest.approx(0.02, abs=1e-3)
    np.testing.assert_array_equal(spread["tenor"], TenorGrid().tenors)

    payload = json.loads((out / "ACME" / "curve.json").read_text(encoding="utf-8"))
    assert payload["estimator"] == "rwls"
    assert payload["diagnostics"]["N"] == 8
    assert payload["diagnostics"]["lambda"] == 1.0
    assert abs(sum(payload["beta"]) - 1.0) < 1e-9
    assert "posterior" not in payload
    assert "ACME" in capsys.readouterr().out


def test_fit_bayes_writes_ordered_bands(tmp_path):
    data = _simulate(tmp_path, noise=0.05)
    out = tmp_path / "out"

    main(["fit", *_inputs(data), "--out", str(out), "--estimator", "bayes", "--level", "0.95"])

    for issuer in ("ACME", "WIDGET"):
        spread = read_spread_csv(out / issuer / "spread.csv")
        assert not np.isnan(spread["band_lo"]).all()
        ok = ~np.isnan(spread["spread"])
        assert np.all(spread["band_lo"][ok] <= spread["spread"][ok])
        assert np.all(spread["spread"][ok] <= spread["band_hi"][ok])
        payload = json.loads((out / issuer / "curve.json").read_text(encoding="utf-8"))
        assert payload["level"] == 0.95
        assert len(payload["posterior"]["mu"]) == 7


def test_fit_missing_treasury_exits_with_validation_error(tmp_path, caplog):
    data = _simulate(tmp_path)
    argv = ["fit", "--issues", str(data / "issues.csv"), "--prices", str(data / "prices.csv")]
    argv += ["--treasury", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "out")]

    with pytest.raises(SystemExit) as excinfo:
        main(argv)

    assert excinfo.value.code == 2
    assert "--treasury" in caplog.text
    assert not (tmp_path / "out").exists()


def test_fit_needs_as_of_for_multi_date_prices(tmp_path, caplog):
    data = _simulate(tmp_path, n_states=3)

    with pytest.raises(SystemExit) as excinfo:
        main(["fit", *_inputs(data), "--out", str(tmp_path / "out")])
    assert excinfo.value.code == 2
    assert "--as-of" in caplog.text

    main(["fit", *_inputs(data), "--out", str(tmp_path / "out"), "--as-of", "2024-01-03"])
    assert (tmp_path / "out" / "WIDGET" / "spread.csv").exists()


def test_fit_with_treasury_issuer(tmp_path):
    data = _simulate(tmp_path)
    issues = (data / "issues.csv").read_text(encoding="utf-8")
    prices = (data / "prices.csv").read_text(encoding="utf-8")
    (data / "issues.csv").write_text(
        issues + "".join(line.replace("ACME", "UST") + "\n" for line in issues.splitlines()[1:] if line.startswith("ACME")),
        encoding="utf-8",
    )
    (data / "prices.csv").write_text(
        prices + "".join(line.replace("ACME", "UST") + "\n" for line in prices.splitlines()[1:] if line.startswith("ACME")),
        encoding="utf-8",
    )
    out = tmp_path / "out"

    main(
        [
            "fit",
            "--issues",
            str(data / "issues.csv"),
            "--prices",
            str(data / "prices.csv"),
            "--treasury-issuer",
            "UST",
            "--out",
            str(out),
            "--estimator",
            "rwls",
        ]
    )

    assert not (out / "UST").exists()
    spread = read_spread_csv(out / "ACME" / "spread.csv")
    five = int(np.flatnonzero(spread["tenor"] == 5.0)[0])
    assert spread["spread"][five] == pytest.approx(0.0, abs=1e-3)


def test_fit_strict_mode_exits_on_data_errors(tmp_path):
    data = _simulate(tmp_path)
    with (data / "prices.csv").open("a", encoding="utf-8") as handle:
        handle.write("GHOST,2024-01-02,100\n")

    with pytest.raises(SystemExit) as excinfo:
        main(["fit", *_inputs(data), "--out", str(tmp_path / "out"), "--strict"])
    assert excinfo.value.code == 3

    main(["fit", *_inputs(data), "--out", str(tmp_path / "out")])
    assert (tmp_path / "out" / "ACME" / "spread.csv").exists()


def test_filter_widening_spread_increases(tmp_path):
    data = _simulate(tmp_path, n_states=6, noise=0.0)
    out = tmp_path / "out"

    main(["filter", *_inputs(data), "--out", str(out)])

    rows = [row for row in _rows(out / "WIDGET" / "timeseries.csv") if row["tenor"] == "5"]
    spreads = [float(row["spread"]) for row in rows]
    assert [row["state_date"] for row in rows] == [f"2024-01-0{day}" for day in range(2, 8)]
    assert all(later > earlier for earlier, later in zip(spreads, spreads[1:]))
    assert all(row["risk_5y"] for row in rows)
    assert (out / "WIDGET" / "track.json").exists()


def test_single_state_filter_matches_bayes_fit(tmp_path):
    data = _simulate(tmp_path, noise=0.05)

    main(["fit", *_inputs(data), "--out", str(tmp_path / "fit"), "--estimator", "bayes"])
    main(["filter", *_inputs(data), "--out", str(tmp_path / "filter")])

    fitted = _rows(tmp_path / "fit" / "ACME" / "spread.csv")
    filtered = _rows(tmp_path / "filter" / "ACME" / "timeseries.csv")
    assert len(fitted) == len(filtered)
    for left, right in zip(fitted, filtered):
        for column in ("tenor", "spread", "band_lo", "band_hi"):
            assert left[column] == right[column]


def test_resumed_filter_equals_single_pass(tmp_path):
    data = _simulate(tmp_path, n_states=6, noise=0.05)

    main(["filter", *_inputs(data), "--out", str(tmp_path / "full")])
    main(["filter", *_inputs(data), "--out", str(tmp_path / "head"), "--to", "2024-01-04"])
    main(
        [
            "filter",
            *_inputs(data),
            "--out",
            str(tmp_path / "tail"),
            "--from",
            "2024-01-05",
            "--resume",
            str(tmp_path / "head"),
        ]
    )

    for issuer in ("ACME", "WIDGET"):
        for name in ("timeseries.csv", "track.json"):
            full = (tmp_path / "full" / issuer / name).read_text(encoding="utf-8")
            tail = (tmp_path / "tail" / issuer / name).read_text(encoding="utf-8")
            assert tail == full


def test_resume_with_different_basis_fails(tmp_path, caplog):
    data = _simulate(tmp_path, n_states=3)
    main(["filter", *_inputs(data), "--out", str(tmp_path / "head"), "--to", "2024-01-02"])

    with pytest.raises(SystemExit) as excinfo:
        main(["filter", *_inputs(data), "--out", str(tmp_path / "tail"), "--K", "6", "--resume", str(tmp_path / "head")])
    assert excinfo.value.code == 2
    assert "basis" in caplog.text


def test_simulate_truth_and_determinism(tmp_path):
    first = _simulate(tmp_path, n_states=2, noise=0.1, name="first")
    second = _simulate(tmp_path, n_states=2, noise=0.1, name="second")

    for name in ("issues.csv", "prices.csv", "treasury.csv", "truth.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    tenors = sorted({float(row["tenor"]) for row in _rows(first / "truth.csv")})
    np.testing.assert_array_equal(tenors, TenorGrid().tenors)

    reseeded = _simulate(tmp_path, n_states=2, noise=0.1, name="reseeded", seed=99)
    assert (reseeded / "prices.csv").read_bytes() != (first / "prices.csv").read_bytes()


def test_simulate_bundled_spec_round_trips_through_fit(tmp_path):
    main(["--quiet", "simulate", "--out", str(tmp_path / "bundled")])
    data = tmp_path / "bundled"

    main(["fit", *_inputs(data), "--out", str(tmp_path / "out"), "--as-of", "2024-01-02"])

    for issuer in ("ACME", "WIDGET", "SLOPE"):
        assert (tmp_path / "out" / issuer / "curve.json").exists()


def test_simulate_malformed_spec_exits_with_validation_error(tmp_path):
    spec = tmp_path / "bad.toml"
    spec.write_text("[universe]\nn_states = 2\n", encoding="utf-8")

    with pytest.raises(SystemExit) as excinfo:
        main(["simulate", "--spec", str(spec), "--out", str(tmp_path / "out")])
    assert excinfo.value.code == 2


def test_fit_exits_when_no_issuer_produces_a_curve(tmp_path, caplog):
    spec = tmp_path / "sparse.toml"
    spec.write_text(
        '[universe]\nstart_date = "2024-01-02"\nn_states = 1\nseed = 3\n\n'
        '[[issuer]]\nid = "ACME"\nspread = { kind = "flat", level = 0.02 }\nbond_terms = [5, 10]\n',
        encoding="utf-8",
    )
    data = tmp_path / "sparse"
    main(["--quiet", "simulate", "--spec", str(spec), "--out", str(data)])
    out = tmp_path / "out"

    with pytest.raises(SystemExit) as excinfo:
        main(["fit", *_inputs(data), "--out", str(out), "--estimator", "wls", "--as-of", "2024-01-02"])
    assert excinfo.value.code == 2
    assert "no issuer produced a curve" in caplog.text
    assert not (out / "ACME").exists()

    with pytest.raises(SystemExit) as excinfo:
        main(["fit", *_inputs(data), "--out", str(out), "--estimator", "wls", "--strict"])
    assert excinfo.value.code == 3


def test_simulate_reads_seed_from_config(tmp_path):
    flagged = _simulate(tmp_path, n_states=2, noise=0.1, name="flagged", seed=99)
    (tmp_path / "dspread.toml").write_text("[run]\nseed = 99\n", encoding="utf-8")

    configured = _simulate(tmp_path, n_states=2, noise=0.1, name="configured")
    (tmp_path / "dspread.toml").unlink()
    unseeded = _simulate(tmp_path, n_states=2, noise=0.1, name="unseeded")

    assert (configured / "prices.csv").read_bytes() == (flagged / "prices.csv").read_bytes()
    assert (unseeded / "prices.csv").read_bytes() != (flagged / "prices.csv").read_bytes()
