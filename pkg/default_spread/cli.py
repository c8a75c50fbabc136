"""
Command-line interface for default-spread curve fitting.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from default_spread import __version__
from default_spread.basis import WEIGHT_SCHEMES
from default_spread.cashflow import ACCRUAL_CONVENTIONS
from default_spread.config import DEFAULT_CONFIG_NAME, ESTIMATORS, RunConfig, load_config, write_default_config
from default_spread.errors import DataIntegrityError, SpreadModelError
from default_spread.pipeline import filter_universe, fit_universe
from default_spread.synth import generate_universe, load_universe_spec, merge_universes, write_universe
from default_spread.utils import parse_date

EXIT_VALIDATION = 2
EXIT_DATA = 3


def _setup_logging(verbose: bool, quiet: bool) -> None:
    if quiet:
        level = logging.WARNING
    else:
        level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


def _load_config(path: Optional[str]) -> RunConfig:
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        logging.error("%s", exc)
        raise SystemExit(EXIT_VALIDATION) from exc
    except Exception as exc:  # pragma: no cover - unexpected config errors
        logging.error("Failed to load config: %s", exc)
        raise SystemExit(EXIT_VALIDATION) from exc


def _date_arg(value: str):
    try:
        return parse_date(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    cfg = replace(config)
    for flag, attr in (("issues", "issues"), ("prices", "prices"), ("treasury", "treasury"), ("out", "out")):
        value = getattr(args, flag, None)
        if value:
            setattr(cfg, attr, Path(value))

    resume = getattr(args, "resume", None)
    if resume:
        cfg.resume = Path(resume)

    simple = (
        "estimator",
        "K",
        "alpha_decay",
        "weights",
        "lam",
        "level",
        "prior_shape",
        "prior_sigma2",
        "accrual",
        "delta_sq",
        "epsilon",
        "jobs",
        "seed",
        "as_of",
        "date_from",
        "date_to",
        "treasury_issuer",
    )
    for attr in simple:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)

    if getattr(args, "strict", False):
        cfg.strict = True
    return cfg


def _resolve_config(args, command: str) -> RunConfig:
    cfg = _apply_overrides(_load_config(getattr(args, "config", None)), args)
    try:
        cfg.validate(command)
    except SpreadModelError as exc:
        logging.error("%s", exc)
        raise SystemExit(EXIT_VALIDATION) from exc
    return cfg


def _run(func, cfg: RunConfig):
    try:
        return func(cfg)
    except DataIntegrityError as exc:
        logging.error("%s", exc)
        raise SystemExit(EXIT_DATA) from exc
    except (SpreadModelError, OSError) as exc:
        logging.error("%s", exc)
        raise SystemExit(EXIT_VALIDATION) from exc


def handle_init(args) -> None:
    path = Path(args.path)
    created = write_default_config(path, force=args.force)
    if created:
        print(f"Created config at {path}")
    else:
        print(f"Config already exists: {path}")


def handle_fit(args) -> None:
    cfg = _resolve_config(args, "fit")
    fits = _run(fit_universe, cfg)
    for fit in fits:
        risk = fit.curve.risk_to.get(5.0, float("nan"))
        print(f"{fit.issuer_id}\t{fit.as_of.isoformat()}\tN={fit.n_obs}\trisk_5y={risk:.6g}")


def handle_filter(args) -> None:
    cfg = _resolve_config(args, "filter")
    tracks = _run(filter_universe, cfg)
    for issuer_id, track in sorted(tracks.items()):
        print(f"{issuer_id}\tstates={len(track.states)}\tlast={track.last.state_date.isoformat()}")


def handle_simulate(args) -> None:
    cfg = _apply_overrides(_load_config(getattr(args, "config", None)), args)
    spec_path = Path(args.spec) if args.spec else Path(__file__).parent / "data" / "example_universe.toml"
    try:
        issuers, treasury, n_states, start_date = load_universe_spec(spec_path, seed=cfg.seed)
    except (OSError, SpreadModelError) as exc:
        logging.error("%s", exc)
        raise SystemExit(EXIT_VALIDATION) from exc

    universe = merge_universes(
        [generate_universe(issuer, treasury, n_states, start_date, accrual=cfg.accrual) for issuer in issuers]
    )
    paths = write_universe(universe, cfg.out)
    for name, path in paths.items():
        print(f"{name}\t{path}")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--issues", help="Issue descriptor CSV")
    parser.add_argument("--prices", help="Clean price CSV")
    parser.add_argument("--treasury", help="Treasury zero-yield CSV")
    parser.add_argument("--treasury-issuer", dest="treasury_issuer", help="Fit Treasury from this issuer's bonds")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--estimator", choices=ESTIMATORS, help="Estimator")
    parser.add_argument("--lambda", dest="lam", type=float, help="Ridge strength / prior precision")
    parser.add_argument("--level", type=float, help="Credible level for bands (default 0.95)")
    parser.add_argument("--prior-shape", dest="prior_shape", type=float, help="Inverse-gamma shape of the noise prior")
    parser.add_argument("--prior-sigma2", dest="prior_sigma2", type=float, help="Prior mean of the noise variance")
    parser.add_argument("--K", dest="K", type=int, help="Number of basis functions")
    parser.add_argument("--alpha-decay", dest="alpha_decay", type=float, help="Basis decay rate")
    parser.add_argument("--weights", choices=WEIGHT_SCHEMES, help="Observation weighting scheme")
    parser.add_argument("--accrual", choices=ACCRUAL_CONVENTIONS, help="Accrued interest convention")
    parser.add_argument("--strict", action="store_true", help="Fail on malformed or unresolvable records")
    parser.add_argument("--jobs", type=int, help="Issuers processed in parallel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dspread", description="Corporate default-spread curve fitting")
    parser.add_argument("--version", action="version", version=f"dspread {__version__}")
    parser.add_argument("--config", help=f"Path to {DEFAULT_CONFIG_NAME} (default: ./{DEFAULT_CONFIG_NAME})")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--quiet", action="store_true", help="Only show warnings and errors")

    subparsers = parser.add_subparsers(dest="command", required=True)

    init_parser = subparsers.add_parser("init", help="Create a default config file")
    init_parser.add_argument("--path", default=DEFAULT_CONFIG_NAME, help="Config file path")
    init_parser.add_argument("--force", action="store_true", help="Overwrite if it exists")
    init_parser.set_defaults(func=handle_init)

    fit_parser = subparsers.add_parser("fit", help="Fit one date's curves for every issuer")
    _add_model_flags(fit_parser)
    fit_parser.add_argument("--as-of", dest="as_of", type=_date_arg, help="Valuation date (YYYY-MM-DD)")
    fit_parser.set_defaults(func=handle_fit)

    filter_parser = subparsers.add_parser("filter", help="Filter curves across a date range")
    _add_model_flags(filter_parser)
    filter_parser.add_argument("--from", dest="date_from", type=_date_arg, help="First state date")
    filter_parser.add_argument("--to", dest="date_to", type=_date_arg, help="Last state date")
    filter_parser.add_argument("--delta-sq", dest="delta_sq", type=float, help="Variance amplifier per state")
    filter_parser.add_argument("--epsilon", type=float, help="Variance-of-variance floor")
    filter_parser.add_argument("--resume", help="Track file or previous output directory")
    filter_parser.set_defaults(func=handle_filter)

    simulate_parser = subparsers.add_parser("simulate", help="Write a synthetic bond universe")
    simulate_parser.add_argument("--spec", help="Universe spec TOML (default: bundled example)")
    simulate_parser.add_argument("--out", help="Output directory")
    simulate_parser.add_argument("--seed", type=int, help="Override the spec's seeds")
    simulate_parser.add_argument("--accrual", choices=ACCRUAL_CONVENTIONS, help="Accrued interest convention")
    simulate_parser.set_defaults(func=handle_simulate)

    return parser


def main(argv: Optional[List[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.quiet)
    args.func(args)


if __name__ == "__main__":
    main()
