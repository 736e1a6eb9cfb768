"""Command-line entry point: run a scheduling experiment and write its report."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict

from .experiment import ExperimentConfig, ParseError, ValidationError, emit_report, run_experiment

log = logging.getLogger("chasepp")


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="chasepp",
        description="Simulate generator on/off scheduling policies and report costs and ratio bounds.",
    )
    ap.add_argument("--config", help="YAML file with experiment settings")
    ap.add_argument("--algo", type=_csv_list(str), help="comma-separated algorithms (overrides config)")
    ap.add_argument("--window", type=_csv_list(int), help="comma-separated window lengths in slots")
    ap.add_argument("--noise-std", type=_csv_list(float), help="comma-separated error std fractions")
    ap.add_argument("--noise-kind", choices=["none", "gaussian", "hyperbolic"])
    ap.add_argument("--seed", type=_csv_list(int), help="comma-separated seeds")
    ap.add_argument("--trace", help="CSV trace (t,a_kw,h_kw,p_usd_per_kwh); default is a synthetic trace")
    ap.add_argument("--synthetic", help="synthetic trace kind when no --trace is given")
    ap.add_argument("--horizon", type=int, help="number of slots to simulate")
    ap.add_argument("--lower-bound", action="store_true", default=None, help="also compute the lower bound per window")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    data = asdict(base)
    overrides = {
        "algorithms": args.algo,
        "windows": args.window,
        "noise_std": args.noise_std,
        "noise_kind": args.noise_kind,
        "seeds": args.seed,
        "trace": args.trace,
        "synthetic": args.synthetic,
        "horizon": args.horizon,
        "lower_bound": args.lower_bound,
        "out": args.out,
        "format": args.format,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.noise_std and any(s > 0 for s in args.noise_std) and data["noise_kind"] == "none":
        data["noise_kind"] = "gaussian"
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        log.info("running %d algorithm(s) over windows %s", len(cfg.algorithms), cfg.windows)
        report = run_experiment(cfg)
        text = emit_report(report, cfg.format, cfg.out)
    except (ParseError, ValidationError, ValueError, OSError) as e:
        print(f"chasepp: error: {e}", file=sys.stderr)
        return 2
    if cfg.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
