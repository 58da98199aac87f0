"""Command line front end for the sweep harness.

qlos design-quantizer|mi-sweep|ber-sweep|range-sweep --config <file>
     [--seed N] [--out <path>]

design-quantizer can also be driven without a config file:

qlos design-quantizer --family iq --bins 4 --snr-db 10 --metric eqprob

Exit codes: 0 success, 2 config error, 3 numerical-accuracy failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import harness
from .infotheory import CapacityEstimationError
from .quantizer import ConvergenceError
from .stats import QuadratureError

_SUBCOMMANDS = ("design-quantizer", "mi-sweep", "ber-sweep", "range-sweep")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlos",
        description="Monte Carlo sweeps for quantized line-of-sight MIMO "
                    "links")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment description")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config master_seed")
        p.add_argument("--out", default=None,
                       help="override the config output path")
        if name == "design-quantizer":
            p.add_argument("--family", choices=("iq", "ap", "phase"))
            p.add_argument("--bins", type=int,
                           help="S per axis (iq) or M sectors (phase)")
            p.add_argument("--rings", type=int, help="K annuli (ap)")
            p.add_argument("--sectors", type=int, help="M sectors (ap)")
            p.add_argument("--snr-db", type=float)
            p.add_argument("--metric", choices=("eqprob", "mmsqe"),
                           default=None)
    return parser


def _design_config_from_flags(args) -> str:
    if args.family is None or args.snr_db is None:
        raise harness.ConfigError(
            "design-quantizer needs either --config or both --family and "
            "--snr-db")
    quant: dict = {"family": args.family}
    if args.metric is not None:
        quant["metric"] = args.metric
    if args.bins is not None:
        quant["bins"] = args.bins
    if args.rings is not None:
        quant["rings"] = args.rings
    if args.sectors is not None:
        quant["sectors"] = args.sectors
    doc = {"experiment": "design_quantizer", "quantizer": quant,
           "snr_db": args.snr_db}
    return json.dumps(doc)


def _run(args) -> int:
    expected = args.command.replace("-", "_")
    if args.config is not None:
        cfg = harness.load_config(args.config, seed_override=args.seed,
                                  out_override=args.out)
    elif args.command == "design-quantizer":
        cfg = harness.parse_config(_design_config_from_flags(args),
                                   out_override=args.out)
    else:
        raise harness.ConfigError("--config is required")
    if cfg.experiment != expected:
        raise harness.ConfigError(
            f"config declares experiment '{cfg.experiment}' but the "
            f"subcommand expects '{expected}'")

    if cfg.experiment == "design_quantizer":
        doc = harness.run_design_quantizer(cfg)
        text = json.dumps(doc, indent=1) + "\n"
        if cfg.output is None:
            sys.stdout.write(text)
        else:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return 0

    result = harness.run_sweep(cfg)
    for row in result.rows:
        for value in row:
            if isinstance(value, float) and not math.isfinite(value):
                raise FloatingPointError(
                    f"non-finite value in result row: {row}")
    if cfg.output is None:
        harness.emit_csv(result, sys.stdout)
    else:
        harness.write_result(result, cfg.output)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ConvergenceError, CapacityEstimationError, QuadratureError,
            FloatingPointError) as e:
        print(f"numerical-accuracy failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
