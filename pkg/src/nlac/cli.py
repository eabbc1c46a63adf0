"""Command-line front end.

Subcommands: run, convergence-time, convergence-space, convergence-delta,
stability, bubble, coeffs. Every subcommand accepts --config (flat key=value
file), --out, --seed and --threads plus per-key override flags; flags win
over the config file, which wins over defaults.

Exit codes: 0 success, 1 numeric/runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagnostics import RateTable
from .etd import MaxPrincipleError, NumericalError
from .harness import (ConfigError, EXPERIMENTS, _KEY_PARSERS, bubble_experiment,
                      coerce_value, config_from_mapping, convergence_delta,
                      convergence_space, convergence_time, parse_config_text,
                      single_run, stability_experiment, write_coefficients)
from .operator import QuadratureError
from .spectral import SpectralConsistencyError


def _build_parser() -> argparse.ArgumentParser:
    keys = ", ".join(sorted(k for k in _KEY_PARSERS if k != "experiment"))
    parser = argparse.ArgumentParser(
        prog="nlac",
        description="Nonlocal Allen-Cahn simulator and experiment harness",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        cmd = sub.add_parser(
            name, help=f"{name} experiment",
            epilog=f"any configuration key is also a flag: {keys}")
        cmd.add_argument("--config", help="flat key=value configuration file")
        cmd.add_argument("--out", required=True, help="output directory")
        for key in _KEY_PARSERS:
            if key == "experiment":
                continue
            cmd.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                             metavar="V", help=argparse.SUPPRESS)
    return parser


def _print_table(label: str, table: RateTable) -> None:
    print(f"  {label}:")
    for row in table.rows:
        rate = "   --" if row.rate is None else f"{row.rate:5.3f}"
        print(f"    param {row.param:<12.6g} error {row.error:12.6e}  rate {rate}")


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)

    try:
        mapping = {}
        if args.config:
            path = Path(args.config)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            mapping.update(parse_config_text(path.read_text(encoding="utf-8")))
        for key in _KEY_PARSERS:
            if key == "experiment":
                continue
            override = getattr(args, key, None)
            if override is not None:
                mapping[key] = override
        mapping = {key: coerce_value(key, raw) for key, raw in mapping.items()}
        mapping["experiment"] = args.experiment
        cfg = config_from_mapping(mapping)
        out = Path(args.out)
    except ConfigError as exc:
        print(f"nlac: config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.experiment == "run":
            result = single_run(cfg, out=out)
            from .diagnostics import max_norm
            print(f"run: {cfg.scheme}/{cfg.model} steps={result.steps_taken} "
                  f"max|u|={max_norm(result.final):.6f} "
                  f"steady={result.reached_steady} out={out}")
        elif args.experiment == "convergence-time":
            tables = convergence_time(cfg, out=out)
            for key in sorted(tables):
                scheme, alpha, delta = key
                _print_table(f"{scheme} alpha={alpha:g} delta={delta:g}", tables[key])
            print(f"convergence-time: {len(tables)} rate tables written to {out}")
        elif args.experiment == "convergence-space":
            tables = convergence_space(cfg, out=out)
            for alpha in sorted(tables):
                _print_table(f"alpha={alpha:g}", tables[alpha])
            print(f"convergence-space: {len(tables)} rate tables written to {out}")
        elif args.experiment == "convergence-delta":
            tables = convergence_delta(cfg, out=out)
            for alpha in sorted(tables):
                _print_table(f"alpha={alpha:g}", tables[alpha])
            print(f"convergence-delta: {len(tables)} rate tables written to {out}")
        elif args.experiment == "stability":
            results = stability_experiment(cfg, out=out)
            for label, result in sorted(results.items()):
                peak = max(rec.max_norm for rec in result.log.records)
                print(f"  {label}: steps={result.steps_taken} peak max|u|={peak:.6f} "
                      f"steady={result.reached_steady}")
            print(f"stability: {len(results)} runs written to {out}")
        elif args.experiment == "bubble":
            outcomes = bubble_experiment(cfg, out=out)
            for delta in sorted(outcomes):
                o = outcomes[delta]
                predicted = "n/a" if o.predicted is None else f"{o.predicted:.6f}"
                print(f"  delta={delta:g}: measured jump {o.measured:.6f} "
                      f"predicted {predicted} (t={o.t_measured:g}, "
                      f"steady={o.reached_steady})")
            print(f"bubble: {len(outcomes)} runs written to {out}")
        elif args.experiment == "coeffs":
            path = write_coefficients(cfg, out=out)
            print(f"coeffs: wrote {path}")
        else:  # unreachable: argparse restricts choices
            raise ConfigError(f"unknown experiment {args.experiment!r}")
    except ConfigError as exc:
        print(f"nlac: config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"nlac: config error: {exc}", file=sys.stderr)
        return 2
    except MaxPrincipleError as exc:
        print(f"nlac: numeric failure at step {exc.step_index}: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"nlac: numeric failure at step {exc.step_index}: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, SpectralConsistencyError) as exc:
        print(f"nlac: numeric failure: {exc}", file=sys.stderr)
        return 1
    return 0


main = cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
