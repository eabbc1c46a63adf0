"""Script entry: one figure per invocation.

    nlac-plots snapshot      --field  DUMP --out FIG.png
    nlac-plots norms         --runlog CSV  --out FIG.png
    nlac-plots energy        --runlog CSV  --out FIG.png
    nlac-plots cross-section --field  DUMP --out FIG.png [--row I]
                             [--predicted-jump X]
    nlac-plots rates         --rates  CSV  --out FIG.png

Exit codes: 0 ok, 1 schema mismatch (message carries file and line number),
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .readers import SchemaError
from .render import PlotJob, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlac-plots",
                                     description="Render figures from nlac output files")
    sub = parser.add_subparsers(dest="kind", required=True)

    snapshot = sub.add_parser("snapshot", help="phase-field heatmap from a field dump")
    snapshot.add_argument("--field", required=True)

    norms = sub.add_parser("norms", help="maximum-norm history from runlog.csv")
    norms.add_argument("--runlog", required=True)

    energy = sub.add_parser("energy", help="energy history from runlog.csv")
    energy.add_argument("--runlog", required=True)

    section = sub.add_parser("cross-section",
                             help="fixed-y profile from a field dump, with jump annotation")
    section.add_argument("--field", required=True)
    section.add_argument("--row", type=int, default=None,
                         help="y index of the section (default: midline)")
    section.add_argument("--predicted-jump", type=float, default=None,
                         help="theoretical jump drawn as a horizontal span")

    rates = sub.add_parser("rates", help="log-log error plot from rates.csv")
    rates.add_argument("--rates", required=True)

    for cmd in (snapshot, norms, energy, section, rates):
        cmd.add_argument("--out", required=True, help="output image path (.png/.svg)")
        cmd.add_argument("--title", default=None)
    return parser


def cli_main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    input_path = getattr(args, "field", None) or getattr(args, "runlog", None) \
        or getattr(args, "rates", None)
    job = PlotJob(kind=args.kind, input_path=Path(input_path),
                  output_path=Path(args.out),
                  row=getattr(args, "row", None),
                  predicted_jump=getattr(args, "predicted_jump", None),
                  title=args.title)
    try:
        result = render(job)
    except SchemaError as exc:
        print(f"nlac-plots: schema mismatch: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"nlac-plots: {exc}", file=sys.stderr)
        return 1
    extra = ""
    if result.measured_jump is not None:
        extra = f" measured_jump={result.measured_jump:.6f}"
        if result.predicted_jump is not None:
            extra += f" predicted_jump={result.predicted_jump:.6f}"
    print(f"nlac-plots: wrote {result.output_path}{extra}")
    return 0


main = cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
