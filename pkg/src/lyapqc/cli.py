"""Command-line front end: ``lyapqc {construct,measure,verify,render}``.

Exit status: 0 when every verdict passes, 1 when a check fails (or a
numerical error interrupts a run), 2 on configuration errors.
"""

import argparse
import sys

from .errors import LyapqcError, ScenarioError
from .scenario import (
    construct_artifacts,
    load_scenario,
    measure_constants,
    render_figures,
    run_checks,
    write_summary,
)


def build_parser():
    p = argparse.ArgumentParser(prog="lyapqc", description="Lyapunov regions and quasiconformal distortion checks.")
    sub = p.add_subparsers(dest="verb", required=True)
    helps = {
        "construct": "write region and curve boundaries (CSV) and region specs (key-value)",
        "measure": "estimate l1, arc-chord and l2 constants of the scenario curves",
        "verify": "run the scenario checks, write one CSV per check, summary.txt and figures",
        "render": "write the scenario figures as SVG",
    }
    for verb, text in helps.items():
        s = sub.add_parser(verb, help=text)
        s.add_argument("--scenario", required=True, help="scenario INI file")
        s.add_argument("--out", help="output directory (overrides output_dir)")
        s.add_argument("--seed", type=int, help="sampling seed (overrides the scenario seed)")
        s.add_argument("--samples", type=int, help="default sample count for checks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be a non-negative integer", file=sys.stderr)
        return 2
    try:
        scen = load_scenario(args.scenario, args.seed, args.samples, args.out)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LyapqcError as exc:
        print(f"error while building {args.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    def log(msg):
        print(msg, file=sys.stderr)

    try:
        if args.verb == "construct":
            construct_artifacts(scen)
            return 0
        if args.verb == "measure":
            for row in measure_constants(scen):
                print(row)
            return 0
        if args.verb == "render":
            for p in render_figures(scen):
                print(p)
            return 0
        outcomes = run_checks(scen, log)
        ok = write_summary(scen, outcomes)
        render_figures(scen)
        for o in outcomes:
            print(f"{o.name}: {'pass' if o.verdict else 'FAIL'}")
        return 0 if ok else 1
    except LyapqcError as exc:
        log(f"{args.scenario}: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
