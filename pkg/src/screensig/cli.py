"""Command line entry point: ``screensig <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ScreenSigError
from .scenario import STAGES, Pipeline, Scenario, compare
from .verify import SUITES, verify

# Stages each subcommand needs; up-to-date ones are skipped.
_REQUIRES = {"mesh": ["mesh"], "forward": ["mesh", "forward"], "eigs": ["mesh", "eigs"],
             "detect": ["mesh", "forward", "eigs", "detect"], "run": None}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="screensig", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _REQUIRES:
        s = sub.add_parser(name, help=f"run the {name} stage" if name != "run"
                           else "run the stages listed in the scenario")
        s.add_argument("--scenario", required=True, type=Path)
        s.add_argument("--out", type=Path, help="output directory (default: scenario 'output')")
        s.add_argument("--threads", type=int, default=1, help="concurrent lambda tasks")
        s.add_argument("--stage", action="append", choices=STAGES,
                       help="restrict to this stage (repeatable)")
        s.add_argument("--force", action="store_true", help="ignore up-to-date artifacts")
    c = sub.add_parser("compare", help="eigenvalue drift between two detection reports")
    c.add_argument("baseline", type=Path)
    c.add_argument("perturbed", type=Path)
    c.add_argument("--max-pair", type=float, help="largest distance still paired")
    c.add_argument("--json", type=Path, help="also write the drift summary as JSON")
    v = sub.add_parser("verify", help="run the oracle checks")
    v.add_argument("--suite", choices=SUITES, default="all")
    return p


def _run(args) -> int:
    sc = Scenario.load(args.scenario)
    stages = args.stage or _REQUIRES[args.command]
    pipe = Pipeline(sc, args.out, args.threads)
    status = pipe.run(stages, force=args.force)
    for stage, what in status.items():
        print(f"{stage:8s} {what}")
    report = pipe.out / "report.json"
    if "detect" in status and report.exists():
        rep = json.loads(report.read_text())
        print(f"peaks: {', '.join(f'{x:.3f}' for x in rep['locations'])}")
        print(f"matched {len(rep['matched'])}, missed {len(rep['missed'])}, "
              f"spurious {len(rep['spurious'])}"
              + ("  [limited aperture]" if rep["limited_aperture"] else ""))
    print(f"manifest: {pipe.manifest_path}")
    return 0


def _compare(args) -> int:
    summary = compare(args.baseline, args.perturbed, args.max_pair)
    print(summary.table())
    print(f"grid step {summary.grid_step:g}; max |shift| {summary.max_shift:.4f}")
    if args.json:
        args.json.write_text(json.dumps({
            "grid_step": summary.grid_step,
            "drifts": [vars(d) for d in summary.drifts],
            "unmatched_baseline": summary.unmatched_baseline,
            "unmatched_perturbed": summary.unmatched_perturbed}, indent=1))
    return 0


def _verify(args) -> int:
    table = verify(args.suite)
    print(table.table())
    return 0 if table.ok else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            return _compare(args)
        if args.command == "verify":
            return _verify(args)
        return _run(args)
    except ScreenSigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
