"""Command-line front end.

Usage::

    qubitpair run <config.toml | preset> [--out DIR] [--format csv,json,svg]
                  [--no-lamb-shift] [--secular full|paper|threshold:EPS]
                  [--override-validity-guard]
    qubitpair list-presets

Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
3 frequency-crossing singularity, 4 steady state or integration did not
converge.  ``QUBITPAIR_WORKERS`` sets the number of sweep worker processes.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import warnings

from .config import FORMATS, list_presets, parse_secular, resolve, with_overrides
from .errors import (ConfigError, CrossingSingularity, NoConvergence,
                     QuadratureError, StepFailure)
from .scenario import run_scenario, write_bundle

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_ERROR", "EXIT_CONFIG",
           "EXIT_CROSSING", "EXIT_CONVERGENCE"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CROSSING = 3
EXIT_CONVERGENCE = 4


def _formats(text):
    items = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in items if f not in FORMATS]
    if not items or bad:
        raise argparse.ArgumentTypeError(
            f"formats must be a comma-separated subset of {','.join(FORMATS)}")
    return tuple(dict.fromkeys(items))


def _secular(text):
    try:
        parse_secular(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def build_parser():
    # argparse exits with 2 on usage errors, which matches EXIT_CONFIG
    p = argparse.ArgumentParser(prog="qubitpair",
                                description="Master equations for two coupled qubits in thermal baths.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or a built-in preset")
    run.add_argument("target", help="path to a TOML scenario or a preset name")
    run.add_argument("--out", metavar="DIR", help="output directory (default: ./out/<name>)")
    run.add_argument("--format", type=_formats, default=None,
                     help="comma-separated output formats: csv, json, svg")
    run.add_argument("--no-lamb-shift", action="store_true",
                     help="drop the Lamb-shift Hamiltonian")
    run.add_argument("--secular", type=_secular, default=None,
                     help="full, paper or threshold:EPS")
    run.add_argument("--override-validity-guard", action="store_true",
                     help="allow local master equations at strong coupling")
    sub.add_parser("list-presets", help="list the built-in scenarios")
    return p


def _print_summary(bundle, paths, out):
    print(f"scenario {bundle.name}", file=out)
    text = json.dumps(bundle.summary, indent=2, sort_keys=True, default=str)
    for line in text.splitlines()[1:-1]:
        print(line, file=out)
    for path in paths:
        print(f"  wrote {path}", file=out)


def _report_warnings(caught):
    """Print each warning once; messages differing only in numbers are counted."""
    groups = {}
    for w in caught:
        msg = str(w.message)
        key = re.sub(r"-?\d[\d.e+-]*", "#", msg)
        first, count = groups.get(key, (msg, 0))
        groups[key] = (first, count + 1)
    for first, count in groups.values():
        extra = f" (and {count - 1} similar)" if count > 1 else ""
        print(f"warning: {first}{extra}", file=sys.stderr)


def _run(args, out):
    cfg = resolve(args.target)
    cfg = with_overrides(cfg, lamb_shift=False if args.no_lamb_shift else None,
                         secular=args.secular,
                         override_validity_guard=args.override_validity_guard,
                         formats=args.format, directory=args.out)
    directory = cfg.output.directory or f"out/{cfg.name}"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bundle = run_scenario(cfg)
    _report_warnings(caught)
    paths = write_bundle(bundle, directory, cfg.output.formats)
    _print_summary(bundle, paths, out)
    return EXIT_OK


def main(argv=None, out=None):
    """Entry point; returns the process exit code."""
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name:12s} {desc}", file=out)
            return EXIT_OK
        return _run(args, out)
    except CrossingSingularity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CROSSING
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoConvergence, StepFailure, QuadratureError) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
