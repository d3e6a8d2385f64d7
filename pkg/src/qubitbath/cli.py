"""Command-line interface.

    qubitbath run --config experiment.cfg [--seed S] [--out DIR] [--threads K]
    qubitbath presets
    qubitbath check --config experiment.cfg

``run`` exits 0 only if the run completed and the norm diagnostic passed.
The worker count defaults to the QUBITBATH_THREADS environment variable
(else 1); the --threads flag overrides it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import load_config
from .errors import QubitBathError
from .presets import format_catalogue
from .runner import run

THREADS_ENV = "QUBITBATH_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise QubitBathError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if val < 1:
        raise QubitBathError(f"{THREADS_ENV} must be >= 1, got {val}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubitbath",
        description="Exact single-excitation qubit/bath decay simulator and preset runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("--config", required=True, help="path to a key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="output directory (default: ./runs/<preset>)")
    p_run.add_argument("--threads", type=int, default=None,
                       help=f"worker count (default: ${THREADS_ENV} or 1)")

    sub.add_parser("presets", help="list the preset catalogue with provenance")

    p_check = sub.add_parser("check", help="validate a config without running")
    p_check.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            sys.stdout.write(format_catalogue())
            return 0

        if args.command == "check":
            cfg = load_config(args.config)
            from .runner import resolve_plan

            plan = resolve_plan(cfg)
            print(f"config ok: preset {plan.preset} mode {plan.mode} "
                  f"N = {plan.bath_spec.n_oscillators} seed = {plan.seed}")
            return 0

        # run
        cfg = load_config(args.config)
        threads = args.threads if args.threads is not None else _default_threads()
        if threads < 1:
            raise QubitBathError(f"--threads must be >= 1, got {threads}")
        out_dir = Path(args.out) if args.out else Path("runs") / cfg.preset
        report = run(cfg, out_dir, seed=args.seed, threads=threads)
        print((out_dir / "report.txt").read_text(encoding="utf-8"))
        return 0 if report.ok else 1

    except QubitBathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
