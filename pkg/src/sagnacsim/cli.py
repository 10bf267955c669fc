"""Command-line entry point: ``simulate <scenario> [options]``.

Exit codes: 0 success, 2 configuration error (bad file, bad value, bad
usage), 3 scenario failure (unknown name or a run that cannot produce its
outputs), 4 I/O error writing results.  The output directory defaults to
``./runs/<scenario>``, overridable with ``--out`` or the ``SAGNACSIM_OUT``
environment variable (the scenario name is appended to the variable's value).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from . import __version__
from .config import (
    ConfigError,
    apply_overrides,
    default_plan,
    flatten_keys,
    plan_from_dict,
    read_config_data,
)
from .reports import write_outputs
from .scenarios import (
    ALIASES,
    SCENARIO_NAMES,
    ScenarioError,
    UnknownScenarioError,
    apply_preset,
    canonical_name,
    run_scenario,
)

__all__ = ["build_parser", "main"]

OUTPUT_DIR_ENV = "SAGNACSIM_OUT"


def build_parser() -> argparse.ArgumentParser:
    names = ", ".join(sorted(set(SCENARIO_NAMES) | set(ALIASES)))
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run a calibrated photon-pair counting scenario and "
                    "write CSV tables, a JSON summary, figures, and a run "
                    "manifest.",
        epilog=f"scenarios: {names}")
    parser.add_argument("scenario", help="scenario name or alias")
    parser.add_argument("--config", metavar="PATH",
                        help="YAML or JSON experiment configuration")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the run seed")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default ./runs/<scenario>; "
                             f"env {OUTPUT_DIR_ENV} overrides the base)")
    parser.add_argument("--pulses", type=int, metavar="N",
                        help="override pulses per analyzer setting")
    parser.add_argument("--analytic", action="store_true",
                        help="replace sampling with closed-form expected "
                             "counts (fast oracle runs)")
    parser.add_argument("--workers", type=int, default=None, metavar="N",
                        help="worker processes for batch sampling "
                             "(default: up to 4; results are identical for "
                             "any value)")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    return parser


def _resolve_out_dir(arg_out: Optional[str], scenario: str) -> str:
    if arg_out:
        return arg_out
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base:
        return os.path.join(base, scenario)
    return os.path.join("runs", scenario)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        scenario = canonical_name(args.scenario)
    except UnknownScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 3

    try:
        if args.config is not None:
            data = read_config_data(args.config)
            plan = plan_from_dict(data)
            explicit = set(flatten_keys(data))
        else:
            plan = default_plan()
            explicit = set()
        overrides = {}
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        if args.pulses is not None:
            overrides["run.pulses_per_setting"] = args.pulses
        if overrides:
            plan = apply_overrides(plan, overrides)
            explicit |= set(overrides)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"workers must be ≥ 1, got {args.workers}")
        # Resolve the scenario preset here so the saved config snapshot
        # records exactly the plan the run used (run_scenario re-applies
        # the same preset idempotently).
        plan = apply_preset(plan, scenario, explicit=frozenset(explicit))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    workers = args.workers if args.workers is not None \
        else max(1, min(4, os.cpu_count() or 1))

    try:
        result = run_scenario(scenario, plan, analytic=args.analytic,
                              workers=workers,
                              explicit=frozenset(explicit))
    except UnknownScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 3
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 3

    out_dir = _resolve_out_dir(args.out, scenario)
    try:
        outputs = write_outputs(out_dir, result, plan,
                                config_path=args.config,
                                version=__version__)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4

    print(f"{scenario}: wrote {len(outputs.files)} files + manifest to "
          f"{outputs.directory}")
    for key in ("raw", "net"):
        block = result.summary.get(key)
        if isinstance(block, dict) and "s_value" in block:
            print(f"  {key} S = {block['s_value']:.4f} "
                  f"± {block['s_sigma']:.4f}")
        if isinstance(block, dict) and "fidelity_vs_target" in block:
            print(f"  {key} fidelity = {block['fidelity_vs_target']:.4f}")
    if "purity_by_bandwidth_nm" in result.summary:
        purities = result.summary["purity_by_bandwidth_nm"]
        ordered = sorted(purities.items(), key=lambda item: float(item[0]))
        print("  purity:", ", ".join(
            ("unfiltered" if k == "inf" else f"{k} nm") + f": {v:.4f}"
            for k, v in ordered))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
