"""Command-line entry point.

Each subcommand runs one experiment; the subcommand must agree with the
config file's "experiment" field so a mixed-up invocation fails loudly
instead of running the wrong study. Flags override the corresponding
config fields before validation.

Exit codes: 0 all gates passed, 1 a tolerance gate failed, 2 invalid
config, 3 runtime failure. Errors are emitted as a JSON object on stderr
so calling scripts never have to parse prose.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .experiments import EXPERIMENT_NAMES, run, validate_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ong-lab",
        description=(
            "Monte Carlo experiments on the on-line nearest-neighbour graph "
            "over uniform points in the unit cube"
        ),
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENT_NAMES:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument(
            "--seed", type=int, help="master seed (overrides config master_seed)"
        )
        p.add_argument(
            "--threads", type=int, help="worker threads (overrides config threads)"
        )
        p.add_argument(
            "--shadow-oracle",
            action="store_true",
            help="shadow every direct graph build with the brute-force oracle",
        )
        p.add_argument(
            "--dump-edges",
            action="store_true",
            help="also write edges.csv for the replicate-0 build of each parameter point",
        )
    return parser


def _error_json(kind: str, message: str, field: str | None = None) -> str:
    payload: dict = {"type": kind, "error": message}
    if field is not None:
        payload["field"] = field
    return json.dumps(payload, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(_error_json("config", f"cannot read config file: {exc}"), file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(_error_json("config", f"config is not valid JSON: {exc}"), file=sys.stderr)
        return 2

    if isinstance(raw, dict):
        if args.out is not None:
            raw["out_dir"] = args.out
        if args.seed is not None:
            raw["master_seed"] = args.seed
        if args.threads is not None:
            raw["threads"] = args.threads
        if args.shadow_oracle:
            raw["shadow_oracle"] = True
        if args.dump_edges:
            raw["dump_edges"] = True

    try:
        config = validate_config(raw)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"subcommand '{args.experiment}' does not match config experiment "
                f"'{config.experiment}'",
                field="experiment",
            )
        result = run(config)
    except ConfigError as exc:
        print(_error_json("config", str(exc), exc.field), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(_error_json("runtime", f"{type(exc).__name__}: {exc}"), file=sys.stderr)
        return 3

    print(
        json.dumps(
            {
                "experiment": config.experiment,
                "out_dir": result.out_dir,
                "passed": result.passed,
                "gates": [
                    {
                        "name": g.get("name"),
                        "passed": g.get("passed"),
                        "value": g.get("value"),
                        "informational": g.get("informational", False),
                    }
                    for g in result.gate_results
                ],
            },
            sort_keys=True,
        )
    )
    return result.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
