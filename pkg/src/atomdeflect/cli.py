"""Command-line front end.

    atomdeflect presets [--dump NAME]
    atomdeflect validate (--preset NAME | --config FILE)
    atomdeflect run (--preset NAME | --config FILE) [--out-dir DIR] ...

Exit codes: 0 success, 2 configuration error, 3 numerical guard failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import SCHEMA_DOC, ConfigError, load_config_file, parse_config
from .presets import PRESETS, dump_preset, list_presets, preset_config
from .measurement import AliasingError
from .propagation import SamplingError
from .scenario import NumericalGuardError, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("atomdeflect")


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    src.add_argument("--config", type=Path, help="scenario YAML file")
    p.add_argument("--grid", type=int, default=None, help="grid points per axis (override)")
    p.add_argument("--nmax", type=int, default=None, help="Fock cutoff per mode (override)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomdeflect",
        description="Conditional deflection patterns of Lambda atoms in crossed standing waves.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a scenario and write data files")
    _add_source(p)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--normalize", choices=["raw", "unit"], default="raw")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--no-png", action="store_true", help="skip heatmap rendering")

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.add_argument("--dump", metavar="NAME", help="print a preset as an editable YAML config")
    p.add_argument("--schema", action="store_true", help="print the config file schema")

    p = sub.add_parser("validate", help="check a scenario without running it")
    _add_source(p)
    return parser


def _load(args):
    overrides = {"grid_points": args.grid, "n_max": args.nmax}
    if args.preset:
        return parse_config(preset_config(args.preset), **overrides), args.preset
    cfg = load_config_file(args.config, **overrides)
    return cfg, None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "presets":
        if args.schema:
            print(SCHEMA_DOC, end="")
        elif args.dump:
            if args.dump not in PRESETS:
                print(f"error: unknown preset {args.dump!r}", file=sys.stderr)
                return EXIT_CONFIG
            print(dump_preset(args.dump), end="")
        else:
            print(list_presets())
        return EXIT_OK

    try:
        cfg, label = _load(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.name} (digest {cfg.digest()}, n_max={cfg.truncation.n_max}, "
              f"grid {cfg.grid.nx}x{cfg.grid.ny})")
        return EXIT_OK

    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = run_scenario(cfg, args.out_dir, label=label, threads=args.threads,
                               normalization=args.normalize, fmt=args.format,
                               png=not args.no_png)
    except (NumericalGuardError, AliasingError, SamplingError) as e:
        print(f"numerical guard failed: {e}", file=sys.stderr)
        print("remedy: increase --nmax or --grid, or widen/refine the grid in the config",
              file=sys.stderr)
        return EXIT_NUMERIC
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
