"""Command-line interface.

Subcommands: bound, twobody, singularity-map, scatter-drive.  Exit codes:
0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import parse_config
from .errors import NumericalError, ValidationError
from .runner import run

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faddeev3d",
        description="Momentum-space three-body solver for unequal masses.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", required=True, metavar="FILE")
        p.add_argument("--out", required=True, metavar="DIR")
        p.add_argument("--workers", type=int, default=None, help="override run.workers")

    p_bound = sub.add_parser("bound", help="three-body binding energy and wave-function surfaces")
    common(p_bound)

    p_two = sub.add_parser("twobody", help="two-body bound state of one pair")
    common(p_two)

    p_map = sub.add_parser("singularity-map", help="logarithmic-singularity region CSV")
    common(p_map)
    p_map.add_argument("--variant", type=int, default=None, help="Green-function variant 1..6")
    p_map.add_argument("--energy", type=float, default=None, help="three-body energy in MeV")

    p_sc = sub.add_parser("scatter-drive", help="driving terms, kernel iterations, amplitudes")
    common(p_sc)
    p_sc.add_argument("--energy", type=float, default=None, help="three-body energy in MeV")
    p_sc.add_argument("--q0", type=float, default=None, help="beam momentum in MeV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if cfg.mode != args.command:
            raise ValidationError(
                f"config mode {cfg.mode!r} does not match subcommand {args.command!r}"
            )
        if args.workers is not None:
            cfg.workers = args.workers
            cfg.resolved["run.workers"] = str(args.workers)
        for attr, key in (("variant", "variant"), ("energy", "energy"), ("q0", "q0")):
            value = getattr(args, attr, None)
            if value is not None:
                cfg.mode_params[key] = value
                cfg.resolved[f"{cfg.mode}.{key}"] = f"{value:.17g}" if isinstance(value, float) else str(value)
        manifest = run(cfg, Path(args.out))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {len(manifest.files)} files + manifest.json to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
