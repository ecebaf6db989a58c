"""Command-line front end: `hottc check`, `hottc axioms`, `hottc norm`."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .checker import EXIT_IO, EXIT_OK, EXIT_TYPE, Checker, run_check, run_with_big_stack
from .elaborator import DEFAULT_MAX_CLASS_DEPTH, Options
from .errors import HottError
from .kernel import collect_axioms

DEFAULT_FUEL = 1_000_000


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hottc", description="A small checker for homotopy type theory.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--path", action="append", default=None, metavar="DIR",
                        help="extra import root (repeatable); defaults to $HOTTC_PATH")
        sp.add_argument("--max-class-depth", type=int, default=DEFAULT_MAX_CLASS_DEPTH, metavar="N")
        sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL, metavar="N",
                        help="reduction step budget for directives and normalization")

    c = sub.add_parser("check", help="check files or a manifest")
    c.add_argument("paths", nargs="+", type=Path)
    c.add_argument("--manifest", action="store_true", help="treat each path as a manifest file")
    c.add_argument("--json", action="store_true", help="emit one JSON document")
    c.add_argument("--stable-output", action="store_true", help="omit timing for byte-stable reports")
    common(c)

    a = sub.add_parser("axioms", help="print the axioms a constant depends on")
    a.add_argument("file", type=Path)
    a.add_argument("name")
    common(a)

    n = sub.add_parser("norm", help="print the normal form of a term")
    n.add_argument("file", type=Path)
    n.add_argument("term")
    common(n)
    return p


def _search_path(arg: Optional[list[str]]) -> list[Path]:
    if arg is not None:
        return [Path(x) for x in arg]
    env = os.environ.get("HOTTC_PATH", "")
    return [Path(x) for x in env.split(os.pathsep) if x]


def _load(args) -> tuple[Optional[Checker], int]:
    opts = Options(max_class_depth=args.max_class_depth, fuel=args.fuel)
    rep = run_check([args.file], opts, search_path=_search_path(args.path))
    if not rep.ok:
        sys.stderr.write(rep.to_text(stable=True))
        return None, rep.exit_code()
    return rep.checker, EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "check":
        opts = Options(max_class_depth=args.max_class_depth, fuel=args.fuel)
        rep = run_check(args.paths, opts, manifest=args.manifest, search_path=_search_path(args.path))
        out = rep.to_json(args.stable_output) + "\n" if args.json else rep.to_text(args.stable_output)
        sys.stdout.write(out)
        for line in rep.checker.outputs if not args.json else []:
            sys.stdout.write(f"output: {line}\n")
        return rep.exit_code()

    checker, code = _load(args)
    if checker is None:
        return code
    try:
        if args.command == "axioms":
            if args.name not in checker.env:
                sys.stderr.write(f"error: unknown constant '{args.name}'\n")
                return EXIT_TYPE
            for ax in collect_axioms(checker.env, args.name):
                sys.stdout.write(ax + "\n")
            return EXIT_OK
        text = run_with_big_stack(lambda: checker.normalize_text(args.term))
        sys.stdout.write(text + "\n")
        return EXIT_OK
    except HottError as e:
        sys.stderr.write(f"{e.error_class} error ({type(e).__name__}): {e.message}\n")
        return EXIT_IO if e.error_class == "io" else 2 if e.error_class == "parse" else EXIT_TYPE


if __name__ == "__main__":
    sys.exit(main())
