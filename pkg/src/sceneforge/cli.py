"""Command line entry point: ``sceneforge --participants car=2 --format ndjson,html``.

Exit codes: 0 success, 1 KB load error, 2 KB validation error,
3 generation error, 4 output error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from sceneforge.kb import UnknownClassError
from sceneforge.kbformat import KbLoadError, KbValidationError
from sceneforge.layout import UnsatisfiableAxiomError
from sceneforge.pipeline import (
    FORMATS,
    GenerationConfig,
    UnknownSignatureError,
    VocabularyError,
    explain,
    format_report,
    generate,
    load_config_kb,
    write_outputs,
)
from sceneforge.reasoner import StratificationError
from sceneforge.scene import CapacityError, EmptyGridError, ManeuverInferenceError

EXIT_OK, EXIT_LOAD, EXIT_VALIDATION, EXIT_GENERATION, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


def parse_participants(text: str) -> dict[str, int]:
    """``car=2,truck=1`` -> ``{"car": 2, "truck": 1}``."""
    out: dict[str, int] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, count = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"bad participant spec {item!r}; expected class=count")
        try:
            n = int(count)
        except ValueError:
            raise UsageError(f"bad participant count in {item!r}") from None
        if n < 0:
            raise UsageError(f"negative participant count in {item!r}")
        out[name.strip()] = out.get(name.strip(), 0) + n
    return out


def _csv(text: Optional[str]) -> tuple[str, ...]:
    """Split on commas outside square brackets, so layout signatures survive."""
    items, depth, cur = [], 0, []
    for ch in text or "":
        depth += (ch == "[") - (ch == "]")
        if ch == "," and depth == 0:
            items.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    items.append("".join(cur))
    return tuple(s.strip() for s in items if s.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sceneforge", description="Generate traffic scene catalogs from a knowledge base.")
    p.add_argument("--kb", default="", help="knowledge base file (default: bundled German motorway sample)")
    p.add_argument("--layouts", default="", help="comma-separated layout classes or layout signatures (default: all)")
    p.add_argument("--positions-per-lane", type=int, default=1)
    p.add_argument("--participants", default="", help="class=count list, e.g. car=2,truck=1")
    p.add_argument("--mode", choices=("comfort", "critical"), default="comfort")
    p.add_argument("--weather", default="", help="comma-separated weather setups (default: all)")
    p.add_argument("--format", default="ndjson", help=f"comma-separated subset of {','.join(FORMATS)}")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--page-size", type=int, default=100)
    p.add_argument("--max-scenes", type=int, default=0, help="cap after canonical ordering; 0 = unlimited")
    p.add_argument("--stats", action="store_true", help="print the statistics report")
    p.add_argument("--trace-inference", action="store_true", help="print rule firing counts")
    p.add_argument("--explain", metavar="SIGNATURE", help="print the derivation trace of one scene and exit")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    return p


def config_from_args(args: argparse.Namespace) -> GenerationConfig:
    return GenerationConfig(
        kb=args.kb,
        layouts=_csv(args.layouts),
        positions_per_lane=args.positions_per_lane,
        participants=parse_participants(args.participants),
        mode=args.mode,
        weather=_csv(args.weather),
        formats=_csv(args.format),
        out=args.out,
        page_size=args.page_size,
        max_scenes=args.max_scenes,
        trace=args.trace_inference,
        jobs=args.jobs,
    )


def _fail(code: int, message: str) -> int:
    print(f"sceneforge: error: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (UsageError, ValueError) as exc:
        return _fail(EXIT_GENERATION, str(exc))

    try:
        kb = load_config_kb(config)
    except KbValidationError as exc:
        details = "; ".join(f"{d.location}: {d.message}" for d in exc.diagnostics)
        return _fail(EXIT_VALIDATION, f"invalid knowledge base: {details}")
    except (VocabularyError, StratificationError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except (KbLoadError, OSError, UnicodeDecodeError) as exc:
        return _fail(EXIT_LOAD, f"cannot load knowledge base: {exc}")

    try:
        if args.explain:
            print("\n".join(explain(config, args.explain, kb)))
            return EXIT_OK
        result = generate(config, kb)
    except (
        UnknownClassError,
        UnknownSignatureError,
        CapacityError,
        EmptyGridError,
        ManeuverInferenceError,
        UnsatisfiableAxiomError,
        ValueError,
    ) as exc:
        return _fail(EXIT_GENERATION, str(exc))

    try:
        write_outputs(result, config.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")

    if args.stats:
        print(format_report(result.report()))
    if args.trace_inference:
        for rule, n in sorted(result.firings.items()):
            print(f"fired {rule}: {n}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
