"""Command-line interface: ``gkm compute``, ``gkm verify``, ``gkm sheaf``, ``gkm groups``.

Exit status is 0 on success, 1 when a computation fails or a golden row does
not match, and 2 on invalid arguments or input files.  JSON output is sorted
and indented so identical configurations give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema

from . import golden
from .pipeline import parse_bits, resolve_workers, table_row
from .roots import UnknownGroupType, load, registry_keys
from .sheaves import SheafError, sections_report, sheaf_from_descriptor

log = logging.getLogger("gkmsheaves")


class UsageError(Exception):
    """Invalid arguments or input; exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    group: str | None = None
    g: int = 1
    c: str = "regular"
    characters: tuple[tuple[int, ...], ...] | None = None
    truncation: int | None = None
    workers: int | None = None
    output_format: str = "json"
    output: str | None = None


def data_path(name: str) -> Path:
    return Path(str(resources.files("gkmsheaves") / "data" / name))


def format_polynomial(coeffs: Sequence) -> str:
    terms = []
    for d, c in enumerate(coeffs):
        if c == 0:
            continue
        mag = abs(c)
        body = "t" if d == 1 else f"t^{d}" if d else ""
        if not body:
            text = str(mag)
        else:
            text = body if mag == 1 else f"{mag}{body}"
        sign = "-" if c < 0 else "+"
        terms.append((sign, text))
    if not terms:
        return "0"
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in terms[1:]:
        out += f" {sign} {text}"
    return out


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonnegative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gkm", description="GKM-sheaf cohomology of representation varieties")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def output_opts(q):
        q.add_argument("--format", choices=("json", "text"), default="json", dest="output_format")
        q.add_argument("--output", help="write the result to this file instead of stdout")

    c = sub.add_parser("compute", help="Hilbert numerators of one table row")
    c.add_argument("--group", required=True, help="root datum key, e.g. A2 or SO3")
    c.add_argument("--g", type=_positive_int, default=1, help="genus (number of exterior slots)")
    c.add_argument("--c", default="regular", help="'regular' or a central element name such as 'identity'")
    c.add_argument("--chars", help="comma-separated characters as bit strings (default: all orbits)")
    c.add_argument("--D", type=_nonnegative_int, dest="truncation", help="truncation degree")
    c.add_argument("--workers", type=_positive_int, help="worker processes (default: GKM_WORKERS or 1)")
    output_opts(c)

    v = sub.add_parser("verify", help="compare computed rows with a golden table")
    v.add_argument("golden", nargs="?", help="golden TOML file (default: the shipped tables)")
    v.add_argument("--tier", choices=("mandatory", "extended", "all"), default="mandatory")
    v.add_argument("--only", help="comma-separated row types to compare, e.g. A2,B2")
    v.add_argument("--workers", type=_positive_int)
    output_opts(v)

    s = sub.add_parser("sheaf", help="global sections of a sheaf descriptor")
    s.add_argument("descriptor", help="JSON descriptor (monodromy, bm or constant)")
    s.add_argument("--D", type=_nonnegative_int, dest="truncation")
    s.add_argument("--method", choices=("auto", "dense", "multigraded"), default="auto")
    output_opts(s)

    sub.add_parser("groups", help="list root datum keys and their central elements")
    return p


def _datum(name: str):
    try:
        return load(name)
    except UnknownGroupType:
        raise UsageError(f"unknown group type {name!r}; known: {', '.join(registry_keys())}") from None


def cmd_compute(args) -> tuple[str, int]:
    datum = _datum(args.group)
    if args.c != "regular" and args.c not in datum.central_elements:
        known = ", ".join(["regular", *datum.central_elements])
        raise UsageError(f"unknown central element {args.c!r} for {datum.name}; known: {known}")
    chars = None
    if args.chars:
        try:
            chars = tuple(parse_bits(x.strip(), datum.rank) for x in args.chars.split(","))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    row = table_row(datum.name, args.g, args.c, args.truncation, resolve_workers(args.workers), chars)
    if args.output_format == "json":
        return dump_json({"command": "compute", **row.to_json()}), 0
    lines = [f"{row.group} g={row.g} c={row.c} D={row.truncation} normalization {row.normalization}",
             f"total: {format_polynomial(row.total_polynomial())}",
             f"stable: {'yes' if row.stable else 'no'}  free: {_yes_no(row.free)}"]
    for comp in row.components:
        line = (f"  [{comp.character}] x{comp.orbit_size}: {format_polynomial(list(comp.numerator))}"
                f"  ({comp.verdict})")
        if comp.note:
            line += f"  note: {comp.note}"
        lines.append(line)
    return "\n".join(lines) + "\n", 0


def _yes_no(x) -> str:
    return "unknown" if x is None else "yes" if x else "no"


def cmd_verify(args) -> tuple[str, int]:
    path = Path(args.golden) if args.golden else data_path("golden_tables.toml")
    try:
        rows = golden.load_golden(path)
    except FileNotFoundError:
        raise UsageError(f"golden file not found: {path}") from None
    except golden.GoldenFormatError as exc:
        raise UsageError(f"malformed golden file: {exc}") from None
    only = {x.strip().upper() for x in args.only.split(",")} if args.only else None
    report, ok = [], True
    for row in rows:
        wanted = args.tier == "all" or row.tier == args.tier
        if only is not None and row.type.upper() not in only:
            wanted = False
        if not wanted:
            report.append({"row": row.key, "status": "skipped"})
            continue
        log.info("verifying %s", row.key)
        res = table_row(row.type, row.g, row.c, None, resolve_workers(args.workers))
        cmp = golden.compare(row, res.total_polynomial(), res.free, res.stable)
        ok &= cmp.ok
        report.append({
            "row": row.key,
            "status": "match" if cmp.ok else "mismatch",
            "mismatched_degrees": list(cmp.mismatched_degrees),
            "expected": [int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
                         for x in row.coefficients],
            "computed": list(cmp.computed),
            "expected_free": row.free,
            "computed_free": res.free,
            "stable": res.stable,
            "truncation": res.truncation,
        })
    status = 0 if ok else 1
    if args.output_format == "json":
        return dump_json({"command": "verify", "tier": args.tier, "rows": report, "ok": ok}), status
    lines = []
    for r in report:
        if r["status"] == "skipped":
            lines.append(f"SKIP     {r['row']}")
        elif r["status"] == "match":
            lines.append(f"MATCH    {r['row']}")
        else:
            detail = []
            if r["mismatched_degrees"]:
                detail.append("degrees " + ",".join(map(str, r["mismatched_degrees"])))
            if r["expected_free"] != r["computed_free"]:
                detail.append(f"free expected {_yes_no(r['expected_free'])} got {_yes_no(r['computed_free'])}")
            if not r["stable"]:
                detail.append("unstable at truncation")
            lines.append(f"MISMATCH {r['row']}: {'; '.join(detail)}")
    lines.append("all compared rows match" if ok else "some rows do not match")
    return "\n".join(lines) + "\n", status


def _schema(name: str) -> dict:
    return json.loads(data_path(name).read_text())


def load_descriptor(path: str | Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"descriptor not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(_schema("sheaf_descriptor.schema.json"))
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{_pointer(e.absolute_path)}: {e.message}" for e in errors]
        raise UsageError("descriptor does not match the schema:\n" + "\n".join(msgs))
    return obj


def _pointer(path) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else "/"


def cmd_sheaf(args) -> tuple[str, int]:
    obj = load_descriptor(args.descriptor)
    try:
        sheaf = sheaf_from_descriptor(obj)
    except SheafError as exc:
        raise UsageError(f"invalid sheaf data: {exc}") from None
    upto = args.truncation if args.truncation is not None else obj.get("truncation")
    rep = sections_report(sheaf, upto, args.method)
    data = {"command": "sheaf", "descriptor": Path(args.descriptor).name, **rep.to_json()}
    if args.output_format == "json":
        return dump_json(data), 0
    lines = [f"{data['descriptor']}: route {data['route']}, D={data['truncation']}",
             f"numerator: {format_polynomial(data['numerator'])}",
             f"generator degrees: {data['generator_degrees']}",
             f"verdict: {data['verdict']}  stable: {'yes' if data['stable'] else 'no'}"]
    return "\n".join(lines) + "\n", 0


def cmd_groups(args) -> tuple[str, int]:
    lines = []
    for key in registry_keys():
        d = load(key)
        lines.append(f"{key}: rank {d.rank}, central elements {', '.join(d.central_elements)}")
    return "\n".join(lines) + "\n", 0


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "sheaf": cmd_sheaf, "groups": cmd_groups}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        text, status = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"gkm: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a computation failure
        log.debug("computation failed", exc_info=True)
        print(f"gkm: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
