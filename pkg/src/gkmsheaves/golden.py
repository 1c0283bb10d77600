"""Golden tables: loading, expression expansion and row comparison."""

from __future__ import annotations

import ast
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import flint

from .exact import RationalParseError, parse_rational
from .roots import UnknownGroupType, load

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TIERS = ("mandatory", "extended")
KINDS = ("regular", "identity")


class GoldenFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GoldenRow:
    type: str
    tier: str
    c: str
    g: int
    coefficients: tuple[Fraction, ...]
    free: bool
    expression: str

    @property
    def key(self) -> str:
        return f"{self.type}/{self.c}/g={self.g}"

    def integral(self) -> bool:
        return all(x.denominator == 1 for x in self.coefficients)


def poincare_polynomial(group: str) -> flint.fmpq_poly:
    """Π (1 + t^{2d-1}) over the invariant degrees."""
    datum = load(group)
    out = flint.fmpq_poly([1])
    for d in datum.invariant_degrees:
        out *= flint.fmpq_poly([1] + [0] * (2 * d - 2) + [1])
    return out


def expand_expression(text: str) -> list[Fraction]:
    """Coefficients of a polynomial in ``t`` written with + - * ^ / and P(type)."""
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    poly = _eval(tree.body)
    return [Fraction(int(c.p), int(c.q)) for c in poly.coeffs()]


def _eval(node) -> flint.fmpq_poly:
    if isinstance(node, ast.BinOp):
        left, right = _eval(node.left), _eval(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right.degree() > 0:
                raise GoldenFormatError("division by a non-constant")
            return left * flint.fmpq_poly([1 / right.coeffs()[0]])
        if isinstance(node.op, ast.Pow):
            if not isinstance(node.right, ast.Constant) or not isinstance(node.right.value, int):
                raise GoldenFormatError("exponents must be integer literals")
            return left ** node.right.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _eval(node.operand)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return flint.fmpq_poly([node.value])
    if isinstance(node, ast.Name) and node.id == "t":
        return flint.fmpq_poly([0, 1])
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "P"
            and len(node.args) == 1 and isinstance(node.args[0], ast.Name)):
        try:
            return poincare_polynomial(node.args[0].id)
        except UnknownGroupType as exc:
            raise GoldenFormatError(f"unknown group {node.args[0].id}") from exc
    raise GoldenFormatError(f"unsupported expression element {ast.dump(node)}")


def _coefficient(x, where: str) -> Fraction:
    if isinstance(x, bool):
        raise GoldenFormatError(f"{where}: boolean coefficient")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return parse_rational(x)
        except RationalParseError as exc:
            raise GoldenFormatError(f"{where}: {exc}") from exc
    raise GoldenFormatError(f"{where}: coefficient must be an integer or a 'p/q' string")


def parse_golden(data: dict) -> list[GoldenRow]:
    rows = data.get("row")
    if not isinstance(rows, list) or not rows:
        raise GoldenFormatError("expected at least one [[row]] table")
    out = []
    for i, row in enumerate(rows):
        where = f"row {i + 1}"
        for key in ("type", "tier", "c", "numerator-coefficients", "free"):
            if key not in row:
                raise GoldenFormatError(f"{where}: missing field {key!r}")
        if row["tier"] not in TIERS:
            raise GoldenFormatError(f"{where}: tier must be one of {', '.join(TIERS)}")
        if not isinstance(row["free"], bool):
            raise GoldenFormatError(f"{where}: free must be a boolean")
        try:
            load(row["type"])
        except UnknownGroupType as exc:
            raise GoldenFormatError(f"{where}: unknown type {row['type']!r}") from exc
        g = row.get("g", 1)
        if not isinstance(g, int) or isinstance(g, bool) or g < 1:
            raise GoldenFormatError(f"{where}: g must be a positive integer")
        coeffs = row["numerator-coefficients"]
        if not isinstance(coeffs, list) or not coeffs:
            raise GoldenFormatError(f"{where}: numerator-coefficients must be a non-empty list")
        out.append(GoldenRow(row["type"], row["tier"], row["c"], g,
                             tuple(_coefficient(x, where) for x in coeffs), row["free"],
                             row.get("expression", "")))
    return out


def load_golden(path: str | Path) -> list[GoldenRow]:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise GoldenFormatError(f"{path}: {exc}") from exc
    return parse_golden(data)


@dataclass(frozen=True)
class RowComparison:
    row: GoldenRow
    computed: tuple[int, ...]
    computed_free: bool
    stable: bool
    mismatched_degrees: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatched_degrees and self.computed_free == self.row.free and self.stable


def compare(row: GoldenRow, computed: Sequence[int], computed_free: bool, stable: bool) -> RowComparison:
    n = max(len(row.coefficients), len(computed))
    want = list(row.coefficients) + [Fraction(0)] * (n - len(row.coefficients))
    got = list(computed) + [0] * (n - len(computed))
    bad = tuple(d for d in range(n) if want[d] != got[d])
    return RowComparison(row, tuple(computed), computed_free, stable, bad)
