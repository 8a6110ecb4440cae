"""Filtered, graded free complexes over the Novikov valuation ring."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

from .matrix import Matrix
from .scalars import (
    INF,
    GroundField,
    NovikovScalar,
    ParseError,
    embed,
    format_scalar,
    parse_field,
    parse_scalar,
    reduce_mod_p,
)

RAW = "raw"
ORTHONORMAL = "orthonormalized"

DEFAULT_TENSOR_CAP = 4096


class SizeCapError(ValueError):
    """An operation would exceed the configured size cap."""


class ComplexError(ValueError):
    """Structurally invalid complex or map."""


def tensor_cap() -> int:
    return int(os.environ.get("NOVBAR_TENSOR_CAP", DEFAULT_TENSOR_CAP))


@dataclass(frozen=True)
class BasisElement:
    label: str
    degree: int = 0
    action: Fraction = Fraction(0)


@dataclass
class ValidationReport:
    ok: bool
    strict: bool
    messages: list[str] = dc_field(default_factory=list)
    first_violation: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "strict": self.strict,
            "messages": list(self.messages),
            "first_violation": list(self.first_violation) if self.first_violation else None,
        }


class FilteredComplex:
    """Free complex with a labelled basis and a column-convention differential.

    In the raw convention the basis carries actions ``A(x_i)``; rescaling
    ``x_i -> T^{A(x_i)} x_i`` gives the orthonormalized convention, whose
    entries ``d_ij T^{A(x_j) - A(x_i)}`` must lie in the valuation ring.
    """

    def __init__(
        self,
        field: GroundField,
        basis: list[BasisElement],
        diff: Matrix,
        convention: str = ORTHONORMAL,
        graded: bool = True,
    ):
        if convention not in (RAW, ORTHONORMAL):
            raise ComplexError(f"unknown convention {convention!r}")
        if diff.shape != (len(basis), len(basis)):
            raise ComplexError(f"differential shape {diff.shape} does not match rank {len(basis)}")
        if diff.field != field:
            raise ComplexError("differential field differs from complex field")
        self.field = field
        self.basis = tuple(basis)
        self.diff = diff
        self.convention = convention
        self.graded = graded

    @property
    def rank(self) -> int:
        return len(self.basis)

    def __repr__(self):
        return f"FilteredComplex(rank={self.rank}, field={self.field}, {self.convention})"

    @property
    def degrees(self) -> list[int]:
        return [b.degree for b in self.basis]

    def with_diff(self, diff: Matrix) -> "FilteredComplex":
        return FilteredComplex(self.field, list(self.basis), diff, self.convention, self.graded)

    # -- validation ------------------------------------------------------------

    def normalized_entry(self, i: int, j: int, x: NovikovScalar) -> NovikovScalar:
        if self.convention == ORTHONORMAL:
            return x
        return x.shift(self.basis[j].action - self.basis[i].action)

    def validate(self) -> ValidationReport:
        msgs: list[str] = []
        first = None
        square = self.diff @ self.diff
        if not square.is_zero():
            i, j, x = square.sorted_entries()[0]
            msgs.append(f"d^2 != 0: entry ({i},{j}) of d^2 is {format_scalar(x)}")
            first = ("d2", i, j)
        if self.graded:
            for i, j, _ in self.diff.sorted_entries():
                if self.basis[i].degree != self.basis[j].degree - 1:
                    msgs.append(
                        f"degree: entry ({i},{j}) maps degree {self.basis[j].degree} to {self.basis[i].degree}"
                    )
                    first = first or ("degree", i, j)
                    break
        strict = True
        for i, j, x in self.diff.sorted_entries():
            v = self.normalized_entry(i, j, x).valuation()
            if v < 0:
                msgs.append(f"filtration: entry ({i},{j}) has normalized valuation {v} < 0")
                first = first or ("filtration", i, j)
                strict = False
                break
            if v == 0:
                strict = False
        ok = not msgs
        if ok and not strict:
            msgs.append("valid but not strict (some entry has normalized valuation 0)")
        return ValidationReport(ok, ok and strict, msgs, first)

    def is_strict(self) -> bool:
        return self.validate().strict

    def require_valid(self) -> "FilteredComplex":
        rep = self.validate()
        if not rep.ok:
            raise ComplexError("; ".join(rep.messages))
        return self

    # -- conventions -----------------------------------------------------------

    def orthonormalize(self) -> "FilteredComplex":
        if self.convention == ORTHONORMAL:
            return self
        out = Matrix(self.field, self.rank, self.rank)
        for i, j, x in self.diff.entries():
            out[i, j] = self.normalized_entry(i, j, x)
        basis = [BasisElement(b.label, b.degree, Fraction(0)) for b in self.basis]
        return FilteredComplex(self.field, basis, out, ORTHONORMAL, self.graded)

    def orthonormal_diff(self) -> Matrix:
        return self.orthonormalize().diff

    # -- serialization ---------------------------------------------------------

    def to_json_obj(self) -> dict:
        diff = {f"({i},{j})": format_scalar(x) for i, j, x in self.diff.sorted_entries()}
        return {
            "field": str(self.field),
            "convention": self.convention,
            "graded": self.graded,
            "basis": [
                {"label": b.label, "degree": b.degree, "action": _frac_str(b.action)} for b in self.basis
            ],
            "diff": diff,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1, sort_keys=False)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FilteredComplex":
        try:
            field = parse_field(obj["field"])
            basis_raw = obj["basis"]
            diff_raw = obj.get("diff", {})
        except (KeyError, TypeError) as exc:
            raise ParseError(f"complex file missing key: {exc}") from exc
        basis = []
        for k, b in enumerate(basis_raw):
            try:
                basis.append(
                    BasisElement(str(b["label"]), int(b.get("degree", 0)), Fraction(str(b.get("action", "0"))))
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(f"basis[{k}]: {exc}") from exc
        n = len(basis)
        diff = Matrix(field, n, n)
        for key, text in diff_raw.items():
            try:
                i, j = (int(s) for s in key.strip().strip("()").split(","))
            except ValueError as exc:
                raise ParseError(f"diff key {key!r} is not of the form '(i,j)'") from exc
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(f"diff key {key!r} out of range for rank {n}")
            try:
                diff[i, j] = parse_scalar(text, field)
            except ParseError as exc:
                raise ParseError(f"diff entry {key}: {exc}") from exc
        convention = obj.get("convention", RAW)
        return cls(field, basis, diff, convention, bool(obj.get("graded", True)))

    @classmethod
    def from_json(cls, text: str) -> "FilteredComplex":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_json_obj(obj)

    def __eq__(self, other):
        if not isinstance(other, FilteredComplex):
            return NotImplemented
        return (
            self.field == other.field
            and self.basis == other.basis
            and self.convention == other.convention
            and self.graded == other.graded
            and self.diff == other.diff
        )


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# chain maps


@dataclass
class ChainMap:
    source: FilteredComplex
    target: FilteredComplex
    matrix: Matrix
    shift: Fraction = Fraction(0)

    def check(self) -> list[str]:
        problems = []
        lhs = self.target.diff @ self.matrix
        rhs = self.matrix @ self.source.diff
        if lhs != rhs:
            diff = (lhs - rhs).sorted_entries()[0]
            problems.append(f"not a chain map: (dF - Fd)({diff[0]},{diff[1]}) = {format_scalar(diff[2])}")
        for i, j, x in self.matrix.sorted_entries():
            if x.valuation() < -self.shift:
                problems.append(f"entry ({i},{j}) has valuation {x.valuation()} below -{self.shift}")
                break
        return problems

    def is_chain_map(self) -> bool:
        return not self.check()


# ---------------------------------------------------------------------------
# constructions


def make_complex(field: GroundField, generators: list[tuple], entries: dict, convention: str = ORTHONORMAL, graded=True):
    """Convenience constructor: ``generators`` lists (label, degree[, action])."""
    basis = [BasisElement(s[0], s[1], Fraction(s[2]) if len(s) > 2 else Fraction(0)) for s in generators]
    n = len(basis)
    diff = Matrix(field, n, n)
    for (i, j), x in entries.items():
        if isinstance(x, str):
            x = parse_scalar(x, field)
        elif not isinstance(x, NovikovScalar):
            x = field.scalar(x)
        diff[i, j] = x
    return FilteredComplex(field, basis, diff, convention, graded)


def elementary_pair(field: GroundField, beta, degree: int = 0, coefficient=1) -> FilteredComplex:
    """Rank-2 complex with d(zeta) = c T^beta eta (zeta in degree+1)."""
    return make_complex(
        field,
        [("eta", degree), ("zeta", degree + 1)],
        {(0, 1): field.monomial(coefficient, beta)},
    )


def zero_complex(field: GroundField, n: int, degree: int = 0) -> FilteredComplex:
    return make_complex(field, [(f"x{i}", degree) for i in range(n)], {})


def direct_sum(a: FilteredComplex, b: FilteredComplex) -> FilteredComplex:
    if a.field != b.field:
        raise ComplexError(f"direct sum of complexes over {a.field} and {b.field}")
    a_raw, b_raw = a, b
    if a.convention != b.convention:
        a_raw, b_raw = a.orthonormalize(), b.orthonormalize()
    n, m = a.rank, b.rank
    diff = Matrix(a.field, n + m, n + m)
    for i, j, x in a_raw.diff.entries():
        diff.cols[j][i] = x
    for i, j, x in b_raw.diff.entries():
        diff.cols[n + j][n + i] = x
    basis = [BasisElement(f"a.{e.label}", e.degree, e.action) for e in a_raw.basis]
    basis += [BasisElement(f"b.{e.label}", e.degree, e.action) for e in b_raw.basis]
    return FilteredComplex(a.field, basis, diff, a_raw.convention, a.graded and b.graded)


def shift_action(c: FilteredComplex, s) -> FilteredComplex:
    s = Fraction(s)
    basis = [BasisElement(b.label, b.degree, b.action + s) for b in c.basis]
    conv = c.convention
    return FilteredComplex(c.field, basis, c.diff.copy(), RAW if conv == RAW or s else conv, c.graded)


def extend_field(c: FilteredComplex, target: GroundField) -> FilteredComplex:
    if c.field == target:
        return c
    if not (c.field.kind == "Fp" and target.kind == "FpU" and c.field.p == target.p):
        raise ComplexError(f"cannot extend {c.field} to {target}")
    diff = c.diff.map(lambda x: embed(x, target), target)
    return FilteredComplex(target, list(c.basis), diff, c.convention, c.graded)


def reduce_complex_mod_p(c: FilteredComplex, p: int) -> FilteredComplex:
    target = GroundField.prime(p)
    diff = c.diff.map(lambda x: reduce_mod_p(x, p), target)
    return FilteredComplex(target, list(c.basis), diff, c.convention, c.graded)


def word_label(c: FilteredComplex, word: tuple[int, ...]) -> str:
    return "⊗".join(c.basis[w].label for w in word)


def tensor_power(c: FilteredComplex, p: int, cap: Optional[int] = None) -> FilteredComplex:
    """p-fold tensor power with Koszul signs; basis words in lexicographic order."""
    if c.convention != ORTHONORMAL:
        raise ComplexError("tensor_power expects an orthonormalized complex")
    cap = tensor_cap() if cap is None else cap
    n = c.rank
    size = n**p
    if size > cap:
        raise SizeCapError(f"tensor power has {size} generators, above the cap {cap}")
    degs = c.degrees
    words = list(itertools.product(range(n), repeat=p))
    index = {w: k for k, w in enumerate(words)}
    diff = Matrix(c.field, size, size)
    cols = c.diff.cols
    for col_idx, w in enumerate(words):
        out = diff.cols[col_idx]
        left = 0
        for k in range(p):
            sign_neg = left % 2 == 1
            for i, x in cols[w[k]].items():
                target = index[w[:k] + (i,) + w[k + 1 :]]
                term = -x if sign_neg else x
                prev = out.get(target)
                val = term if prev is None else prev + term
                if val:
                    out[target] = val
                else:
                    out.pop(target, None)
            left += degs[w[k]]
    basis = [BasisElement(word_label(c, w), sum(degs[i] for i in w), Fraction(0)) for w in words]
    return FilteredComplex(c.field, basis, diff, ORTHONORMAL, c.graded)


def words(c: FilteredComplex, p: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(c.rank), repeat=p))
