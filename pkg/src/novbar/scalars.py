"""Exact Novikov scalars: fractions of finite sums ``sum a_j T^(l_j)``.

A scalar is stored as ``t^e * num(t) / den(t)`` where ``t = T^(1/q)``,
``num`` and ``den`` are coprime flint polynomials that are not divisible by
``t``, and ``q`` is the smallest exponent denominator that represents the
value.  Over ``F_p(u)`` the polynomials are bivariate in ``(t, u)``.

The T-adic valuation is then simply ``e / q``.  Denominators always have a
nonzero constant term in ``t``, so they are units of the valuation ring.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Union

import flint

__all__ = [
    "GroundField",
    "NovikovScalar",
    "URational",
    "ParseError",
    "ReductionError",
    "INF",
    "val",
    "parse_scalar",
    "format_scalar",
    "reduce_mod_p",
    "parse_field",
]

INF = math.inf


class ParseError(ValueError):
    """Malformed scalar, coefficient or field literal."""


class ReductionError(ArithmeticError):
    """Raised when reduction mod p is undefined for a scalar."""


def _is_prime(p: int) -> bool:
    return p >= 2 and flint.fmpz(p).is_prime()


# ---------------------------------------------------------------------------
# Ground coefficients for F_p(u)


@dataclass(frozen=True)
class URational:
    """Element of F_p(u): reduced ``num/den`` with monic ``den``.

    Coefficient tuples are little-endian (index = power of u).
    """

    p: int
    num: tuple[int, ...]
    den: tuple[int, ...] = (1,)

    @classmethod
    def from_polys(cls, p: int, num: flint.nmod_poly, den: flint.nmod_poly) -> "URational":
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in F_p(u)")
        g = num.gcd(den)
        num, den = num / g if not g.is_one() else num, den / g if not g.is_one() else den
        lc = int(den.leading_coefficient())
        inv = pow(lc, -1, p)
        num, den = num * inv, den * inv
        return cls(p, tuple(int(c) for c in num.coeffs()), tuple(int(c) for c in den.coeffs()))

    @classmethod
    def constant(cls, p: int, c: int) -> "URational":
        c %= p
        return cls(p, (c,) if c else (), (1,))

    def polys(self) -> tuple[flint.nmod_poly, flint.nmod_poly]:
        return flint.nmod_poly(list(self.num), self.p), flint.nmod_poly(list(self.den), self.p)

    def is_zero(self) -> bool:
        return not self.num

    def __str__(self) -> str:
        n = _upoly_str(self.num)
        if self.den == (1,):
            return f"({n})"
        return f"({n})/({_upoly_str(self.den)})"


def _upoly_str(coeffs: tuple[int, ...]) -> str:
    if not coeffs:
        return "0"
    parts = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if not c:
            continue
        if k == 0:
            parts.append(str(c))
        else:
            mono = "u" if k == 1 else f"u^{k}"
            parts.append(mono if c == 1 else f"{c}*{mono}")
    return "+".join(parts)


_UTERM = re.compile(r"^(?:(\d+)\*?)?(u(?:\^(\d+))?)?$")


def _parse_upoly(text: str, p: int) -> flint.nmod_poly:
    text = text.replace(" ", "")
    if not text:
        raise ParseError("empty u-polynomial")
    coeffs: dict[int, int] = {}
    # split on +/- keeping signs
    for sign, body in re.findall(r"([+-]?)([^+-]+)", text):
        m = _UTERM.match(body)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ParseError(f"bad u-polynomial term {body!r} in {text!r}")
        c = int(m.group(1)) if m.group(1) is not None else 1
        k = 0 if m.group(2) is None else int(m.group(3) or 1)
        if sign == "-":
            c = -c
        coeffs[k] = coeffs.get(k, 0) + c
    deg = max(coeffs)
    return flint.nmod_poly([coeffs.get(k, 0) % p for k in range(deg + 1)], p)


# ---------------------------------------------------------------------------
# Ground fields

_CTX_CACHE: dict = {}

Coefficient = Union[int, Fraction, URational, str]


@dataclass(frozen=True)
class GroundField:
    """Rationals, F_p, or F_p(u) with u transcendental."""

    kind: str
    p: int = 0

    def __post_init__(self):
        if self.kind not in ("Q", "Fp", "FpU"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "Q":
            if self.p:
                raise ValueError("rationals take no prime")
        elif not _is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @classmethod
    def rationals(cls) -> "GroundField":
        return cls("Q")

    @classmethod
    def prime(cls, p: int) -> "GroundField":
        return cls("Fp", p)

    @classmethod
    def prime_with_u(cls, p: int) -> "GroundField":
        return cls("FpU", p)

    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def has_u(self) -> bool:
        return self.kind == "FpU"

    def __str__(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "Fp":
            return f"F_{self.p}"
        return f"F_{self.p}(u)"

    # -- polynomial context -------------------------------------------------

    @property
    def ctx(self):
        key = (self.kind, self.p)
        ctx = _CTX_CACHE.get(key)
        if ctx is None:
            if self.kind == "Q":
                ctx = flint.fmpq_mpoly_ctx.get(("t",), "lex")
            elif self.kind == "Fp":
                ctx = flint.nmod_mpoly_ctx.get(("t",), ordering="lex", modulus=self.p)
            else:
                ctx = flint.nmod_mpoly_ctx.get(("t", "u"), ordering="lex", modulus=self.p)
            _CTX_CACHE[key] = ctx
        return ctx

    @property
    def nvars(self) -> int:
        return 2 if self.kind == "FpU" else 1

    @cached_property
    def _one_poly(self):
        return self.ctx.constant(1)

    @cached_property
    def _t(self):
        return self.ctx.gens()[0]

    # -- coefficients ---------------------------------------------------------

    def coefficient_polys(self, c: Coefficient):
        """Return (num, den) t-free polynomials representing a ground scalar."""
        ctx = self.ctx
        if isinstance(c, str):
            c = self.parse_coefficient(c)
        if self.kind == "Q":
            c = Fraction(c)
            return ctx.constant(flint.fmpq(c.numerator, c.denominator)), self._one_poly
        if self.kind == "Fp":
            if isinstance(c, Fraction):
                if c.denominator % self.p == 0:
                    raise ZeroDivisionError(f"denominator divisible by {self.p}")
                c = c.numerator * pow(c.denominator, -1, self.p)
            return ctx.constant(int(c) % self.p), self._one_poly
        if isinstance(c, URational):
            if c.p != self.p:
                raise ValueError("coefficient from a different field")
            return self._upoly_to_mpoly(c.num), self._upoly_to_mpoly(c.den)
        if isinstance(c, Fraction):
            if c.denominator % self.p == 0:
                raise ZeroDivisionError(f"denominator divisible by {self.p}")
            c = c.numerator * pow(c.denominator, -1, self.p)
        return ctx.constant(int(c) % self.p), self._one_poly

    def _upoly_to_mpoly(self, coeffs: Iterable[int]):
        return self.ctx.from_dict({(0, k): int(c) for k, c in enumerate(coeffs) if int(c)})

    def parse_coefficient(self, text: str) -> Coefficient:
        text = text.strip()
        if self.kind == "Q":
            try:
                return Fraction(text)
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError(f"bad rational coefficient {text!r}") from exc
        m = re.fullmatch(r"\[(-?\d+)\]_(\d+)", text)
        if m:
            if int(m.group(2)) != self.p:
                raise ParseError(f"coefficient {text!r} is not in {self}")
            c = int(m.group(1)) % self.p
            return URational.constant(self.p, c) if self.kind == "FpU" else c
        if re.fullmatch(r"-?\d+", text):
            c = int(text) % self.p
            return URational.constant(self.p, c) if self.kind == "FpU" else c
        if self.kind == "FpU":
            m = re.fullmatch(r"\(([^()]*)\)(?:/\(([^()]*)\))?", text)
            if m:
                num = _parse_upoly(m.group(1), self.p)
                den = _parse_upoly(m.group(2), self.p) if m.group(2) else flint.nmod_poly([1], self.p)
                if den.is_zero():
                    raise ParseError(f"zero denominator in {text!r}")
                return URational.from_polys(self.p, num, den)
        raise ParseError(f"bad coefficient {text!r} for {self}")

    def format_coefficient(self, c) -> str:
        if self.kind == "Q":
            c = Fraction(c)
            return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
        if self.kind == "Fp":
            return f"[{int(c) % self.p}]_{self.p}"
        return str(c)

    def is_unit_coefficient(self, c) -> bool:
        if self.kind == "Q":
            return Fraction(c) == 1
        if self.kind == "Fp":
            return int(c) % self.p == 1
        return c.num == (1,) and c.den == (1,)

    # -- constructors --------------------------------------------------------

    def zero(self) -> "NovikovScalar":
        return NovikovScalar._raw(self, 1, 0, self.ctx.constant(0), self._one_poly)

    def one(self) -> "NovikovScalar":
        return NovikovScalar._raw(self, 1, 0, self._one_poly, self._one_poly)

    def scalar(self, c: Coefficient) -> "NovikovScalar":
        num, den = self.coefficient_polys(c)
        return NovikovScalar._make(self, 1, 0, num, den)

    def T(self, exponent=1) -> "NovikovScalar":
        return self.monomial(1, exponent)

    def u(self) -> "NovikovScalar":
        if self.kind != "FpU":
            raise ValueError(f"{self} has no transcendental u")
        return NovikovScalar._raw(self, 1, 0, self.ctx.gens()[1], self._one_poly)

    def monomial(self, coefficient: Coefficient, exponent=0) -> "NovikovScalar":
        return self.from_terms({Fraction(exponent): coefficient})

    def from_terms(self, terms: Mapping) -> "NovikovScalar":
        """Build ``sum c * T^a`` from a mapping exponent -> coefficient."""
        items = [(Fraction(a), c) for a, c in terms.items()]
        items = [(a, self.coefficient_polys(c)) for a, c in items]
        items = [(a, nd) for a, nd in items if not nd[0].is_zero()]
        if not items:
            return self.zero()
        q = 1
        for a, _ in items:
            q = q * a.denominator // math.gcd(q, a.denominator)
        e = min(int(a * q) for a, _ in items)
        den = self._one_poly
        for _, (_, d) in items:
            if not d.is_one():
                den = den * d // den.gcd(d) if self.kind == "FpU" else den
        num = self.ctx.constant(0)
        t = self._t
        for a, (n, d) in items:
            k = int(a * q) - e
            scale = den / d if not d.is_one() else den
            num = num + n * scale * t**k
        return NovikovScalar._make(self, q, e, num, den)

    def fraction(self, num_terms: Mapping, den_terms: Mapping) -> "NovikovScalar":
        return self.from_terms(num_terms) / self.from_terms(den_terms)

    def random_unit_coefficient(self, rng) -> Coefficient:
        if self.kind == "Q":
            c = 0
            while c == 0:
                c = rng.randint(-3, 3)
            return Fraction(c)
        c = rng.randrange(1, self.p)
        if self.kind == "Fp":
            return c
        return URational.constant(self.p, c)


def parse_field(text: str) -> GroundField:
    text = text.strip()
    if text in ("Q", "QQ", "Rationals"):
        return GroundField.rationals()
    m = re.fullmatch(r"F_?(\d+)(\(u\))?", text)
    if not m:
        raise ParseError(f"bad field literal {text!r}")
    p = int(m.group(1))
    try:
        return GroundField.prime_with_u(p) if m.group(2) else GroundField.prime(p)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# poly helpers (t is always variable 0, lex ordering puts min t-degree last)


def _tmin(f) -> int:
    return int(f.monomial(len(f) - 1)[0])


def _tstride(f) -> int:
    if len(f) <= 1:
        return 0
    return int(f.deflation_index()[0][0])


def _deflate_t(f, g: int, nvars: int):
    return f.deflate([g] + [1] * (nvars - 1))


def _inflate_t(f, m: int, nvars: int):
    if m == 1:
        return f
    return f.inflate([m] + [1] * (nvars - 1))


# ---------------------------------------------------------------------------


class NovikovScalar:
    """Immutable element of the fraction field of finite Novikov sums."""

    __slots__ = ("field", "q", "e", "num", "den")

    def __init__(self):
        raise TypeError("use GroundField constructors or parse_scalar")

    @classmethod
    def _raw(cls, field, q, e, num, den):
        obj = object.__new__(cls)
        obj.field = field
        obj.q = q
        obj.e = e
        obj.num = num
        obj.den = den
        return obj

    @classmethod
    def _make(cls, field: GroundField, q: int, e: int, num, den) -> "NovikovScalar":
        if num.is_zero():
            return field.zero()
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        k = _tmin(num)
        if k:
            num = num / field._t**k
            e += k
        if not den.is_one():
            k = _tmin(den)
            if k:
                den = den / field._t**k
                e -= k
            g = num.gcd(den)
            if not g.is_one():
                num = num / g
                den = den / g
        num, den = _normalize_den(field, num, den)
        if q > 1:
            g = math.gcd(q, e)
            if g > 1:
                g = math.gcd(g, _tstride(num))
                if g > 1 and not den.is_one():
                    g = math.gcd(g, _tstride(den))
                if g > 1:
                    nv = field.nvars
                    num = _deflate_t(num, g, nv)
                    den = _deflate_t(den, g, nv)
                    q //= g
                    e //= g
        return cls._raw(field, q, e, num, den)

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.e == 0 and self.num.is_one() and self.den.is_one()

    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def valuation(self):
        if self.num.is_zero():
            return INF
        return Fraction(self.e, self.q)

    def _lift(self, q: int):
        m = q // self.q
        nv = self.field.nvars
        return self.e * m, _inflate_t(self.num, m, nv), _inflate_t(self.den, m, nv)

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "NovikovScalar":
        if isinstance(other, NovikovScalar):
            if other.field != self.field:
                raise ValueError(f"mixing scalars over {self.field} and {other.field}")
            return other
        if isinstance(other, (int, Fraction, URational)):
            return self.field.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        f = self.field
        if self.q == other.q:
            q, ea, na, da = self.q, self.e, self.num, self.den
            eb, nb, db = other.e, other.num, other.den
        else:
            q = self.q * other.q // math.gcd(self.q, other.q)
            ea, na, da = self._lift(q)
            eb, nb, db = other._lift(q)
        m = min(ea, eb)
        t = f._t
        if ea > m:
            na = na * t ** (ea - m)
        if eb > m:
            nb = nb * t ** (eb - m)
        if da.is_one() and db.is_one():
            return NovikovScalar._make(f, q, m, na + nb, da)
        if da == db:
            return NovikovScalar._make(f, q, m, na + nb, da)
        return NovikovScalar._make(f, q, m, na * db + nb * da, da * db)

    __radd__ = __add__

    def __neg__(self):
        return NovikovScalar._raw(self.field, self.q, self.e, -self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        f = self.field
        if self.num.is_zero() or other.num.is_zero():
            return f.zero()
        if other.is_one():
            return self
        if self.is_one():
            return other
        if self.q == other.q:
            q, ea, na, da = self.q, self.e, self.num, self.den
            eb, nb, db = other.e, other.num, other.den
        else:
            q = self.q * other.q // math.gcd(self.q, other.q)
            ea, na, da = self._lift(q)
            eb, nb, db = other._lift(q)
        if da.is_one() and db.is_one():
            num, den = _normalize_den(f, na * nb, da)
            return NovikovScalar._finish(f, q, ea + eb, num, den)
        # cross-cancel before multiplying
        if not db.is_one():
            g = na.gcd(db)
            if not g.is_one():
                na, db = na / g, db / g
        if not da.is_one():
            g = nb.gcd(da)
            if not g.is_one():
                nb, da = nb / g, da / g
        num, den = _normalize_den(f, na * nb, da * db)
        return NovikovScalar._finish(f, q, ea + eb, num, den)

    __rmul__ = __mul__

    @classmethod
    def _finish(cls, field, q, e, num, den):
        # num, den already coprime, t-free and normalized; only q may shrink
        if q > 1 and math.gcd(q, e) > 1:
            return cls._make(field, q, e, num, den)
        return cls._raw(field, q, e, num, den)

    def inverse(self) -> "NovikovScalar":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero Novikov scalar")
        num, den = _normalize_den(self.field, self.den, self.num)
        return NovikovScalar._raw(self.field, self.q, -self.e, num, den)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        f = self.field
        if n == 0:
            return f.one()
        num, den = _normalize_den(f, self.num**n, self.den**n)
        return NovikovScalar._finish(f, self.q, self.e * n, num, den)

    def shift(self, a) -> "NovikovScalar":
        """Multiply by T^a."""
        a = Fraction(a)
        if a == 0 or self.num.is_zero():
            return self
        if a.denominator == 1 or self.q % a.denominator == 0:
            k = int(a * self.q)
            return NovikovScalar._finish(self.field, self.q, self.e + k, self.num, self.den)
        return self * self.field.T(a)

    def substitute_T_power(self, factor) -> "NovikovScalar":
        """Apply the ring map T -> T^factor (factor a positive rational)."""
        factor = Fraction(factor)
        if factor <= 0:
            raise ValueError("exponent factor must be positive")
        if self.num.is_zero():
            return self
        # T^(a) -> T^(a*factor): t = T^(1/q) -> T^(factor/q) = s^(factor.numerator) with s = T^(1/(q*den))
        q = self.q * factor.denominator
        m = factor.numerator
        nv = self.field.nvars
        return NovikovScalar._make(
            self.field, q, self.e * m, _inflate_t(self.num, m, nv), _inflate_t(self.den, m, nv)
        )

    # -- comparison -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, URational)):
            other = self.field.scalar(other)
        if not isinstance(other, NovikovScalar):
            return NotImplemented
        return (
            self.field == other.field
            and self.q == other.q
            and self.e == other.e
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((self.field, self.q, self.e, str(self.num), str(self.den)))

    def __bool__(self):
        return not self.num.is_zero()

    def __repr__(self):
        return f"NovikovScalar({format_scalar(self)!r}, {self.field})"

    def __str__(self):
        return format_scalar(self)

    # -- term access ---------------------------------------------------------

    def num_terms(self) -> dict:
        """Numerator terms ``{exponent: coefficient}`` of the canonical form."""
        return self._canonical_terms()[0]

    def den_terms(self) -> dict:
        return self._canonical_terms()[1]

    def terms(self) -> dict:
        """Terms of a polynomial scalar; raises for genuine fractions."""
        num, den = self._canonical_terms()
        if den != {Fraction(0): _unit(self.field)}:
            raise ValueError("scalar is not a finite sum")
        return num

    def _canonical_terms(self):
        f = self.field
        if self.num.is_zero():
            return {}, {Fraction(0): _unit(f)}
        if f.kind != "FpU":
            lead = self.den.coefficient(len(self.den) - 1)
            num = _poly_terms(f, self.num, self.q, self.e, lead)
            den = _poly_terms(f, self.den, self.q, 0, lead)
            return num, den
        lead = _upart(f, self.den, 0)
        return _upoly_terms(f, self.num, self.q, self.e, lead), _upoly_terms(f, self.den, self.q, 0, lead)

    def coefficients_mod_check(self):
        return self._canonical_terms()


def _unit(f: GroundField):
    if f.kind == "Q":
        return Fraction(1)
    if f.kind == "Fp":
        return 1
    return URational.constant(f.p, 1)


def _normalize_den(field: GroundField, num, den):
    if den.is_one():
        return num, den
    if field.kind == "FpU":
        low = den.subs({"t": 0})
        c = int(low.leading_coefficient())
    else:
        c = den.coefficient(len(den) - 1)
        if field.kind == "Q":
            if c == 1:
                return num, den
            inv = 1 / c
            return num * inv, den * inv
        c = int(c)
    if c == 1:
        return num, den
    inv = pow(c, -1, field.p)
    return num * inv, den * inv


def _poly_terms(f: GroundField, poly, q: int, e: int, lead) -> dict:
    out = {}
    for (k,), c in zip(poly.monoms(), poly.coeffs()):
        a = Fraction(int(k) + e, q)
        if f.kind == "Q":
            out[a] = Fraction(int(c.p), int(c.q)) / Fraction(int(lead.p), int(lead.q))
        else:
            out[a] = int(c) * pow(int(lead), -1, f.p) % f.p
    return dict(sorted(out.items()))


def _upart(f: GroundField, poly, k: int) -> flint.nmod_poly:
    """Coefficient of t^k in a (t, u) polynomial, as an nmod_poly in u."""
    coeffs: dict[int, int] = {}
    for (a, b), c in zip(poly.monoms(), poly.coeffs()):
        if int(a) == k:
            coeffs[int(b)] = int(c)
    if not coeffs:
        return flint.nmod_poly([], f.p)
    return flint.nmod_poly([coeffs.get(i, 0) for i in range(max(coeffs) + 1)], f.p)


def _upoly_terms(f: GroundField, poly, q: int, e: int, lead: flint.nmod_poly) -> dict:
    by_t: dict[int, dict[int, int]] = {}
    for (a, b), c in zip(poly.monoms(), poly.coeffs()):
        by_t.setdefault(int(a), {})[int(b)] = int(c)
    out = {}
    for a, cs in by_t.items():
        up = flint.nmod_poly([cs.get(i, 0) for i in range(max(cs) + 1)], f.p)
        out[Fraction(a + e, q)] = URational.from_polys(f.p, up, lead)
    return dict(sorted(out.items()))


def val(x: NovikovScalar):
    """T-adic valuation; ``math.inf`` for zero."""
    return x.valuation()


# ---------------------------------------------------------------------------
# text format


def _format_exponent(a: Fraction) -> str:
    if a.denominator == 1:
        return f"({a.numerator})"
    return f"({a.numerator}/{a.denominator})"


def _format_sum(field: GroundField, terms: dict) -> str:
    parts: list[str] = []
    for a, c in terms.items():
        negative = field.kind == "Q" and c < 0
        mag = -c if negative else c
        if a == 0:
            body = field.format_coefficient(mag)
        elif field.is_unit_coefficient(mag):
            body = f"T^{_format_exponent(a)}"
        else:
            body = f"{field.format_coefficient(mag)}*T^{_format_exponent(a)}"
        if not parts:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"- {body}" if negative else f"+ {body}")
    return " ".join(parts)


def format_scalar(x: NovikovScalar) -> str:
    """Canonical text: terms ``c*T^(a/b)``, fractions as ``(num) / (den)``."""
    if x.is_zero():
        return "0"
    num, den = x._canonical_terms()
    ns = _format_sum(x.field, num)
    if den == {Fraction(0): _unit(x.field)}:
        return ns
    ds = _format_sum(x.field, den)
    return f"({ns}) / ({ds})"


def _split_top(text: str, seps: tuple[str, ...]) -> list[tuple[str, str]]:
    """Split at depth-0 occurrences of the given separators."""
    out = []
    depth = 0
    start = 0
    cur_sep = ""
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced parentheses in {text!r}")
        elif depth == 0:
            for s in seps:
                if text.startswith(s, i):
                    out.append((cur_sep, text[start:i]))
                    cur_sep = s
                    i += len(s)
                    start = i
                    break
            else:
                i += 1
                continue
            continue
        i += 1
    if depth != 0:
        raise ParseError(f"unbalanced parentheses in {text!r}")
    out.append((cur_sep, text[start:]))
    return out


_EXP = re.compile(r"^T(?:\^(?:\((-?\d+(?:/\d+)?)\)|(-?\d+(?:/\d+)?)))?$")


def _parse_term(field: GroundField, text: str):
    text = text.strip()
    if not text:
        raise ParseError("empty term")
    sign = 1
    if text.startswith("-"):
        sign = -1
        text = text[1:].strip()
    idx = _find_T(text)
    if idx is None:
        coef_txt, t_txt = text, ""
    else:
        coef_txt, t_txt = text[:idx], text[idx:]
        coef_txt = coef_txt.rstrip()
        if coef_txt.endswith("*"):
            coef_txt = coef_txt[:-1]
    if t_txt:
        m = _EXP.match(t_txt.replace(" ", ""))
        if not m:
            raise ParseError(f"bad T-power {t_txt!r}")
        exp = Fraction(m.group(1) or m.group(2) or 1)
    else:
        exp = Fraction(0)
    coef = field.parse_coefficient(coef_txt) if coef_txt else _unit(field)
    if sign < 0:
        coef = _negate_coef(field, coef)
    return exp, coef


def _negate_coef(field: GroundField, c):
    if field.kind == "Q":
        return -Fraction(c)
    if field.kind == "Fp":
        return (-int(c)) % field.p
    n, d = c.polys()
    return URational.from_polys(field.p, -n, d)


def _find_T(text: str):
    depth = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "T" and depth == 0:
            return i
    return None


def _parse_sum(field: GroundField, text: str) -> NovikovScalar:
    total = field.zero()
    pieces = _split_top(text.strip(), (" + ", " - "))
    for sep, body in pieces:
        exp, coef = _parse_term(field, body)
        term = field.monomial(coef, exp)
        total = total - term if sep == " - " else total + term
    return total


def _parse_side(field: GroundField, text: str) -> NovikovScalar:
    text = text.strip()
    try:
        return _parse_sum(field, text)
    except ParseError:
        if text.startswith("(") and text.endswith(")"):
            return _parse_sum(field, text[1:-1])
        raise


def parse_scalar(text: str, field: GroundField) -> NovikovScalar:
    """Parse the textual scalar format produced by :func:`format_scalar`."""
    if not isinstance(text, str):
        raise ParseError(f"scalar must be a string, got {type(text).__name__}")
    parts = _split_top(text.strip(), (" / ",))
    if len(parts) == 1:
        return _parse_side(field, parts[0][1])
    if len(parts) == 2:
        den = _parse_side(field, parts[1][1])
        if den.is_zero():
            raise ParseError(f"zero denominator in {text!r}")
        return _parse_side(field, parts[0][1]) / den
    raise ParseError(f"too many '/' in {text!r}")


# ---------------------------------------------------------------------------
# reduction and field change


def reduce_mod_p(x: NovikovScalar, p: int) -> NovikovScalar:
    """Coefficientwise reduction of a rational scalar to F_p.

    Works on the canonical fraction (denominator with constant term 1).
    Raises :class:`ReductionError` if p divides a coefficient denominator.
    """
    if x.field.kind != "Q":
        raise ValueError("reduce_mod_p expects a scalar over Q")
    target = GroundField.prime(p)
    if x.is_zero():
        return target.zero()
    num, den = x._canonical_terms()

    def red(terms):
        out = {}
        for a, c in terms.items():
            if c.denominator % p == 0:
                raise ReductionError(f"{p} divides a coefficient denominator of {format_scalar(x)}")
            out[a] = c.numerator * pow(c.denominator, -1, p) % p
        return target.from_terms(out)

    return red(num) / red(den)


def embed(x: NovikovScalar, target: GroundField) -> NovikovScalar:
    """Coefficientwise embedding along Q -> Q, F_p -> F_p, F_p -> F_p(u)."""
    src = x.field
    if src == target:
        return x
    if not (src.kind == "Fp" and target.kind == "FpU" and src.p == target.p):
        raise ValueError(f"cannot extend {src} to {target}")
    ctx = target.ctx
    num = ctx.from_dict({(m[0], 0): int(c) for m, c in zip(x.num.monoms(), x.num.coeffs())})
    den = ctx.from_dict({(m[0], 0): int(c) for m, c in zip(x.den.monoms(), x.den.coeffs())})
    return NovikovScalar._raw(target, x.q, x.e, num, den)


def u_adic_valuation(x: NovikovScalar) -> int | float:
    """Order of vanishing at u = 0 of an F_p(u)-Novikov scalar (inf for 0)."""
    if x.field.kind != "FpU":
        return 0
    if x.is_zero():
        return INF

    def order(poly):
        return min(int(m[1]) for m in poly.monoms())

    return order(x.num) - order(x.den)
