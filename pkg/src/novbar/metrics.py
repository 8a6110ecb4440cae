"""Barcodes, bottleneck distance, spectrum closeness and quasi-equivalence certificates."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

import networkx as nx

from .barcode import BarSpectrum, adapted_basis
from .complex import ORTHONORMAL, FilteredComplex
from .matrix import Matrix
from .scalars import INF, ParseError, format_scalar

# ---------------------------------------------------------------------------
# barcodes


def _frac(x) -> Fraction:
    return Fraction(str(x)) if not isinstance(x, Fraction) else x


@dataclass
class Barcode:
    """Finite bars (start, end) and infinite bars start, as multisets."""

    finite: Counter = dc_field(default_factory=Counter)
    infinite: Counter = dc_field(default_factory=Counter)

    def __post_init__(self):
        self.finite = Counter({(Fraction(a), Fraction(b)): m for (a, b), m in dict(self.finite).items() if m})
        self.infinite = Counter({Fraction(a): m for a, m in dict(self.infinite).items() if m})
        for (a, b), m in self.finite.items():
            if not a < b:
                raise ValueError(f"finite bar ({a}, {b}) must have positive length")
            if m < 0:
                raise ValueError("negative multiplicity")
        if any(m < 0 for m in self.infinite.values()):
            raise ValueError("negative multiplicity")

    @classmethod
    def from_bars(cls, finite=(), infinite=()) -> "Barcode":
        return cls(Counter((Fraction(a), Fraction(b)) for a, b in finite), Counter(Fraction(a) for a in infinite))

    def finite_list(self) -> list[tuple[Fraction, Fraction]]:
        out = []
        for bar in sorted(self.finite):
            out += [bar] * self.finite[bar]
        return out

    def infinite_list(self) -> list[Fraction]:
        out = []
        for a in sorted(self.infinite):
            out += [a] * self.infinite[a]
        return out

    def shift(self, c) -> "Barcode":
        c = Fraction(c)
        return Barcode(
            Counter({(a + c, b + c): m for (a, b), m in self.finite.items()}),
            Counter({a + c: m for a, m in self.infinite.items()}),
        )

    def to_json_obj(self) -> dict:
        return {
            "finite": [
                {"start": _s(a), "end": _s(b), "mult": m} for (a, b), m in sorted(self.finite.items())
            ],
            "infinite": [{"start": _s(a), "mult": m} for a, m in sorted(self.infinite.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Barcode":
        try:
            fin = Counter()
            for k, bar in enumerate(obj.get("finite", [])):
                fin[(_frac(bar["start"]), _frac(bar["end"]))] += int(bar.get("mult", 1))
            inf = Counter()
            for bar in obj.get("infinite", []):
                inf[_frac(bar["start"])] += int(bar.get("mult", 1))
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise ParseError(f"bad barcode entry: {exc}") from exc
        try:
            return cls(fin, inf)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "Barcode":
        try:
            return cls.from_json_obj(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _s(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def barcode_from_spectrum(s: BarSpectrum, start=Fraction(0)) -> Barcode:
    """Bars (start, start+β) for positive β and B infinite bars at ``start``.

    Zero-length verbose entries are not bars and are dropped.
    """
    start = Fraction(start)
    fin = Counter((start, start + b) for b in s.torsion if b > 0)
    return Barcode(fin, Counter({start: s.B} if s.B else {}))


# ---------------------------------------------------------------------------
# bottleneck distance


def _feasible(a: list, b: list, delta: Fraction) -> bool:
    """δ-matching between finite bar lists, allowing erasure of short bars."""
    n, m = len(a), len(b)
    g = nx.Graph()
    left = [("a", i) for i in range(n)] + [("db", j) for j in range(m)]
    right = [("b", j) for j in range(m)] + [("da", i) for i in range(n)]
    g.add_nodes_from(left, bipartite=0)
    g.add_nodes_from(right, bipartite=1)
    for i, (s, e) in enumerate(a):
        for j, (s2, e2) in enumerate(b):
            if abs(s - s2) <= delta and abs(e - e2) <= delta:
                g.add_edge(("a", i), ("b", j))
        if (e - s) / 2 <= delta:
            g.add_edge(("a", i), ("da", i))
    for j, (s2, e2) in enumerate(b):
        if (e2 - s2) / 2 <= delta:
            g.add_edge(("db", j), ("b", j))
        for i in range(n):
            g.add_edge(("db", j), ("da", i))
    if not left:
        return True
    match = nx.bipartite.hopcroft_karp_matching(g, top_nodes=left)
    return all(v in match for v in left)


def _infinite_cost(a: list, b: list) -> Fraction:
    # optimal bottleneck matching of points on a line: sort and pair
    return max((abs(x - y) for x, y in zip(sorted(a), sorted(b))), default=Fraction(0))


def bottleneck(a: Barcode, b: Barcode):
    """Exact bottleneck distance; ``math.inf`` when infinite-bar counts differ."""
    ia, ib = a.infinite_list(), b.infinite_list()
    if len(ia) != len(ib):
        return INF
    fa, fb = a.finite_list(), b.finite_list()
    floor = _infinite_cost(ia, ib)
    cands = {Fraction(0), floor}
    for s, e in fa + fb:
        cands.add((e - s) / 2)
    for s, e in fa:
        for s2, e2 in fb:
            cands.add(abs(s - s2))
            cands.add(abs(e - e2))
    ordered = sorted(x for x in cands if x >= floor)
    lo, hi = 0, len(ordered) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(fa, fb, ordered[mid]):
            hi = mid
        else:
            lo = mid + 1
    return ordered[lo]


def shift_quotient_distance(a: Barcode, b: Barcode):
    """min over c of bottleneck(a, b shifted by c), over an exact candidate set."""
    pts_a = [x for bar in a.finite_list() for x in bar] + a.infinite_list()
    pts_b = [x for bar in b.finite_list() for x in bar] + b.infinite_list()
    if len(a.infinite_list()) != len(b.infinite_list()):
        return INF
    diffs = {x - y for x in pts_a for y in pts_b} or {Fraction(0)}
    halves = {(e - s) / 2 for s, e in a.finite_list() + b.finite_list()}
    cands = set(diffs)
    dl = sorted(diffs)
    for i, x in enumerate(dl):
        for y in dl[i + 1 :]:
            cands.add((x + y) / 2)
        for h in halves:
            cands.add(x + h)
            cands.add(x - h)
    return min(bottleneck(a, b.shift(c)) for c in cands)


# ---------------------------------------------------------------------------
# spectrum closeness


def spectra_close(s1: BarSpectrum, s2: BarSpectrum, delta) -> bool:
    """2δ-closeness of verbose spectra.

    Requires equal free rank and a matching of torsion exponents in which
    matched pairs differ by at most 2δ and unmatched exponents are at most
    2δ.  This is exactly bottleneck distance ≤ δ between the bars
    (-β/2, β/2), which is what a δ-quasi-equivalence guarantees.
    """
    delta = Fraction(delta)
    if s1.B != s2.B:
        return False
    a = [(-b / 2, b / 2) for b in s1.torsion if b > 0]
    b = [(-x / 2, x / 2) for x in s2.torsion if x > 0]
    return _feasible(a, b, delta)


def closeness_gap(s1: BarSpectrum, s2: BarSpectrum):
    """Smallest δ at which spectra_close holds (inf if free ranks differ)."""
    if s1.B != s2.B:
        return INF
    a = Barcode.from_bars([(-b / 2, b / 2) for b in s1.torsion if b > 0])
    b = Barcode.from_bars([(-x / 2, x / 2) for x in s2.torsion if x > 0])
    return bottleneck(a, b)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class QuasiEquivalenceCertificate:
    """F: C -> C', G: C' -> C with GF - T^δ = dH + Hd and FG - T^δ = d'H' + H'd'."""

    source: FilteredComplex
    target: FilteredComplex
    F: Matrix
    G: Matrix
    H: Matrix
    Hp: Matrix
    delta: Fraction

    def __post_init__(self):
        self.delta = Fraction(self.delta)


@dataclass
class CertificateReport:
    ok: bool
    failures: list[str] = dc_field(default_factory=list)

    def __bool__(self):
        return self.ok


def _first(m: Matrix) -> str:
    i, j, x = m.sorted_entries()[0]
    return f"({i},{j}) = {format_scalar(x)}"


def verify_certificate(cert: QuasiEquivalenceCertificate) -> CertificateReport:
    fails = []
    if cert.delta < 0:
        fails.append("negative delta")
    d = cert.source.orthonormal_diff()
    dp = cert.target.orthonormal_diff()
    n, m = d.nrows, dp.nrows
    shapes = {"F": (cert.F, (m, n)), "G": (cert.G, (n, m)), "H": (cert.H, (n, n)), "H'": (cert.Hp, (m, m))}
    for name, (mat, shape) in shapes.items():
        if mat.shape != shape:
            fails.append(f"{name} has shape {mat.shape}, expected {shape}")
    if fails:
        return CertificateReport(False, fails)
    for name, (mat, _) in shapes.items():
        for i, j, x in mat.sorted_entries():
            if x.valuation() < 0:
                fails.append(f"{name}({i},{j}) = {format_scalar(x)} lies outside the valuation ring")
                break
    r = dp @ cert.F - cert.F @ d
    if not r.is_zero():
        fails.append(f"F is not a chain map: d'F - Fd at {_first(r)}")
    r = d @ cert.G - cert.G @ dp
    if not r.is_zero():
        fails.append(f"G is not a chain map: dG - Gd' at {_first(r)}")
    f = d.field
    td = f.T(cert.delta)
    r = cert.G @ cert.F - Matrix.identity(f, n).scale(td) - (d @ cert.H + cert.H @ d)
    if not r.is_zero():
        fails.append(f"GF - T^delta != dH + Hd: residual at {_first(r)}")
    r = cert.F @ cert.G - Matrix.identity(f, m).scale(td) - (dp @ cert.Hp + cert.Hp @ dp)
    if not r.is_zero():
        fails.append(f"FG - T^delta != d'H' + H'd': residual at {_first(r)}")
    return CertificateReport(not fails, fails)


def identity_certificate(c: FilteredComplex) -> QuasiEquivalenceCertificate:
    n = c.rank
    f = c.field
    ident = Matrix.identity(f, n)
    return QuasiEquivalenceCertificate(c, c, ident, ident.copy(), Matrix.zeros(f, n), Matrix.zeros(f, n), Fraction(0))


def compose_certificates(c1: QuasiEquivalenceCertificate, c2: QuasiEquivalenceCertificate) -> QuasiEquivalenceCertificate:
    """(δ1+δ2)-certificate C0 -> C2 from certificates C0 -> C1 and C1 -> C2."""
    mid1 = c1.target.orthonormalize()
    mid2 = c2.source.orthonormalize()
    if mid1.rank != mid2.rank or mid1.diff != mid2.diff:
        raise ValueError("middle complexes of the two certificates differ")
    f = c1.F.field
    F = c2.F @ c1.F
    G = c1.G @ c2.G
    H = c1.H.scale(f.T(c2.delta)) + c1.G @ c2.H @ c1.F
    Hp = c2.Hp.scale(f.T(c1.delta)) + c2.F @ c1.Hp @ c2.G
    return QuasiEquivalenceCertificate(c1.source, c2.target, F, G, H, Hp, c1.delta + c2.delta)


def scaled_complex(c: FilteredComplex, delta) -> FilteredComplex:
    c = c.orthonormalize()
    return FilteredComplex(c.field, list(c.basis), c.diff.scale(c.field.T(delta)), ORTHONORMAL, c.graded)


def canonical_scaling_certificate(c: FilteredComplex, delta) -> QuasiEquivalenceCertificate:
    """δ-certificate between (C, d) and (C, T^δ d) built in an adapted basis."""
    delta = Fraction(delta)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    c = c.orthonormalize()
    f = c.field
    n = c.rank
    ab = adapted_basis(c.diff)
    half, full, one = f.T(delta / 2), f.T(delta), f.one()
    fd = [None] * n
    gd = [None] * n
    for z, e, _ in ab.pairs:
        fd[z], gd[z] = one, full
        fd[e], gd[e] = full, one
    for x in ab.free:
        fd[x] = gd[x] = half
    F = ab.P @ Matrix.diagonal(f, fd) @ ab.Pinv
    G = ab.P @ Matrix.diagonal(f, gd) @ ab.Pinv
    return QuasiEquivalenceCertificate(
        c, scaled_complex(c, delta), F, G, Matrix.zeros(f, n), Matrix.zeros(f, n), delta
    )
