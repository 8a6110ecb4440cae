"""Bar-length spectra of filtered complexes.

The fast path converts the orthonormalized differential to polynomials in
``t = T^(1/q)`` (columns rescaled by unit denominators) and runs Smith
elimination over the valuation ring: pivot on an entry of minimal t-order,
kill the rest of its column with unit-scaled row operations, then drop the
pivot row and column.  No polynomial gcds are needed, because only
valuations of the invariant factors are recorded.

The minors oracle recomputes the same data from valuations of minors and
shares no code with the elimination.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .complex import FilteredComplex, SizeCapError
from .matrix import Matrix, determinant
from .scalars import INF, GroundField, NovikovScalar, _inflate_t, _tmin

DEFAULT_ORACLE_CAP = 8


def oracle_cap() -> int:
    return int(os.environ.get("NOVBAR_ORACLE_CAP", DEFAULT_ORACLE_CAP))


@dataclass(frozen=True)
class BarSpectrum:
    """Free rank B and sorted torsion exponents (verbose unless ``concise``)."""

    B: int
    torsion: tuple[Fraction, ...] = ()
    concise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(sorted(Fraction(x) for x in self.torsion)))
        if self.B < 0:
            raise ValueError("negative free rank")
        if any(x < 0 for x in self.torsion):
            raise ValueError("negative torsion exponent")
        if self.concise and any(x == 0 for x in self.torsion):
            raise ValueError("concise spectra carry no zero exponents")

    @property
    def K(self) -> int:
        return len(self.torsion)

    @property
    def N(self) -> int:
        """Rank of a complex with this verbose spectrum."""
        return self.B + 2 * self.K

    def to_concise(self) -> "BarSpectrum":
        return BarSpectrum(self.B, tuple(x for x in self.torsion if x > 0), True)

    def same_concise(self, other: "BarSpectrum") -> bool:
        a, b = self.to_concise(), other.to_concise()
        return a.B == b.B and a.torsion == b.torsion

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "torsion": [_fstr(x) for x in self.torsion],
            "beta_tot": _fstr(beta_total(self)),
            "beta_max": _fstr(beta_max(self)),
        }

    def __str__(self):
        tors = ", ".join(_fstr(x) for x in self.torsion)
        return f"B={self.B} torsion={{{tors}}}"


def _fstr(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def beta_total(s: BarSpectrum) -> Fraction:
    return sum(s.torsion, Fraction(0))


def beta_max(s: BarSpectrum) -> Fraction:
    return max(s.torsion, default=Fraction(0))


def partial_sums(s: BarSpectrum) -> list[Fraction]:
    return list(itertools.accumulate(s.torsion))


# ---------------------------------------------------------------------------
# polynomial form


def polynomial_form(m: Matrix):
    """Rewrite a valuation-ring matrix as polynomials in t = T^(1/q).

    Each column is multiplied by the lcm of its denominators; denominators
    have nonzero constant term, so this is multiplication by units and does
    not change the valuations of invariant factors.  Returns (q, rows) with
    rows as dicts col -> polynomial.
    """
    field = m.field
    q = 1
    for _, _, x in m.entries():
        q = q * x.q // math.gcd(q, x.q)
    nv = field.nvars
    t = field._t
    rows: list[dict] = [{} for _ in range(m.nrows)]
    for j, col in enumerate(m.cols):
        if not col:
            continue
        lifted = {}
        lcm = None
        for i, x in col.items():
            k = q // x.q
            num = _inflate_t(x.num, k, nv)
            den = _inflate_t(x.den, k, nv)
            e = x.e * k
            if e < 0:
                raise ValueError("entry outside the valuation ring")
            lifted[i] = (num * t**e if e else num, den)
            if not den.is_one():
                lcm = den if lcm is None else lcm * den / lcm.gcd(den)
        for i, (num, den) in lifted.items():
            if lcm is not None:
                num = num * (lcm / den) if not den.is_one() else num * lcm
            rows[i][j] = num
    return q, rows


def _snf_orders(rows: list[dict], field: GroundField) -> list[int]:
    """t-orders of the invariant factors of a polynomial matrix.

    Among entries of minimal t-order the pivot with fewest terms is used
    (then lowest (row, column)), which keeps row operations sparse; any
    minimal-order pivot gives the same invariant factors.
    """
    rows = [dict(r) for r in rows if r]
    t = field._t
    tpow = {}
    orders: list[int] = []
    has_u = field.kind == "FpU"
    while rows:
        best = None
        for ri, row in enumerate(rows):
            for c, f in row.items():
                key = (_tmin(f), len(f), ri, c)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        v, _, pi, pc = best
        orders.append(v)
        prow = rows.pop(pi)
        piv = prow.pop(pc)
        if v:
            tv = tpow.get(v)
            if tv is None:
                tv = tpow[v] = t**v
            unit = piv / tv
        else:
            tv = None
            unit = piv
        if len(unit) == 1:
            # monomial unit c*u^a: normalize the constant away
            inv = _const_inverse(field, unit)
            if inv is not None:
                prow = {c: f * inv for c, f in prow.items()}
                unit = unit * inv
        unit_is_one = unit.is_one()
        new_rows = []
        for row in rows:
            b = row.pop(pc, None)
            if b is None:
                if row:
                    new_rows.append(row)
                continue
            coef = b / tv if tv is not None else b
            if unit_is_one:
                out = row
            else:
                out = {c: f * unit for c, f in row.items()}
            for c, f in prow.items():
                g = out.get(c)
                val = -(coef * f) if g is None else g - coef * f
                if val.is_zero():
                    out.pop(c, None)
                else:
                    out[c] = val
            if out:
                new_rows.append(_reduce_row(out, has_u))
        rows = new_rows
    return orders


def _const_inverse(field: GroundField, mono):
    c = mono.coefficient(0)
    if field.kind == "Q":
        return None if c == 1 else 1 / c
    c = int(c)
    return None if c == 1 else pow(c, -1, field.p)


def _reduce_row(row: dict, has_u: bool) -> dict:
    """Divide a row by the unit part of the gcd of its entries.

    Over F_p(u) the entries are bivariate; the gcd with its t-power removed
    has nonzero constant term in t, so it is a unit of the local ring and
    dividing by it leaves the invariant factors unchanged while keeping the
    u-degrees from growing.
    """
    if not has_u or len(row) < 1:
        return row
    vals = iter(row.values())
    g = next(vals)
    for f in vals:
        g = g.gcd(f)
        if g.total_degree() == 0:
            return row
    k = _tmin(g)
    if k:
        g = g / g.context().gens()[0] ** k
    if g.total_degree() <= 0:
        return row
    return {c: f / g for c, f in row.items()}


def spectrum(c: FilteredComplex) -> BarSpectrum:
    """Verbose bar-length spectrum of a complex."""
    m = c.orthonormal_diff()
    return matrix_spectrum(m)


def matrix_spectrum(m: Matrix) -> BarSpectrum:
    if m.nrows != m.ncols:
        raise ValueError("spectrum needs a square differential")
    if m.min_valuation() < 0:
        raise ValueError("differential has entries outside the valuation ring")
    q, rows = polynomial_form(m)
    orders = _snf_orders(rows, m.field)
    torsion = tuple(Fraction(v, q) for v in orders)
    return BarSpectrum(m.nrows - 2 * len(torsion), torsion)


def invariant_factors(m: Matrix) -> tuple[Fraction, ...]:
    """Valuations of the Smith normal form diagonal of any valuation-ring matrix."""
    if m.min_valuation() < 0:
        raise ValueError("matrix has entries outside the valuation ring")
    q, rows = polynomial_form(m)
    return tuple(sorted(Fraction(v, q) for v in _snf_orders(rows, m.field)))


def rank_over_fraction_field(m: Matrix) -> int:
    _, rows = polynomial_form(m)
    return len(_snf_orders(rows, m.field))


# ---------------------------------------------------------------------------
# minors oracle


def minor_valuations(m: Matrix, cap: Optional[int] = None) -> list:
    """gamma_j = min valuation of j x j minors, j = 1.. until all vanish."""
    cap = oracle_cap() if cap is None else cap
    n = m.nrows
    if max(m.nrows, m.ncols) > cap:
        raise SizeCapError(f"minors oracle limited to rank {cap}, got {max(m.nrows, m.ncols)}")
    dense = m.to_dense()
    gammas = []
    for j in range(1, min(m.nrows, m.ncols) + 1):
        best = INF
        for rows in itertools.combinations(range(n), j):
            sub_rows = [dense[r] for r in rows]
            if any(all(not x for x in row) for row in sub_rows):
                continue
            for cols in itertools.combinations(range(m.ncols), j):
                sub = [[row[c] for c in cols] for row in sub_rows]
                det = determinant(sub, m.field)
                if det:
                    best = min(best, det.valuation())
        if best == INF:
            break
        gammas.append(best)
    return gammas


def minors_oracle(c: FilteredComplex, cap: Optional[int] = None) -> BarSpectrum:
    m = c.orthonormal_diff()
    gammas = minor_valuations(m, cap)
    torsion = []
    prev = Fraction(0)
    for g in gammas:
        torsion.append(Fraction(g) - prev)
        prev = Fraction(g)
    return BarSpectrum(c.rank - 2 * len(torsion), tuple(torsion))


# ---------------------------------------------------------------------------
# adapted bases


@dataclass
class AdaptedBasis:
    """Change of basis with ``Pinv @ d @ P`` in adapted form.

    ``pairs`` lists (zeta, eta, beta) with d(e_zeta) = T^beta e_eta in the
    new basis; ``free`` lists indices of cycles that are not boundaries.
    """

    P: Matrix
    Pinv: Matrix
    pairs: list[tuple[int, int, Fraction]]
    free: list[int]

    def adapted_matrix(self, field: GroundField, n: int) -> Matrix:
        out = Matrix(field, n, n)
        for z, e, beta in self.pairs:
            out[e, z] = field.T(beta)
        return out

    def spectrum(self, n: int) -> BarSpectrum:
        return BarSpectrum(n - 2 * len(self.pairs), tuple(b for _, _, b in self.pairs))


def adapted_basis(m: Matrix) -> AdaptedBasis:
    """Split a valuation-ring differential (d^2 = 0) into elementary pieces.

    Each step pivots on an off-diagonal entry of minimal valuation, rewrites
    the basis so the pivot pair becomes ``zeta -> T^v eta``, and clears the
    pair's row and column by changes of basis inside GL over the valuation
    ring.
    """
    field = m.field
    n = m.nrows
    M = m.to_dense()
    one, zero = field.one(), field.zero()
    P = [[one if i == k else zero for k in range(n)] for i in range(n)]
    Pinv = [[one if i == k else zero for k in range(n)] for i in range(n)]
    active = list(range(n))
    pairs = []
    while True:
        best = None
        for i in active:
            for j in active:
                x = M[i][j]
                if x:
                    v = x.valuation()
                    if best is None or v < best[0] or (v == best[0] and best[1] == best[2] and i != j):
                        best = (v, i, j)
        if best is None:
            break
        v, i, j = best
        if i == j:
            raise ValueError("differential does not square to zero")
        tinv = field.T(-v)
        eta = [M[r][j] * tinv if M[r][j] else zero for r in range(n)]
        # replace basis vector i by eta (column i of M becomes M @ eta = 0)
        for r in range(n):
            M[r][i] = zero
        piv = eta[i]
        piv_inv = piv.inverse()
        _row_replace(M, i, piv_inv, eta, n)
        _row_replace(Pinv, i, piv_inv, eta, n)
        # new P column i = P @ eta
        newcol = [sum((P[r][k] * eta[k] for k in range(n) if eta[k] and P[r][k]), zero) for r in range(n)]
        for r in range(n):
            P[r][i] = newcol[r]
        # now d(e_j) = T^v e_i; clear the rest of row i via column operations
        tv = field.T(v)
        for k in active:
            if k in (i, j) or not M[i][k]:
                continue
            c = M[i][k] * tinv
            for r in range(n):
                if M[r][j]:
                    M[r][k] = M[r][k] - c * M[r][j]
                if P[r][j]:
                    P[r][k] = P[r][k] - c * P[r][j]
            for col in range(n):
                if M[k][col]:
                    M[j][col] = M[j][col] + c * M[k][col]
                if Pinv[k][col]:
                    Pinv[j][col] = Pinv[j][col] + c * Pinv[k][col]
        assert M[i][j] == tv
        pairs.append((j, i, Fraction(v)))
        active = [a for a in active if a not in (i, j)]
    free = list(active)
    return AdaptedBasis(Matrix.from_rows(field, P), Matrix.from_rows(field, Pinv), pairs, free)


def _row_replace(A, i, piv_inv, eta, n):
    """Left-multiply by the inverse of E = I + (eta - e_i) e_i^T."""
    row_i = [x * piv_inv if x else x for x in A[i]]
    A[i] = row_i
    for r in range(n):
        if r == i or not eta[r]:
            continue
        f = eta[r]
        row = A[r]
        for k in range(len(row)):
            if row_i[k]:
                row[k] = row[k] - f * row_i[k]
