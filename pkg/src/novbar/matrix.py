"""Sparse matrices of Novikov scalars and exact linear algebra over the fraction field."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .scalars import INF, GroundField, NovikovScalar


class Matrix:
    """Column-sparse matrix: ``cols[j]`` maps row index to a nonzero scalar.

    Column convention throughout: column j holds the image of basis vector j.
    """

    __slots__ = ("field", "nrows", "ncols", "cols")

    def __init__(self, field: GroundField, nrows: int, ncols: int, cols=None):
        self.field = field
        self.nrows = nrows
        self.ncols = ncols
        self.cols: list[dict[int, NovikovScalar]] = cols if cols is not None else [{} for _ in range(ncols)]

    # -- constructors ----------------------------------------------------------

    @classmethod
    def zeros(cls, field, nrows, ncols=None) -> "Matrix":
        return cls(field, nrows, nrows if ncols is None else ncols)

    @classmethod
    def identity(cls, field, n: int) -> "Matrix":
        one = field.one()
        return cls(field, n, n, [{j: one} for j in range(n)])

    @classmethod
    def diagonal(cls, field, entries: Iterable[NovikovScalar]) -> "Matrix":
        entries = list(entries)
        return cls(field, len(entries), len(entries), [{j: x} if x else {} for j, x in enumerate(entries)])

    @classmethod
    def from_entries(cls, field, nrows, ncols, entries: dict) -> "Matrix":
        m = cls(field, nrows, ncols)
        for (i, j), x in entries.items():
            m[i, j] = x
        return m

    @classmethod
    def from_rows(cls, field, rows: list[list]) -> "Matrix":
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        m = cls(field, nrows, ncols)
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                if not isinstance(x, NovikovScalar):
                    x = field.scalar(x)
                if x:
                    m.cols[j][i] = x
        return m

    def copy(self) -> "Matrix":
        return Matrix(self.field, self.nrows, self.ncols, [dict(c) for c in self.cols])

    # -- access ------------------------------------------------------------------

    def __getitem__(self, key) -> NovikovScalar:
        i, j = key
        x = self.cols[j].get(i)
        return x if x is not None else self.field.zero()

    def __setitem__(self, key, value: NovikovScalar):
        i, j = key
        if not (0 <= i < self.nrows and 0 <= j < self.ncols):
            raise IndexError(f"entry ({i}, {j}) outside {self.nrows}x{self.ncols}")
        if value:
            self.cols[j][i] = value
        else:
            self.cols[j].pop(i, None)

    def entries(self) -> Iterator[tuple[int, int, NovikovScalar]]:
        """Nonzero entries in (column, row) order."""
        for j, col in enumerate(self.cols):
            for i in sorted(col):
                yield i, j, col[i]

    def sorted_entries(self) -> list[tuple[int, int, NovikovScalar]]:
        return sorted(self.entries(), key=lambda e: (e[0], e[1]))

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def is_zero(self) -> bool:
        return all(not c for c in self.cols)

    def rows(self) -> list[dict[int, NovikovScalar]]:
        out: list[dict[int, NovikovScalar]] = [{} for _ in range(self.nrows)]
        for j, col in enumerate(self.cols):
            for i, x in col.items():
                out[i][j] = x
        return out

    def to_dense(self) -> list[list[NovikovScalar]]:
        z = self.field.zero()
        dense = [[z] * self.ncols for _ in range(self.nrows)]
        for i, j, x in self.entries():
            dense[i][j] = x
        return dense

    def min_valuation(self):
        return min((x.valuation() for _, _, x in self.entries()), default=INF)

    # -- arithmetic --------------------------------------------------------------

    def _check_shape(self, other: "Matrix"):
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_shape(other)
        out = self.copy()
        for i, j, x in other.entries():
            out[i, j] = out[i, j] + x
        return out

    def __neg__(self) -> "Matrix":
        return Matrix(self.field, self.nrows, self.ncols, [{i: -x for i, x in c.items()} for c in self.cols])

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def scale(self, s: NovikovScalar) -> "Matrix":
        if not s:
            return Matrix.zeros(self.field, self.nrows, self.ncols)
        return Matrix(self.field, self.nrows, self.ncols, [{i: x * s for i, x in c.items()} for c in self.cols])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        out_cols = []
        for col in other.cols:
            acc: dict[int, NovikovScalar] = {}
            for k, b in col.items():
                for i, a in self.cols[k].items():
                    prev = acc.get(i)
                    acc[i] = a * b if prev is None else prev + a * b
            out_cols.append({i: x for i, x in acc.items() if x})
        return Matrix(self.field, self.nrows, other.ncols, out_cols)

    def apply(self, vec: dict[int, NovikovScalar]) -> dict[int, NovikovScalar]:
        acc: dict[int, NovikovScalar] = {}
        for k, b in vec.items():
            for i, a in self.cols[k].items():
                prev = acc.get(i)
                acc[i] = a * b if prev is None else prev + a * b
        return {i: x for i, x in acc.items() if x}

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.ncols, self.nrows, self.rows())

    def map(self, fn: Callable[[NovikovScalar], NovikovScalar], field: GroundField | None = None) -> "Matrix":
        field = field or self.field
        out = Matrix(field, self.nrows, self.ncols)
        for i, j, x in self.entries():
            out[i, j] = fn(x)
        return out

    def submatrix(self, rows: list[int], cols: list[int]) -> "Matrix":
        rpos = {r: a for a, r in enumerate(rows)}
        out = Matrix(self.field, len(rows), len(cols))
        for b, j in enumerate(cols):
            for i, x in self.cols[j].items():
                a = rpos.get(i)
                if a is not None:
                    out.cols[b][a] = x
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self.field == other.field and self.cols == other.cols

    def __repr__(self):
        return f"Matrix({self.nrows}x{self.ncols}, nnz={self.nnz()}, field={self.field})"

    # -- fraction-field linear algebra ------------------------------------------

    def rank(self) -> int:
        return len(_row_echelon(self.to_dense())[1])

    def determinant(self) -> NovikovScalar:
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        return determinant(self.to_dense(), self.field)

    def inverse(self) -> "Matrix":
        """Exact inverse over the fraction field."""
        n = self.nrows
        if n != self.ncols:
            raise ValueError("inverse of a non-square matrix")
        f = self.field
        one, zero = f.one(), f.zero()
        aug = [row + [one if i == k else zero for k in range(n)] for i, row in enumerate(self.to_dense())]
        rref, pivots = _row_echelon(aug, reduced=True, ncols=n)
        if len(pivots) < n:
            raise ZeroDivisionError("matrix is singular over the fraction field")
        return Matrix.from_rows(f, [row[n:] for row in rref[:n]])

    def kernel(self) -> list[dict[int, NovikovScalar]]:
        """Basis of the kernel over the fraction field, as sparse vectors."""
        rref, pivots = _row_echelon(self.to_dense(), reduced=True)
        pivot_cols = [c for _, c in pivots]
        free = [c for c in range(self.ncols) if c not in set(pivot_cols)]
        basis = []
        one = self.field.one()
        for fc in free:
            vec = {fc: one}
            for r, pc in pivots:
                x = rref[r][fc]
                if x:
                    vec[pc] = -x
            basis.append(vec)
        return basis

    def column_space_contains(self, vectors: list[dict[int, NovikovScalar]]) -> bool:
        """True iff every vector lies in the column span over the fraction field."""
        base = self.rank()
        if not vectors:
            return True
        extra = Matrix(self.field, self.nrows, len(vectors), [dict(v) for v in vectors])
        return hstack(self, extra).rank() == base


def hstack(*mats: Matrix) -> Matrix:
    field = mats[0].field
    nrows = mats[0].nrows
    cols = []
    for m in mats:
        if m.nrows != nrows:
            raise ValueError("row mismatch in hstack")
        cols.extend(dict(c) for c in m.cols)
    return Matrix(field, nrows, len(cols), cols)


def block_matrix(blocks: list[list[Matrix | None]], field: GroundField) -> Matrix:
    """Assemble a block matrix; ``None`` entries are zero blocks."""
    heights = []
    for r, row in enumerate(blocks):
        h = next((b.nrows for b in row if b is not None), None)
        if h is None:
            raise ValueError(f"block row {r} has no sizing block")
        heights.append(h)
    widths = []
    for c in range(len(blocks[0])):
        w = next((row[c].ncols for row in blocks if row[c] is not None), None)
        if w is None:
            raise ValueError(f"block column {c} has no sizing block")
        widths.append(w)
    out = Matrix(field, sum(heights), sum(widths))
    r0 = 0
    for r, row in enumerate(blocks):
        c0 = 0
        for c, b in enumerate(row):
            if b is not None:
                for i, j, x in b.entries():
                    out.cols[c0 + j][r0 + i] = x
            c0 += widths[c]
        r0 += heights[r]
    return out


def _row_echelon(rows: list[list[NovikovScalar]], reduced: bool = False, ncols: int | None = None):
    """Gaussian elimination over the fraction field.

    Pivots prefer the entry of smallest valuation in the column, which keeps
    intermediate fractions small.  Returns (rows, [(row, col), ...]).
    """
    m = [list(r) for r in rows]
    nrows = len(m)
    width = len(m[0]) if m else 0
    ncols = width if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        best, best_val = None, INF
        for i in range(r, nrows):
            x = m[i][c]
            if x:
                v = x.valuation()
                if best is None or v < best_val:
                    best, best_val = i, v
        if best is None:
            continue
        m[r], m[best] = m[best], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv if x else x for x in m[r]]
        prow = m[r]
        targets = range(nrows) if reduced else range(r + 1, nrows)
        for i in targets:
            if i == r:
                continue
            f = m[i][c]
            if f:
                row = m[i]
                for k in range(c, width):
                    if prow[k]:
                        row[k] = row[k] - f * prow[k]
        pivots.append((r, c))
        r += 1
    return m, pivots


def determinant(rows: list[list[NovikovScalar]], field: GroundField) -> NovikovScalar:
    m = [list(r) for r in rows]
    n = len(m)
    det = field.one()
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            return field.zero()
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        p = m[c][c]
        det = det * p
        inv = p.inverse()
        for i in range(c + 1, n):
            f = m[i][c]
            if f:
                f = f * inv
                for k in range(c + 1, n):
                    if m[c][k]:
                        m[i][k] = m[i][k] - f * m[c][k]
    return det


def vector_valuation(vec: dict[int, NovikovScalar]):
    return min((x.valuation() for x in vec.values()), default=INF)


def fraction_or_inf(v) -> Fraction | float:
    return v if v == INF else Fraction(v)
