"""Cyclic Z/p action on tensor powers and the Tate complex over F_p(u).

Conventions used here (parity is all that matters for signs):

* ``w ⊗ 1`` keeps the degree of the word ``w``, ``w ⊗ θ`` has degree |w|+1.
* ``d(x⊗1) = d^(p)x ⊗ 1 + (1-τ)x ⊗ θ``
* ``d(x⊗θ) = -d^(p)x ⊗ θ + u·Nm(x) ⊗ 1`` with ``Nm = 1 + τ + ... + τ^(p-1)``.

The minus sign on the θ-sector makes ``d_Tate^2 = 0`` hold exactly in odd
characteristic, since τ commutes with d^(p) and Nm(1-τ) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .barcode import BarSpectrum, spectrum
from .complex import (
    ORTHONORMAL,
    BasisElement,
    ChainMap,
    ComplexError,
    FilteredComplex,
    SizeCapError,
    extend_field,
    tensor_cap,
    tensor_power,
)
from .matrix import Matrix, block_matrix
from .scalars import GroundField


def _tau_image(word: tuple[int, ...], degs: list[int]) -> tuple[tuple[int, ...], int]:
    """τ(x_0⊗...⊗x_{p-1}) = ± x_{p-1}⊗x_0⊗...⊗x_{p-2}; returns (word, sign)."""
    last = degs[word[-1]]
    rest = sum(degs[i] for i in word[:-1])
    sign = -1 if (last * rest) % 2 else 1
    return (word[-1],) + word[:-1], sign


def tau_matrix(c: FilteredComplex, p: int, field: Optional[GroundField] = None) -> Matrix:
    """Signed cyclic permutation on the p-th tensor power of ``c``."""
    import itertools

    field = field or c.field
    degs = c.degrees
    words = list(itertools.product(range(c.rank), repeat=p))
    index = {w: k for k, w in enumerate(words)}
    one = field.one()
    m = Matrix(field, len(words), len(words))
    for k, w in enumerate(words):
        img, sign = _tau_image(w, degs)
        m.cols[k][index[img]] = one if sign > 0 else -one
    return m


def tau(c_power: FilteredComplex, c: FilteredComplex, p: int) -> ChainMap:
    """τ as a chain map on ``c_power = tensor_power(c, p)``."""
    if c_power.rank != c.rank**p:
        raise ComplexError("c_power is not the p-th tensor power of c")
    return ChainMap(c_power, c_power, tau_matrix(c, p, c_power.field))


def norm_matrix(t: Matrix, p: int) -> Matrix:
    """1 + τ + ... + τ^(p-1)."""
    n = t.nrows
    acc = Matrix.identity(t.field, n)
    power = Matrix.identity(t.field, n)
    for _ in range(p - 1):
        power = t @ power
        acc = acc + power
    return acc


@dataclass
class TateComplex:
    underlying: FilteredComplex
    p: int
    source: FilteredComplex
    tensor: FilteredComplex
    tau: Matrix

    @property
    def rank(self) -> int:
        return self.underlying.rank


def build_tate(c: FilteredComplex, p: int, cap: Optional[int] = None) -> TateComplex:
    """Tate complex of the p-th tensor power of a strict complex over F_p."""
    if c.field.kind != "Fp" or c.field.p != p:
        raise ComplexError(f"Tate complex needs a complex over F_{p}, got {c.field}")
    c = c.orthonormalize()
    rep = c.validate()
    if not rep.ok:
        raise ComplexError("; ".join(rep.messages))
    if not rep.strict:
        raise ComplexError("Tate construction requires a strict complex")
    cap = tensor_cap() if cap is None else cap
    if 2 * c.rank**p > cap:
        raise SizeCapError(f"Tate complex would have {2 * c.rank ** p} generators, above the cap {cap}")
    if p != 2 and not c.graded:
        raise ComplexError("odd p needs graded bookkeeping for Koszul signs")
    kfield = GroundField.prime_with_u(p)
    cp = extend_field(tensor_power(c, p, cap=cap), kfield)
    t = tau_matrix(c, p, kfield)
    n = cp.rank
    ident = Matrix.identity(kfield, n)
    u = kfield.u()
    d = cp.diff
    diff = block_matrix(
        [[d, norm_matrix(t, p).scale(u)], [ident - t, -d]],
        kfield,
    )
    basis = [BasisElement(f"{b.label}⊗1", b.degree, Fraction(0)) for b in cp.basis]
    basis += [BasisElement(f"{b.label}⊗θ", b.degree + 1, Fraction(0)) for b in cp.basis]
    under = FilteredComplex(kfield, basis, diff, ORTHONORMAL, graded=False)
    return TateComplex(under, p, c, cp, t)


def rescale_spectrum(s: BarSpectrum, p: int) -> BarSpectrum:
    """Doubling and p-scaling of a spectrum: B -> 2B, β -> (pβ, pβ)."""
    tors = []
    for b in s.torsion:
        tors += [p * b, p * b]
    return BarSpectrum(2 * s.B, tuple(tors), s.concise)


@dataclass
class QuasiFrobeniusResult:
    ok: bool
    source: BarSpectrum
    expected: BarSpectrum
    tate: BarSpectrum

    def to_dict(self) -> dict:
        return {
            "pass": self.ok,
            "spectrum": self.source.to_dict(),
            "expected_tate": self.expected.to_dict(),
            "tate": self.tate.to_dict(),
        }


def verify_quasi_frobenius(c: FilteredComplex, p: int, cap: Optional[int] = None) -> QuasiFrobeniusResult:
    src = spectrum(c)
    tate = build_tate(c, p, cap)
    ts = spectrum(tate.underlying).to_concise()
    expected = rescale_spectrum(src.to_concise(), p)
    ok = ts.B == expected.B and ts.torsion == expected.torsion
    return QuasiFrobeniusResult(ok, src, expected, ts)
