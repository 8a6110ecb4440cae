"""Homological perturbation, cones, deformation majorization and the scaling pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

from .barcode import (
    AdaptedBasis,
    BarSpectrum,
    adapted_basis,
    beta_total,
    matrix_spectrum,
    partial_sums,
    spectrum,
)
from .complex import (
    ORTHONORMAL,
    BasisElement,
    ChainMap,
    ComplexError,
    FilteredComplex,
    extend_field,
)
from .equivariant import build_tate, verify_quasi_frobenius
from .matrix import Matrix, block_matrix
from .metrics import QuasiEquivalenceCertificate, spectra_close, verify_certificate
from .scalars import GroundField, embed, u_adic_valuation


class HypothesisError(ValueError):
    """An input violates a stated hypothesis of a check."""


# ---------------------------------------------------------------------------
# split differentials


@dataclass
class SplitDifferential:
    """diff = d_loc + T^eps0 D with d_loc block-diagonal for ``blocks``."""

    complex: FilteredComplex
    blocks: list[list[int]]
    eps0: Fraction
    d_loc: Matrix
    D: Matrix
    delta0: Fraction
    block_spectra: list[BarSpectrum]

    @classmethod
    def from_blocks(cls, c: FilteredComplex, blocks: list[list[int]], eps0) -> "SplitDifferential":
        c = c.orthonormalize()
        eps0 = Fraction(eps0)
        n = c.rank
        seen = sorted(i for b in blocks for i in b)
        if seen != list(range(n)):
            raise ComplexError("blocks must partition the basis")
        owner = {i: k for k, b in enumerate(blocks) for i in b}
        f = c.field
        d_loc = Matrix(f, n, n)
        D = Matrix(f, n, n)
        for i, j, x in c.diff.entries():
            if owner[i] == owner[j]:
                d_loc[i, j] = x
            else:
                y = x.shift(-eps0)
                if y.valuation() < 0:
                    raise HypothesisError(
                        f"off-block entry ({i},{j}) has valuation {x.valuation()} below eps0 = {eps0}"
                    )
                D[i, j] = y
        spectra = [matrix_spectrum(d_loc.submatrix(b, b)) for b in blocks]
        delta0 = max((max(s.torsion, default=Fraction(0)) for s in spectra), default=Fraction(0))
        return cls(c, [list(b) for b in blocks], eps0, d_loc, D, delta0, spectra)


@dataclass
class PerturbationOutput:
    X: FilteredComplex
    d_phi: Matrix
    pi_bar: ChainMap
    iota_bar: ChainMap
    theta_bar: Matrix
    certificate: QuasiEquivalenceCertificate
    exact: bool
    terms: int
    truncation: Optional[Fraction] = None

    @property
    def status(self) -> str:
        return "exact" if self.exact else f"truncated-at({self.truncation})"


def _local_data(s: SplitDifferential):
    """Block-diagonal adapted bases: P, Pinv, free indices, and homotopy h."""
    c = s.complex
    f = c.field
    n = c.rank
    P = Matrix(f, n, n)
    Pinv = Matrix(f, n, n)
    h_ad = Matrix(f, n, n)
    free: list[int] = []
    for block in s.blocks:
        ab: AdaptedBasis = adapted_basis(s.d_loc.submatrix(block, block))
        for a, i in enumerate(block):
            for b, j in enumerate(block):
                x = ab.P[a, b]
                if x:
                    P[i, j] = x
                y = ab.Pinv[a, b]
                if y:
                    Pinv[i, j] = y
        for z, e, beta in ab.pairs:
            h_ad[block[z], block[e]] = -f.T(-beta)
        free += [block[k] for k in ab.free]
    h = P @ h_ad @ Pinv
    return P, Pinv, free, h


def perturb(s: SplitDifferential, truncation) -> PerturbationOutput:
    """Transfer diff = d_loc + T^eps0 D to the homology of the local pieces.

    With dh + hd = ιπ - 1 for the local homotopy h, the transferred data are
    A = δ + δhδ + δhδhδ + ...  (δ = T^eps0 D),
    d_X = πAι, ι' = ι + hAι, π' = π + πAh, h' = h + hAh.
    """
    truncation = Fraction(truncation)
    if s.eps0 <= s.delta0:
        raise HypothesisError(f"eps0 = {s.eps0} must exceed delta0 = {s.delta0}")
    c = s.complex
    f = c.field
    n = c.rank
    P, Pinv, free, h = _local_data(s)
    iota = P.submatrix(list(range(n)), free)
    pi = Pinv.submatrix(free, list(range(n)))
    delta = s.D.scale(f.T(s.eps0))
    hd = h @ delta
    power = Matrix.identity(f, n)
    A = Matrix.zeros(f, n)
    exact = False
    k = 0
    while True:
        A = A + delta @ power
        power = hd @ power
        k += 1
        if power.is_zero():
            exact = True
            break
        if k * (s.eps0 - s.delta0) > truncation:
            break
    d_X = pi @ A @ iota
    iota_b = iota + h @ A @ iota
    pi_b = pi + pi @ A @ h
    theta = h + h @ A @ h
    basis = [BasisElement(f"h.{c.basis[i].label}", c.basis[i].degree) for i in free]
    X = FilteredComplex(f, basis, d_X, ORTHONORMAL, graded=c.graded)
    half = f.T(s.delta0 / 2)
    cert = QuasiEquivalenceCertificate(
        c,
        X,
        pi_b.scale(half),
        iota_b.scale(half),
        theta.scale(f.T(s.delta0)),
        Matrix.zeros(f, len(free)),
        s.delta0,
    )
    return PerturbationOutput(
        X,
        d_X,
        ChainMap(c, X, pi_b),
        ChainMap(X, c, iota_b),
        theta,
        cert,
        exact,
        k,
        None if exact else truncation,
    )


@dataclass
class PerturbationCheck:
    ok: bool
    exact: bool
    certificate_ok: bool
    spectra_ok: bool
    full: BarSpectrum
    transferred: BarSpectrum
    messages: list[str] = dc_field(default_factory=list)


def check_perturbation(s: SplitDifferential, truncation) -> PerturbationCheck:
    out = perturb(s, truncation)
    msgs = []
    rep = verify_certificate(out.certificate)
    msgs += rep.failures
    full = spectrum(s.complex)
    small = matrix_spectrum(out.d_phi)
    close = spectra_close(full, small, s.delta0)
    if not close:
        msgs.append(f"spectra not {2 * s.delta0}-close: {full} vs {small}")
    low = [b for b in small.torsion if b < s.eps0]
    if low:
        msgs.append(f"transferred bars below eps0: {low}")
    ok = rep.ok and close and not low and out.exact
    if not out.exact:
        msgs.append(f"series {out.status}")
    return PerturbationCheck(ok, out.exact, rep.ok, close and not low, full, small, msgs)


# ---------------------------------------------------------------------------
# cones


def cone(S: ChainMap | Matrix, c: Optional[FilteredComplex] = None) -> FilteredComplex:
    """Cone with differential (x0, x1) -> (d x0, S x0 - d x1)."""
    if isinstance(S, ChainMap):
        c = S.source
        Smat = S.matrix
    else:
        Smat = S
    if c is None:
        raise ValueError("cone needs the complex when given a bare matrix")
    c = c.orthonormalize()
    if Smat.shape != (c.rank, c.rank):
        raise ComplexError("S must be an endomorphism of C")
    if not ChainMap(c, c, Smat).is_chain_map():
        raise ComplexError("S is not a valuation-ring chain map")
    f = c.field
    d = c.diff
    diff = block_matrix([[d, None], [Smat, -d]], f)
    graded = c.graded and all(c.basis[i].degree == c.basis[j].degree for i, j, _ in Smat.entries())
    basis = [BasisElement(f"c0.{b.label}", b.degree + 1) for b in c.basis]
    basis += [BasisElement(f"c1.{b.label}", b.degree) for b in c.basis]
    return FilteredComplex(f, basis, diff, ORTHONORMAL, graded)


def null_on_homology(c: FilteredComplex, S: Matrix) -> bool:
    """S(ker d) ⊆ im d over the fraction field."""
    d = c.orthonormal_diff()
    ker = d.kernel()
    images = [S.apply(v) for v in ker]
    images = [v for v in images if v]
    return d.column_space_contains(images)


@dataclass
class ConeBoundReport:
    ok: bool
    hypothesis_met: bool
    beta_cone: Optional[Fraction]
    beta_c: Optional[Fraction]
    message: str = ""

    @property
    def equality(self) -> bool:
        return self.beta_cone is not None and self.beta_cone == 2 * self.beta_c


def check_cone_bound(S: ChainMap) -> ConeBoundReport:
    c = S.source.orthonormalize()
    problems = ChainMap(c, c, S.matrix).check()
    if problems or S.matrix.min_valuation() < 0:
        return ConeBoundReport(False, False, None, None, "not a valuation-ring chain map: " + "; ".join(problems))
    if not null_on_homology(c, S.matrix):
        return ConeBoundReport(False, False, None, None, "hypothesis not met: S is nonzero on homology")
    bc = beta_total(spectrum(c))
    bcone = beta_total(spectrum(cone(S)))
    ok = bcone <= 2 * bc
    msg = f"beta_tot(Cone) = {bcone} {'<=' if ok else '>'} 2*beta_tot(C) = {2 * bc}"
    return ConeBoundReport(ok, True, bcone, bc, msg)


# ---------------------------------------------------------------------------
# deformation majorization


@dataclass
class MajorizationReport:
    ok: bool
    hypothesis_met: bool
    original: Optional[BarSpectrum] = None
    deformed: Optional[BarSpectrum] = None
    original_sums: list = dc_field(default_factory=list)
    deformed_sums: list = dc_field(default_factory=list)
    message: str = ""

    @property
    def strict(self) -> bool:
        return bool(self.ok and self.original_sums and self.deformed_sums[-1] < self.original_sums[-1])


def _to_u_field(m: Matrix) -> Matrix:
    f = m.field
    if f.kind == "FpU":
        return m
    if f.kind != "Fp":
        raise HypothesisError(f"majorization needs F_p or F_p(u) data, got {f}")
    target = GroundField.prime_with_u(f.p)
    return m.map(lambda x: embed(x, target), target)


def check_majorization(c0: FilteredComplex, D: Matrix) -> MajorizationReport:
    """Compare verbose spectra of d0 and d0 + uD by partial sums."""
    d0 = _to_u_field(c0.orthonormal_diff())
    D = _to_u_field(D)
    f = d0.field
    if D.shape != d0.shape or D.field != f:
        return MajorizationReport(False, False, message="deformation has the wrong shape or field")
    for i, j, x in D.sorted_entries():
        if u_adic_valuation(x) < 0 or x.valuation() < 0:
            return MajorizationReport(
                False, False, message=f"deformation entry ({i},{j}) is not regular at u=0 over the valuation ring"
            )
    d = d0 + D.scale(f.u())
    if not (d @ d).is_zero():
        return MajorizationReport(False, False, message="hypothesis not met: (d0 + uD)^2 != 0")
    if not (d0 @ d0).is_zero():
        return MajorizationReport(False, False, message="hypothesis not met: d0^2 != 0")
    s0, s1 = matrix_spectrum(d0), matrix_spectrum(d)
    if s0.B != s1.B:
        return MajorizationReport(
            False, False, message=f"hypothesis not met: homology dimensions differ ({s0.B} vs {s1.B})"
        )
    p0, p1 = partial_sums(s0), partial_sums(s1)
    ok = all(a <= b for a, b in zip(p1, p0))
    msg = "partial sums dominated" if ok else "partial sum violated"
    return MajorizationReport(ok, True, s0, s1, p0, p1, msg)


# ---------------------------------------------------------------------------
# scaling pipeline


@dataclass
class PipelineScenario:
    """Cp over F_p, S on Cp, and E over F_p(u) with d' = d_Cone(S) + uE."""

    Cp: FilteredComplex
    S: Matrix
    E: Matrix


@dataclass
class PipelineStep:
    name: str
    lhs: Fraction
    relation: str
    rhs: Fraction
    ok: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "step": self.name,
            "lhs": _fs(self.lhs),
            "relation": self.relation,
            "rhs": _fs(self.rhs),
            "pass": self.ok,
            "detail": self.detail,
        }


def _fs(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class PipelineReport:
    ok: bool
    steps: list[PipelineStep]
    failed_step: Optional[str] = None

    def to_dict(self) -> dict:
        return {"pass": self.ok, "failed_step": self.failed_step, "steps": [s.to_dict() for s in self.steps]}


def scaling_pipeline(c: FilteredComplex, p: int, scenario: PipelineScenario) -> PipelineReport:
    steps: list[PipelineStep] = []

    def fail(name):
        return PipelineReport(False, steps, name)

    qf = verify_quasi_frobenius(c, p)
    bt_c = beta_total(qf.source)
    bt_tate = beta_total(qf.tate)
    steps.append(
        PipelineStep("quasi-Frobenius", p * bt_c, "=", bt_tate / 2, qf.ok and p * bt_c == bt_tate / 2, str(qf.tate))
    )
    if not steps[-1].ok:
        return fail("quasi-Frobenius")

    cone_c = cone(scenario.S, scenario.Cp)
    kf = GroundField.prime_with_u(p)
    cone_u = extend_field(cone_c, kf)
    E = _to_u_field(scenario.E)
    deformed = cone_u.diff + E.scale(kf.u())
    sd = matrix_spectrum(deformed)
    same = sd.same_concise(qf.tate)
    steps.append(
        PipelineStep(
            "identification", beta_total(sd) / 2, "=", bt_tate / 2, same, f"deformed {sd.to_concise()} vs Tate {qf.tate}"
        )
    )
    if not same:
        return fail("identification")

    maj = check_majorization(cone_c, E)
    bt_cone = beta_total(maj.original) if maj.original else Fraction(0)
    steps.append(
        PipelineStep("majorization", beta_total(sd) / 2, "<=", bt_cone / 2, maj.ok, maj.message)
    )
    if not maj.ok:
        return fail("majorization")

    cb = check_cone_bound(ChainMap(scenario.Cp.orthonormalize(), scenario.Cp.orthonormalize(), scenario.S))
    bt_cp = cb.beta_c if cb.beta_c is not None else beta_total(spectrum(scenario.Cp))
    steps.append(PipelineStep("cone bound", bt_cone / 2, "<=", bt_cp, cb.ok, cb.message))
    if not cb.ok:
        return fail("cone bound")

    concl = p * bt_c <= bt_cp
    steps.append(PipelineStep("conclusion", p * bt_c, "<=", bt_cp, concl, "p*beta_tot(c) <= beta_tot(Cp)"))
    if not concl:
        return fail("conclusion")
    return PipelineReport(True, steps)
