"""Seeded random instances that carry their own ground truth.

Complexes are built in adapted form (free cycles plus pairs
``zeta -> c T^beta eta``) and then conjugated by a degree-preserving matrix
``Q = L U`` in GL over the valuation ring, so the spectrum is known in advance.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

from .barcode import BarSpectrum
from .complex import ORTHONORMAL, RAW, BasisElement, FilteredComplex, make_complex
from .matrix import Matrix
from .scalars import GroundField, NovikovScalar, embed


@dataclass
class GeneratorConfig:
    seed: int
    field: GroundField
    rank: int
    B: Optional[int] = None
    strictness: Fraction = Fraction(1, 4)
    den_bound: int = 4
    density: Fraction = Fraction(1, 2)
    raw: bool = False
    integer: bool = False  # integer coefficients, unipotent conjugation (for mod-p checks)
    fraction_units: bool = True

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        self.strictness = Fraction(self.strictness)
        self.density = Fraction(self.density)
        if self.strictness <= 0:
            raise ValueError("strictness must be positive")
        if not 0 <= self.density <= 1:
            raise ValueError("density must lie in [0, 1]")
        if self.B is not None and (self.B < 0 or self.B > self.rank or (self.rank - self.B) % 2):
            raise ValueError(f"free rank {self.B} incompatible with rank {self.rank}")


@dataclass
class GeneratedComplex:
    complex: FilteredComplex
    truth: BarSpectrum
    adapted: FilteredComplex
    Q: Matrix
    Qinv: Matrix
    pivot_coefficients: list = dc_field(default_factory=list)

    @property
    def digest(self) -> str:
        return digest(self.complex)


def digest(c: FilteredComplex) -> str:
    return hashlib.sha256(c.to_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# random scalars


def random_exponent(rng: random.Random, den_bound: int, lo: Fraction = Fraction(0), span: int = 2) -> Fraction:
    den = rng.randint(1, den_bound)
    return lo + Fraction(rng.randint(0, span * den), den)


def random_coefficient(field: GroundField, rng: random.Random, integer: bool = False):
    if field.kind == "Q":
        c = 0
        while c == 0:
            c = rng.randint(-3, 3)
        if not integer and rng.random() < 0.25:
            return Fraction(c, rng.randint(1, 3))
        return Fraction(c)
    return field.random_unit_coefficient(rng)


def random_element(field: GroundField, rng: random.Random, den_bound: int, lo=Fraction(0), integer=False):
    """Random finite sum of 1-2 monomials with exponents >= lo."""
    terms: dict[Fraction, object] = {}
    for _ in range(rng.randint(1, 2)):
        terms[random_exponent(rng, den_bound, Fraction(lo))] = random_coefficient(field, rng, integer)
    return field.from_terms(terms)


def random_unit(field: GroundField, rng: random.Random, den_bound: int, allow_fraction: bool = True):
    c = field.scalar(random_coefficient(field, rng))
    if allow_fraction and rng.random() < 0.2:
        a = random_exponent(rng, den_bound, Fraction(1, den_bound), 1)
        c = c * (field.one() + field.T(a))
    return c


# ---------------------------------------------------------------------------
# matrices


def random_unimodular(
    field: GroundField,
    n: int,
    rng: random.Random,
    den_bound: int = 4,
    density=Fraction(1, 2),
    classes: Optional[list[list[int]]] = None,
    unipotent: bool = False,
    integer: bool = False,
    fraction_units: bool = True,
) -> tuple[Matrix, Matrix]:
    """Random Q in GL over the valuation ring with its exact inverse.

    ``classes`` restricts mixing to index groups (degree classes).  With
    ``unipotent`` the diagonal is 1, so Q^{-1} is again polynomial.
    """
    if density == 0:
        return Matrix.identity(field, n), Matrix.identity(field, n)
    classes = classes or [list(range(n))]
    L = Matrix.identity(field, n)
    U = Matrix.identity(field, n)
    density = float(density)
    for cls in classes:
        for a, i in enumerate(cls):
            if not unipotent:
                U[i, i] = random_unit(field, rng, den_bound, fraction_units)
            for j in cls[a + 1 :]:
                if rng.random() < density:
                    L[j, i] = random_element(field, rng, den_bound, integer=integer)
                if rng.random() < density:
                    U[i, j] = random_element(field, rng, den_bound, integer=integer)
    Q = L @ U
    Qinv = _upper_inverse(U) @ _lower_unipotent_inverse(L)
    return Q, Qinv


def _lower_unipotent_inverse(L: Matrix) -> Matrix:
    n = L.nrows
    f = L.field
    inv = Matrix.identity(f, n)
    # solve column by column: L x = e_j
    for j in range(n):
        x: dict[int, NovikovScalar] = {j: f.one()}
        for i in range(j + 1, n):
            s = f.zero()
            for k in range(j, i):
                if k in x and L[i, k]:
                    s = s + L[i, k] * x[k]
            if s:
                x[i] = -s
        inv.cols[j] = x
    return inv


def _upper_inverse(U: Matrix) -> Matrix:
    n = U.nrows
    f = U.field
    inv = Matrix.identity(f, n)
    dinv = [U[i, i].inverse() for i in range(n)]
    for j in range(n):
        x: dict[int, NovikovScalar] = {j: dinv[j]}
        for i in range(j - 1, -1, -1):
            s = f.zero()
            for k in range(i + 1, j + 1):
                if k in x and U[i, k]:
                    s = s + U[i, k] * x[k]
            if s:
                x[i] = -s * dinv[i]
        inv.cols[j] = x
    return inv


# ---------------------------------------------------------------------------
# complexes


def generate(config: GeneratorConfig) -> GeneratedComplex:
    rng = random.Random(config.seed)
    field = config.field
    n = config.rank
    B = config.B
    if B is None:
        B = rng.choice([b for b in range(n % 2, n + 1, 2)])
    K = (n - B) // 2
    # abstract generators: ("free", deg) or ("eta", deg, pair) / ("zeta", deg+1, pair)
    gens = []
    for i in range(B):
        gens.append(("xi", rng.randint(0, 1), i))
    betas = []
    coeffs = []
    for j in range(K):
        k = rng.randint(0, 1)
        gens.append(("eta", k, j))
        gens.append(("zeta", k + 1, j))
        betas.append(random_exponent(rng, config.den_bound, config.strictness))
        coeffs.append(random_coefficient(field, rng, config.integer))
    rng.shuffle(gens)
    where = {(g[0], g[2]): pos for pos, g in enumerate(gens)}
    basis = [BasisElement(f"{g[0]}{g[2]}", g[1]) for g in gens]
    A = Matrix(field, n, n)
    for j in range(K):
        A[where[("eta", j)], where[("zeta", j)]] = field.monomial(coeffs[j], betas[j])
    adapted = FilteredComplex(field, basis, A, ORTHONORMAL, graded=True)

    classes: dict[int, list[int]] = {}
    for pos, b in enumerate(basis):
        classes.setdefault(b.degree, []).append(pos)
    Q, Qinv = random_unimodular(
        field,
        n,
        rng,
        config.den_bound,
        config.density,
        [classes[k] for k in sorted(classes)],
        unipotent=config.integer or not config.fraction_units,
        integer=config.integer,
    )
    d = Q @ A @ Qinv
    labels = [BasisElement(f"x{i}", b.degree) for i, b in enumerate(basis)]
    if config.raw:
        actions = [random_exponent(rng, config.den_bound, Fraction(0), 3) for _ in range(n)]
        raw = Matrix(field, n, n)
        for i, j, x in d.entries():
            raw[i, j] = x.shift(actions[i] - actions[j])
        labels = [BasisElement(b.label, b.degree, a) for b, a in zip(labels, actions)]
        c = FilteredComplex(field, labels, raw, RAW, graded=True)
    else:
        c = FilteredComplex(field, labels, d, ORTHONORMAL, graded=True)
    truth = BarSpectrum(B, tuple(betas))
    return GeneratedComplex(c, truth, adapted, Q, Qinv, coeffs)


def conjugate(c: FilteredComplex, Q: Matrix, Qinv: Matrix) -> FilteredComplex:
    c = c.orthonormalize()
    return FilteredComplex(c.field, list(c.basis), Q @ c.diff @ Qinv, ORTHONORMAL, graded=False)


def modp_witness() -> FilteredComplex:
    """dζ = 2T^{1/2}η over Q: one bar 1/2, but d vanishes mod 2."""
    q = GroundField.rationals()
    return make_complex(q, [("eta", 0), ("zeta", 1)], {(0, 1): q.monomial(2, Fraction(1, 2))})


# ---------------------------------------------------------------------------
# scenarios for the perturbation, cone, majorization and pipeline checks


def _adapted_block(field, rng, n_free, betas, degrees=None):
    """Adapted block: free cycles then (eta, zeta) pairs; returns matrix and roles."""
    n = n_free + 2 * len(betas)
    m = Matrix(field, n, n)
    roles = [("xi", k) for k in range(n_free)]
    for k, b in enumerate(betas):
        e, z = n_free + 2 * k, n_free + 2 * k + 1
        m[e, z] = field.monomial(random_coefficient(field, rng), b)
        roles += [("eta", k), ("zeta", k)]
    return m, roles


@dataclass
class PerturbationInstance:
    complex: FilteredComplex
    blocks: list[list[int]]
    eps0: Fraction


def perturbation_instance(seed: int, field: GroundField, den_bound: int = 4) -> PerturbationInstance:
    """Local blocks with short bars plus cross-block terms of valuation >= eps0.

    Cross terms go from block a to block b > a, from sources (zeta or a
    source-xi) to cycles (eta or a target-xi).  This keeps d^2 = 0 and makes
    hD nilpotent, so the perturbation series terminates.
    """
    rng = random.Random(seed)
    eps0 = Fraction(rng.choice([1, 1, 2, 3]), rng.choice([1, 2]))
    max_beta = eps0 / 2
    nb = rng.randint(2, 3)
    blocks_m, roles, offsets = [], [], []
    n = 0
    for _ in range(nb):
        n_free = rng.randint(0, 2)
        k = rng.randint(0 if n_free else 1, 2)
        betas = []
        for _ in range(k):
            den = rng.randint(1, den_bound)
            betas.append(max(Fraction(1, 8 * den), max_beta * Fraction(rng.randint(1, den), den)))
        m, r = _adapted_block(field, rng, n_free, betas)
        # split free cycles into sources and targets
        r = [(kind, idx, rng.random() < 0.5) for kind, idx in r]
        blocks_m.append(m)
        roles.append(r)
        offsets.append(n)
        n += m.nrows
    d = Matrix(field, n, n)
    for b, m in enumerate(blocks_m):
        o = offsets[b]
        for i, j, x in m.entries():
            d[o + i, o + j] = x
    for a in range(nb):
        for b in range(a + 1, nb):
            for si, (kind, _, src) in enumerate(roles[a]):
                if not (kind == "zeta" or (kind == "xi" and src)):
                    continue
                for ti, (kind2, _, src2) in enumerate(roles[b]):
                    if not (kind2 == "eta" or (kind2 == "xi" and not src2)):
                        continue
                    if rng.random() < 0.6:
                        x = random_element(field, rng, den_bound, lo=eps0)
                        d[offsets[b] + ti, offsets[a] + si] = x
    # conjugate each block by a random unimodular matrix
    Q = Matrix(field, n, n)
    Qinv = Matrix(field, n, n)
    for b, m in enumerate(blocks_m):
        q, qi = random_unimodular(field, m.nrows, rng, den_bound, Fraction(1, 2), fraction_units=False)
        o = offsets[b]
        for i, j, x in q.entries():
            Q[o + i, o + j] = x
        for i, j, x in qi.entries():
            Qinv[o + i, o + j] = x
    d = Q @ d @ Qinv
    basis = [BasisElement(f"b{b}.{k}", 0) for b, m in enumerate(blocks_m) for k in range(m.nrows)]
    c = FilteredComplex(field, basis, d, ORTHONORMAL, graded=False)
    blocks = [list(range(offsets[b], offsets[b] + m.nrows)) for b, m in enumerate(blocks_m)]
    return PerturbationInstance(c, blocks, eps0)


def degree_raising(c: FilteredComplex, rng: random.Random, den_bound: int = 4, density=0.5, lo=Fraction(0)) -> Matrix:
    """Random valuation-ring map raising degree by one (zero across other degrees)."""
    n = c.rank
    R = Matrix(c.field, n, n)
    for i in range(n):
        for j in range(n):
            if c.basis[i].degree == c.basis[j].degree + 1 and rng.random() < density:
                R[i, j] = random_element(c.field, rng, den_bound, lo=lo)
    return R


def null_homotopic_map(c: FilteredComplex, rng: random.Random, den_bound: int = 4, zero: bool = False):
    """S = T^gamma (dR + Rd) for random R; returns (S, R, gamma)."""
    c = c.orthonormalize()
    f = c.field
    if zero:
        return Matrix.zeros(f, c.rank), Matrix.zeros(f, c.rank), Fraction(0)
    R = degree_raising(c, rng, den_bound)
    gamma = Fraction(rng.randint(0, 2 * den_bound), den_bound)
    d = c.diff
    S = (d @ R + R @ d).scale(f.T(gamma))
    return S, R, gamma


@dataclass
class MajorizationScenario:
    c0: FilteredComplex
    D: Matrix


def _nilpotent_u_conjugator(field_u: GroundField, n: int, rng, den_bound: int, density=0.3):
    """g = I + uN with N strictly upper triangular, and its polynomial inverse."""
    N = Matrix(field_u, n, n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                N[i, j] = random_element(field_u, rng, den_bound)
    u = field_u.u()
    uN = N.scale(u)
    ident = Matrix.identity(field_u, n)
    g = ident + uN
    ginv = ident
    term = ident
    for _ in range(n):
        term = -(uN @ term)
        if term.is_zero():
            break
        ginv = ginv + term
    return g, ginv


def majorization_scenario(seed: int, p: int, den_bound: int = 4) -> MajorizationScenario:
    """Adapted c0 over F_p with a u-deformation of its zeta -> eta block."""
    rng = random.Random(seed)
    fp = GroundField.prime(p)
    fu = GroundField.prime_with_u(p)
    n_free = rng.randint(0, 2)
    K = rng.randint(1, 3)
    betas = [random_exponent(rng, den_bound, Fraction(0), 2) for _ in range(K)]
    m, roles = _adapted_block(fp, rng, n_free, betas)
    n = m.nrows
    etas = [i for i, r in enumerate(roles) if r[0] == "eta"]
    zetas = [i for i, r in enumerate(roles) if r[0] == "zeta"]
    Du = Matrix(fu, n, n)
    for e in etas:
        for z in zetas:
            if rng.random() < (0.7 if e + 1 == z else 0.3):
                Du[e, z] = embed(random_element(fp, rng, den_bound), fu)
    Q, Qinv = random_unimodular(fp, n, rng, den_bound, Fraction(1, 2), fraction_units=False)
    d0 = Q @ m @ Qinv
    Qu = Q.map(lambda x: embed(x, fu), fu)
    Qinvu = Qinv.map(lambda x: embed(x, fu), fu)
    d0u = d0.map(lambda x: embed(x, fu), fu)
    d = d0u + (Qu @ Du @ Qinvu).scale(fu.u())
    if rng.random() < 0.5:
        g, ginv = _nilpotent_u_conjugator(fu, n, rng, den_bound)
        d = g @ d @ ginv
    uinv = fu.u().inverse()
    D = (d - d0u).scale(uinv)
    basis = [BasisElement(f"x{i}", 0) for i in range(n)]
    return MajorizationScenario(FilteredComplex(fp, basis, d0, ORTHONORMAL, graded=False), D)


def pipeline_scenario(c: FilteredComplex, p: int, seed: int, den_bound: int = 4):
    """Build Cp, S and E so that Cone(S) + uE has the Tate spectrum of c.

    Cp carries the free part of c, pairs of exponent p*beta_j, and extra
    pairs that the u-deformation turns into zero-length bars.  S is
    null-homotopic via Phi = [[1,0],[T^g R,1]], which conjugates Cone(0)
    to Cone(S).
    """
    from .barcode import spectrum as _spectrum
    from .perturb import PipelineScenario

    rng = random.Random(seed)
    fp = GroundField.prime(p)
    fu = GroundField.prime_with_u(p)
    s = _spectrum(c).to_concise()
    extra = [random_exponent(rng, den_bound, Fraction(0), 2) for _ in range(rng.randint(0, 3))]
    betas = [p * b for b in s.torsion] + extra
    m, roles = _adapted_block(fp, rng, s.B, betas)
    n = m.nrows
    degs = []
    for kind, _ in roles:
        degs.append(0 if kind in ("xi", "eta") else 1)
    basis = [BasisElement(f"{k}{i}", dg) for (k, i), dg in zip(roles, degs)]
    Cp = FilteredComplex(fp, basis, m, ORTHONORMAL, graded=True)
    S, R, gamma = null_homotopic_map(Cp, rng, den_bound)
    # E0: u on the extra pairs in both cone copies
    E0 = Matrix(fu, 2 * n, 2 * n)
    one = fu.one()
    first_extra = len(s.torsion)
    for (kind, idx), pos in zip(roles, range(n)):
        if kind == "zeta" and idx >= first_extra:
            eta_pos = pos - 1
            E0[eta_pos, pos] = one
            E0[n + eta_pos, n + pos] = one
    Ru = R.scale(fp.T(gamma)).map(lambda x: embed(x, fu), fu)
    ident = Matrix.identity(fu, n)
    Phi = block_matrix_2(ident, Ru, fu)
    Phi_inv = block_matrix_2(ident, -Ru, fu)
    E = Phi @ E0 @ Phi_inv
    if rng.random() < 0.5:
        from .perturb import cone

        cone_u = cone(S, Cp).diff.map(lambda x: embed(x, fu), fu)
        g, ginv = _nilpotent_u_conjugator(fu, 2 * n, rng, den_bound, density=0.15)
        d = g @ (cone_u + E.scale(fu.u())) @ ginv
        E = (d - cone_u).scale(fu.u().inverse())
    return PipelineScenario(Cp, S, E)


def block_matrix_2(ident: Matrix, lower: Matrix, field: GroundField) -> Matrix:
    from .matrix import block_matrix

    return block_matrix([[ident, None], [lower, ident]], field)
