"""Acceptance criteria, each at its stated size, tolerance (exact) and time limit."""

import random
import time
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from novbar.barcode import BarSpectrum, beta_total, minors_oracle, spectrum
from novbar.complex import ChainMap, elementary_pair, reduce_complex_mod_p
from novbar.equivariant import verify_quasi_frobenius
from novbar.generate import (
    GeneratorConfig,
    conjugate,
    generate,
    majorization_scenario,
    modp_witness,
    null_homotopic_map,
    perturbation_instance,
    pipeline_scenario,
    random_unimodular,
)
from novbar.metrics import (
    Barcode,
    bottleneck,
    canonical_scaling_certificate,
    spectra_close,
    verify_certificate,
)
from novbar.perturb import (
    SplitDifferential,
    check_cone_bound,
    check_majorization,
    check_perturbation,
    scaling_pipeline,
)
from novbar.scalars import INF, GroundField
from novbar.suites import modp_primes

Q = GroundField.rationals()
FIELDS = [Q, GroundField.prime(2), GroundField.prime(3), GroundField.prime(5)]
F = Fraction


def test_endpoint_identity(record_criterion):
    t0 = time.perf_counter()
    bad = []
    for k in range(200):
        field = FIELDS[k % 4]
        g = generate(GeneratorConfig(seed=1000 + k, field=field, rank=1 + k % 8))
        s = spectrum(g.complex)
        if not (s.N == s.B + 2 * s.K == g.complex.rank and s == g.truth):
            bad.append(k)
    elapsed = time.perf_counter() - t0
    record_criterion(1, "N = B + 2K on 200 complexes", not bad, elapsed, 5)
    assert not bad
    assert elapsed < 5


def test_oracle_equivalence(record_criterion):
    t0 = time.perf_counter()
    bad = []
    for field in FIELDS:
        for k in range(100):
            g = generate(GeneratorConfig(seed=2000 + k, field=field, rank=1 + k % 6))
            if spectrum(g.complex) != minors_oracle(g.complex):
                bad.append((str(field), k))
    elapsed = time.perf_counter() - t0
    record_criterion(2, "spectrum == minors_oracle, 100 per field", not bad, elapsed, 30)
    assert not bad
    assert elapsed < 30


def test_basis_invariance(record_criterion):
    t0 = time.perf_counter()
    bad = []
    for k in range(20):
        field = FIELDS[k % 4]
        rank = 1 + k % 6
        g = generate(GeneratorConfig(seed=3000 + k, field=field, rank=rank))
        rng = random.Random(k)
        for _ in range(50):
            Qm, Qinv = random_unimodular(field, rank, rng)
            assert Qm.determinant().valuation() == 0
            if spectrum(conjugate(g.complex, Qm, Qinv)) != g.truth:
                bad.append(k)
    elapsed = time.perf_counter() - t0
    record_criterion(3, "basis invariance, 20 x 50 conjugations", not bad, elapsed, 30)
    assert not bad
    assert elapsed < 30


def test_quasi_frobenius_scaling(record_criterion):
    cases = [(r, 2) for r in range(1, 5)] + [(r, 3) for r in range(1, 4)] + [(r, 5) for r in range(1, 3)]
    t0 = time.perf_counter()
    bad = []
    for rank, p in cases:
        for k in range(20):
            g = generate(GeneratorConfig(seed=4000 + 100 * rank + k, field=GroundField.prime(p), rank=rank))
            if not verify_quasi_frobenius(g.complex, p).ok:
                bad.append((rank, p, k))
    closed_form = True
    for p in (2, 3, 5):
        for beta in (F(1, 2), F(1, 3), F(2)):
            res = verify_quasi_frobenius(elementary_pair(GroundField.prime(p), beta), p)
            closed_form &= res.ok and res.tate.torsion == (p * beta, p * beta) and res.tate.B == 0
    elapsed = time.perf_counter() - t0
    ok = not bad and closed_form
    record_criterion(4, "quasi-Frobenius scaling, 9 cases x 20 + closed form", ok, elapsed, 120)
    assert ok, bad
    assert elapsed < 120


def test_deformation_majorization(record_criterion):
    t0 = time.perf_counter()
    bad, strict = [], 0
    for k in range(100):
        sc = majorization_scenario(5000 + k, (2, 3, 5)[k % 3])
        rep = check_majorization(sc.c0, sc.D)
        if not rep.ok:
            bad.append(k)
        strict += rep.strict
    elapsed = time.perf_counter() - t0
    ok = not bad and strict >= 10
    record_criterion(5, "deformation majorization, 100 scenarios", ok, elapsed, 30, f"strict={strict}")
    assert ok
    assert elapsed < 30


def test_cone_bound(record_criterion):
    t0 = time.perf_counter()
    bad = []
    zeros = 0
    for k in range(100):
        field = FIELDS[k % 4]
        g = generate(GeneratorConfig(seed=6000 + k, field=field, rank=1 + k % 6))
        zero = k % 5 == 0
        S, _, _ = null_homotopic_map(g.complex, random.Random(k), zero=zero)
        rep = check_cone_bound(ChainMap(g.complex, g.complex, S))
        if not rep.ok or (zero and not rep.equality):
            bad.append(k)
        zeros += zero
    elapsed = time.perf_counter() - t0
    record_criterion(6, "cone bound, 100 null-homotopic maps", not bad, elapsed, 30, f"S=0 cases={zeros}")
    assert not bad
    assert elapsed < 30


def test_stability(record_criterion):
    t0 = time.perf_counter()
    bad = []
    for k in range(50):
        g = generate(GeneratorConfig(seed=7000 + k, field=FIELDS[k % 4], rank=1 + k % 6))
        s1 = spectrum(g.complex)
        for delta in (F(1, 4), F(1, 3), F(1)):
            cert = canonical_scaling_certificate(g.complex, delta)
            if not (verify_certificate(cert).ok and spectra_close(s1, spectrum(cert.target), delta)):
                bad.append((k, delta))
    elapsed = time.perf_counter() - t0
    record_criterion(7, "stability certificates at 1/4, 1/3, 1", not bad, elapsed, 20)
    assert not bad
    assert elapsed < 20


def test_mod_p_reduction(record_criterion):
    t0 = time.perf_counter()
    bad, checked = [], 0
    for k in range(50):
        g = generate(GeneratorConfig(seed=8000 + k, field=Q, rank=1 + k % 6, integer=True))
        sq = spectrum(g.complex)
        for p in modp_primes(g.pivot_coefficients):
            checked += 1
            if spectrum(reduce_complex_mod_p(g.complex, p)) != sq:
                bad.append((k, p))
    w = modp_witness()
    sq, s2 = spectrum(w), spectrum(reduce_complex_mod_p(w, 2))
    witness = sq == BarSpectrum(0, (F(1, 2),)) and s2 == BarSpectrum(2, ())
    elapsed = time.perf_counter() - t0
    ok = not bad and witness
    record_criterion(8, "mod-p reduction on 50 instances + witness", ok, elapsed, 30, f"(instance, p) pairs={checked}")
    assert ok, bad
    assert elapsed < 30


def test_perturbation_soundness(record_criterion):
    t0 = time.perf_counter()
    bad = []
    for k in range(30):
        inst = perturbation_instance(9000 + k, FIELDS[k % 4])
        s = SplitDifferential.from_blocks(inst.complex, inst.blocks, inst.eps0)
        rep = check_perturbation(s, 10 * inst.eps0)
        if not (rep.ok and rep.exact and rep.certificate_ok and rep.spectra_ok):
            bad.append((k, rep.messages))
    elapsed = time.perf_counter() - t0
    record_criterion(9, "perturbation soundness, 30 instances", not bad, elapsed, 60)
    assert not bad
    assert elapsed < 60


def test_scaling_pipeline(record_criterion):
    t0 = time.perf_counter()
    bad = []
    runs = [(2, k) for k in range(20)] + [(3, k) for k in range(10)]
    for p, k in runs:
        rank = 1 + k % (4 if p == 2 else 3)
        g = generate(GeneratorConfig(seed=10000 + 100 * p + k, field=GroundField.prime(p), rank=rank))
        rep = scaling_pipeline(g.complex, p, pipeline_scenario(g.complex, p, k))
        names = [s.name for s in rep.steps]
        if not rep.ok or names != ["quasi-Frobenius", "identification", "majorization", "cone bound", "conclusion"]:
            bad.append((p, k, rep.failed_step))
    elapsed = time.perf_counter() - t0
    record_criterion(10, "scaling pipeline, 20 at p=2 and 10 at p=3", not bad, elapsed, 120)
    assert not bad
    assert elapsed < 120


_quarters = st.integers(-8, 8).map(lambda k: F(k, 4))
_bar = st.tuples(_quarters, st.integers(1, 8).map(lambda k: F(k, 4))).map(lambda t: (t[0], t[0] + t[1]))
_barcode = st.builds(lambda fin, inf: Barcode.from_bars(fin, inf), st.lists(_bar, max_size=4), st.lists(_quarters, max_size=2))
_metric_failures: list = []


@given(_barcode, _barcode, _barcode)
@settings(max_examples=100, deadline=None, derandomize=True)
def _metric_axioms(a, b, c):
    ab, ba = bottleneck(a, b), bottleneck(b, a)
    ac, bc = bottleneck(a, c), bottleneck(b, c)
    if ab != ba or (ab != INF and bc != INF and ac > ab + bc):
        _metric_failures.append((a, b, c))


def test_bottleneck_metric(record_criterion):
    t0 = time.perf_counter()
    _metric_failures.clear()
    _metric_axioms()
    hand = [
        bottleneck(Barcode.from_bars([(0, 1)], [0]), Barcode.from_bars([(0, 1)], [0])) == 0,
        bottleneck(Barcode.from_bars([(0, 1)]), Barcode.from_bars([(0, F(6, 5))])) == F(1, 5),
        bottleneck(Barcode.from_bars([(0, 1), (0, 3)]), Barcode.from_bars([(0, 3)])) == F(1, 2),
    ]
    elapsed = time.perf_counter() - t0
    ok = not _metric_failures and all(hand)
    record_criterion(11, "bottleneck symmetry, triangle, hand values", ok, elapsed, 10)
    assert ok
    assert elapsed < 10
