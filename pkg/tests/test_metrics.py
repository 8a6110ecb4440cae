import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from novbar.barcode import BarSpectrum, spectrum
from novbar.complex import FilteredComplex, elementary_pair
from novbar.generate import GeneratorConfig, conjugate, generate, random_unimodular
from novbar.matrix import Matrix
from novbar.metrics import (
    Barcode,
    QuasiEquivalenceCertificate,
    barcode_from_spectrum,
    bottleneck,
    canonical_scaling_certificate,
    closeness_gap,
    compose_certificates,
    identity_certificate,
    scaled_complex,
    shift_quotient_distance,
    spectra_close,
    verify_certificate,
)
from novbar.scalars import INF, GroundField, ParseError

Q = GroundField.rationals()
F = Fraction


def brute_bottleneck(a: Barcode, b: Barcode):
    """Minimum over all partial matchings of finite bars (infinite bars sorted)."""
    ia, ib = a.infinite_list(), b.infinite_list()
    if len(ia) != len(ib):
        return INF
    base = max((abs(x - y) for x, y in zip(ia, ib)), default=F(0))
    A, B = a.finite_list(), b.finite_list()
    best = INF
    for k in range(min(len(A), len(B)) + 1):
        for sa in itertools.combinations(range(len(A)), k):
            for sb in itertools.permutations(range(len(B)), k):
                cost = base
                for i, j in zip(sa, sb):
                    cost = max(cost, abs(A[i][0] - B[j][0]), abs(A[i][1] - B[j][1]))
                for i in set(range(len(A))) - set(sa):
                    cost = max(cost, (A[i][1] - A[i][0]) / 2)
                for j in set(range(len(B))) - set(sb):
                    cost = max(cost, (B[j][1] - B[j][0]) / 2)
                best = min(best, cost)
    return best


half_quarters = st.integers(-8, 8).map(lambda k: F(k, 4))
bar_st = st.tuples(half_quarters, st.integers(1, 8).map(lambda k: F(k, 4))).map(lambda t: (t[0], t[0] + t[1]))
barcode_st = st.builds(
    lambda fin, inf: Barcode.from_bars(fin, inf),
    st.lists(bar_st, max_size=3),
    st.lists(half_quarters, max_size=1),
)


def test_bottleneck_examples():
    a = Barcode.from_bars([(0, 1), (F(1, 2), 2)], [0])
    assert bottleneck(a, a) == 0
    assert bottleneck(Barcode.from_bars([(0, 1)]), Barcode.from_bars([(0, F(6, 5))])) == F(1, 5)
    assert bottleneck(Barcode.from_bars([(0, 1), (0, 3)]), Barcode.from_bars([(0, 3)])) == F(1, 2)


def test_bottleneck_infinite_counts():
    assert bottleneck(Barcode.from_bars([], [0]), Barcode.from_bars([], [])) == INF
    assert bottleneck(Barcode.from_bars([], [0, 2]), Barcode.from_bars([], [1, 2])) == 1


@given(barcode_st, barcode_st)
@settings(max_examples=80, deadline=None)
def test_bottleneck_matches_brute_force(a, b):
    assert bottleneck(a, b) == brute_bottleneck(a, b)


@given(barcode_st, barcode_st, barcode_st)
@settings(max_examples=60, deadline=None)
def test_bottleneck_metric_axioms(a, b, c):
    assert bottleneck(a, b) == bottleneck(b, a)
    ab, bc, ac = bottleneck(a, b), bottleneck(b, c), bottleneck(a, c)
    if ab != INF and bc != INF:
        assert ac <= ab + bc


@given(barcode_st, half_quarters)
@settings(max_examples=40, deadline=None)
def test_shift_quotient(a, s):
    assert shift_quotient_distance(a, a.shift(s)) == 0
    b = Barcode.from_bars([(0, 1)])
    assert shift_quotient_distance(a, b) <= bottleneck(a, b)


def test_barcode_json_roundtrip_and_errors():
    a = Barcode.from_bars([(0, F(1, 2)), (0, F(1, 2)), (1, 3)], [F(-1, 3)])
    assert Barcode.from_json(a.to_json()) == a
    assert a.to_json_obj()["finite"][0] == {"start": "0", "end": "1/2", "mult": 2}
    with pytest.raises(ParseError):
        Barcode.from_json('{"finite": [{"start": "1", "end": "0"}]}')
    with pytest.raises(ParseError):
        Barcode.from_json("[1,")


def test_barcode_from_spectrum():
    s = BarSpectrum(1, (0, F(1, 2)))
    b = barcode_from_spectrum(s)
    assert b.finite_list() == [(0, F(1, 2))]
    assert b.infinite_list() == [0]


def test_spectra_close_examples():
    s = BarSpectrum(1, (F(1, 2), 2))
    assert spectra_close(s, s, F(1, 100))
    d = F(1, 3)
    assert spectra_close(BarSpectrum(0, (1,)), BarSpectrum(0, (1 + d,)), d)
    assert not spectra_close(BarSpectrum(1, ()), BarSpectrum(0, ()), 10)
    # an unmatched bar may vanish once it is at most 2δ long
    assert spectra_close(BarSpectrum(0, (F(1, 2),)), BarSpectrum(0, (0,)), F(1, 4))
    assert not spectra_close(BarSpectrum(0, (F(1, 2),)), BarSpectrum(0, (0,)), F(1, 5))
    assert closeness_gap(BarSpectrum(0, (1,)), BarSpectrum(0, (F(3, 2),))) == F(1, 4)


def test_identity_certificate_and_corruption():
    c = generate(GeneratorConfig(seed=3, field=Q, rank=4)).complex
    cert = identity_certificate(c)
    assert verify_certificate(cert).ok
    H = cert.H.copy()
    H[0, 0] = Q.T(1)
    bad = QuasiEquivalenceCertificate(c, c, cert.F, cert.G, H, cert.Hp, 0)
    rep = verify_certificate(bad)
    assert not rep.ok and "GF - T^delta" in rep.failures[0] and "(" in rep.failures[0]


def test_canonical_certificate_v2():
    v2 = elementary_pair(Q, 1)
    cert = canonical_scaling_certificate(v2, 1)
    assert verify_certificate(cert).ok
    # F(eta) = T eta, F(zeta) = zeta in the adapted basis (which is the given one)
    assert cert.F[0, 0] == Q.T(1) and cert.F[1, 1] == Q.one()
    assert cert.F.nnz() == 2


@pytest.mark.parametrize("delta", [F(0), F(1, 3), F(1)])
def test_canonical_certificate_random(delta):
    for seed in range(8):
        g = generate(GeneratorConfig(seed=seed, field=Q, rank=5))
        cert = canonical_scaling_certificate(g.complex, delta)
        assert verify_certificate(cert).ok
        assert spectra_close(spectrum(g.complex), spectrum(cert.target), delta)


def conjugation_certificate(c: FilteredComplex, rng) -> QuasiEquivalenceCertificate:
    c = c.orthonormalize()
    Qm, Qinv = random_unimodular(Q, c.rank, rng)
    target = conjugate(c, Qm, Qinv)
    z = Matrix.zeros(Q, c.rank)
    return QuasiEquivalenceCertificate(c, target, Qm, Qinv, z, z.copy(), 0)


def test_compose_certificates():
    rng = random.Random(5)
    for seed in range(6):
        c = generate(GeneratorConfig(seed=seed, field=Q, rank=4)).complex
        a = canonical_scaling_certificate(c, F(1, 4))
        b = canonical_scaling_certificate(a.target, F(1, 2))
        ab = compose_certificates(a, b)
        assert ab.delta == F(3, 4) and verify_certificate(ab).ok
        ident = compose_certificates(identity_certificate(c), a)
        assert verify_certificate(ident).ok
        k = conjugation_certificate(a.target, rng)
        assert verify_certificate(k).ok
        assert verify_certificate(compose_certificates(a, k)).ok
        assert spectra_close(spectrum(c), spectrum(k.target), F(1, 4))


def test_compose_rejects_mismatch():
    a = identity_certificate(elementary_pair(Q, 1))
    b = identity_certificate(elementary_pair(Q, 2))
    with pytest.raises(ValueError):
        compose_certificates(a, b)


def test_scaled_complex_spectrum_is_shifted():
    g = generate(GeneratorConfig(seed=9, field=Q, rank=6))
    s2 = spectrum(scaled_complex(g.complex, F(1, 2)))
    assert s2.torsion == tuple(b + F(1, 2) for b in g.truth.torsion)
