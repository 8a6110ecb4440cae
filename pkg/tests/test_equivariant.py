from fractions import Fraction

import pytest

from novbar.barcode import BarSpectrum, minors_oracle, spectrum
from novbar.complex import ComplexError, SizeCapError, elementary_pair, make_complex, tensor_power, zero_complex
from novbar.equivariant import (
    build_tate,
    norm_matrix,
    rescale_spectrum,
    tau,
    tau_matrix,
    verify_quasi_frobenius,
)
from novbar.generate import GeneratorConfig, generate
from novbar.matrix import Matrix
from novbar.scalars import GroundField

F = Fraction


def two_generators(field, degree):
    return make_complex(field, [("x", degree), ("y", degree)], {})


@pytest.mark.parametrize("degree,sign", [(0, 1), (1, -1)])
def test_tau_swap_sign(degree, sign):
    f = GroundField.prime(2) if sign == 1 else GroundField.prime(3)
    c = two_generators(f, degree)
    t = tau_matrix(c, 2)
    # words in lexicographic order: xx, xy, yx, yy
    assert t[2, 1] == f.scalar(sign)  # x⊗y -> ±y⊗x
    assert t[1, 2] == f.scalar(sign)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_tau_order_commutation_and_norm(p):
    f = GroundField.prime(p)
    rank = 3 if p < 5 else 2
    for seed in range(3):
        c = generate(GeneratorConfig(seed=seed, field=f, rank=rank)).complex
        cp = tensor_power(c, p)
        t = tau(cp, c, p)
        assert t.is_chain_map()
        m = t.matrix
        power = Matrix.identity(f, m.nrows)
        for _ in range(p):
            power = m @ power
        assert power == Matrix.identity(f, m.nrows)
        ident = Matrix.identity(f, m.nrows)
        assert ((ident - m) @ norm_matrix(m, p)).is_zero()


def test_tate_rank1_zero():
    c = zero_complex(GroundField.prime(2), 1)
    tc = build_tate(c, 2)
    assert tc.rank == 2 and tc.underlying.diff.is_zero()


@pytest.mark.parametrize("p", [2, 3, 5])
def test_tate_of_v2_squares_to_zero(p):
    v2 = elementary_pair(GroundField.prime(p), F(1, 2))
    tc = build_tate(v2, p)
    assert tc.rank == 2 * 2**p
    d = tc.underlying.diff
    assert (d @ d).is_zero()


def test_tate_of_v2_at_p2_agrees_with_minors_oracle():
    v2 = elementary_pair(GroundField.prime(2), F(1, 2))
    tc = build_tate(v2, 2)
    assert tc.rank == 8
    assert minors_oracle(tc.underlying, cap=8) == spectrum(tc.underlying)
    assert spectrum(tc.underlying).same_concise(BarSpectrum(0, (1, 1)))


def test_rescale_examples():
    assert rescale_spectrum(BarSpectrum(1, ()), 5) == BarSpectrum(2, ())
    assert rescale_spectrum(BarSpectrum(0, (F(1, 2),)), 3) == BarSpectrum(0, (F(3, 2), F(3, 2)))
    assert rescale_spectrum(BarSpectrum(2, (1, 2)), 2) == BarSpectrum(4, (2, 2, 4, 4))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_quasi_frobenius_v2(p):
    res = verify_quasi_frobenius(elementary_pair(GroundField.prime(p), F(1, 2)), p)
    assert res.ok
    assert res.tate.torsion == (F(p, 2), F(p, 2))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_quasi_frobenius_zero_differential(p):
    res = verify_quasi_frobenius(zero_complex(GroundField.prime(p), 2), p)
    assert res.ok and res.tate.B == 4 and res.tate.torsion == ()


def test_quasi_frobenius_random_rank3_f2():
    for seed in range(5):
        g = generate(GeneratorConfig(seed=seed, field=GroundField.prime(2), rank=3))
        assert verify_quasi_frobenius(g.complex, 2).ok


def test_tate_rejects_bad_input():
    with pytest.raises(ComplexError):
        build_tate(elementary_pair(GroundField.rationals(), 1), 2)
    nonstrict = make_complex(GroundField.prime(2), [("a", 0), ("b", 1)], {(0, 1): 1})
    with pytest.raises(ComplexError):
        build_tate(nonstrict, 2)
    with pytest.raises(SizeCapError):
        build_tate(zero_complex(GroundField.prime(3), 4), 3, cap=100)
