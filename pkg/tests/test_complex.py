import json
from fractions import Fraction

import pytest

from novbar.barcode import spectrum
from novbar.complex import (
    RAW,
    ComplexError,
    FilteredComplex,
    SizeCapError,
    direct_sum,
    elementary_pair,
    extend_field,
    make_complex,
    shift_action,
    tensor_power,
    zero_complex,
)
from novbar.generate import GeneratorConfig, generate
from novbar.scalars import GroundField, ParseError

Q = GroundField.rationals()
F5 = GroundField.prime(5)


def test_validate_examples():
    assert zero_complex(Q, 3).validate().ok
    v2 = elementary_pair(Q, Fraction(1, 2))
    rep = v2.validate()
    assert rep.ok and rep.strict
    raw = make_complex(Q, [("eta", 0, 0), ("zeta", 1, 0)], {(0, 1): 1}, convention=RAW)
    rep = raw.validate()
    assert rep.ok and not rep.strict


def test_validate_reports_failures():
    # d^2 != 0
    bad = make_complex(Q, [("a", 0), ("b", 1), ("c", 2)], {(0, 1): "T^(1)", (1, 2): "T^(1)"})
    rep = bad.validate()
    assert not rep.ok and rep.first_violation is not None
    # degree mismatch
    bad = make_complex(Q, [("a", 0), ("b", 0)], {(0, 1): "T^(1)"})
    assert not bad.validate().ok
    # negative valuation in the orthonormal convention
    bad = make_complex(Q, [("a", 0), ("b", 1)], {(0, 1): "T^(-1)"})
    assert not bad.validate().ok


def test_orthonormalize_examples():
    c = make_complex(Q, [("eta", 0, 0), ("zeta", 1, 1)], {(0, 1): 1}, convention=RAW)
    assert c.orthonormalize().diff[0, 1] == Q.T(1)
    c = make_complex(Q, [("eta", 0, 0), ("zeta", 1, Fraction(1, 4))], {(0, 1): "2*T^(1/4)"}, convention=RAW)
    assert c.orthonormalize().diff[0, 1] == Q.monomial(2, Fraction(1, 2))
    v2 = elementary_pair(Q, 1)
    assert v2.orthonormalize() == v2


def test_orthonormalize_preserves_spectrum():
    for seed in range(10):
        g = generate(GeneratorConfig(seed=seed, field=Q, rank=4, raw=True))
        assert g.complex.convention == RAW
        assert spectrum(g.complex) == spectrum(g.complex.orthonormalize()) == g.truth


def test_tensor_power_trivial():
    c = zero_complex(Q, 1)
    t = tensor_power(c, 3)
    assert t.rank == 1 and t.diff.is_zero()


def test_tensor_square_of_v2():
    v2 = elementary_pair(Q, Fraction(1, 3))
    t = tensor_power(v2, 2)
    assert t.rank == 4 and t.validate().ok and t.is_strict()
    labels = [b.label for b in t.basis]
    zz = labels.index("zeta⊗zeta")
    ez, ze = labels.index("eta⊗zeta"), labels.index("zeta⊗eta")
    col = {i: x for i, j, x in t.diff.entries() if j == zz}
    # d(z z) = dz z + (-1)^|z| z dz = T^b (eta z) - T^b (z eta)
    assert col == {ez: Q.T(Fraction(1, 3)), ze: -Q.T(Fraction(1, 3))}
    assert [b.degree for b in t.basis] == [0, 1, 1, 2]


def test_tensor_power_validates_on_random_inputs():
    for seed in range(6):
        g = generate(GeneratorConfig(seed=seed, field=GroundField.prime(3), rank=3))
        t = tensor_power(g.complex, 3)
        assert t.validate().ok and t.is_strict()


def test_tensor_cap():
    with pytest.raises(SizeCapError):
        tensor_power(zero_complex(Q, 5), 5, cap=100)


def test_direct_sum_and_shift():
    s = direct_sum(zero_complex(Q, 1), zero_complex(Q, 1))
    assert s.rank == 2 and s.diff.is_zero() and s.validate().ok
    c = make_complex(Q, [("eta", 0, 0), ("zeta", 1, 1)], {(0, 1): "T^(1/2)"}, convention=RAW)
    sh = shift_action(c, Fraction(7, 3))
    assert [b.action for b in sh.basis] == [Fraction(7, 3), Fraction(10, 3)]
    assert spectrum(sh) == spectrum(c)


def test_extend_field_preserves_spectrum():
    g = generate(GeneratorConfig(seed=4, field=F5, rank=5))
    e = extend_field(g.complex, GroundField.prime_with_u(5))
    assert spectrum(e) == spectrum(g.complex)
    with pytest.raises(ComplexError):
        extend_field(g.complex, Q)


def test_json_roundtrip_is_bit_exact():
    for field in (Q, F5, GroundField.prime_with_u(3)):
        g = generate(GeneratorConfig(seed=11, field=field, rank=4))
        text = g.complex.to_json()
        back = FilteredComplex.from_json(text)
        assert back == g.complex
        assert back.to_json() == text


def test_json_parse_error_is_located():
    obj = json.loads(elementary_pair(Q, 1).to_json())
    obj["diff"]["(0,1)"] = "T^("
    with pytest.raises(ParseError, match=r"\(0,1\)"):
        FilteredComplex.from_json(json.dumps(obj))
