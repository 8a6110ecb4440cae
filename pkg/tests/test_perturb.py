import random
from fractions import Fraction

import pytest

from novbar.barcode import BarSpectrum, beta_total, rank_over_fraction_field, spectrum
from novbar.complex import ChainMap, ComplexError, direct_sum, elementary_pair, make_complex, zero_complex
from novbar.generate import (
    GeneratorConfig,
    generate,
    majorization_scenario,
    null_homotopic_map,
    perturbation_instance,
    pipeline_scenario,
)
from novbar.matrix import Matrix
from novbar.metrics import spectra_close, verify_certificate
from novbar.perturb import (
    HypothesisError,
    PipelineScenario,
    SplitDifferential,
    check_cone_bound,
    check_majorization,
    check_perturbation,
    cone,
    perturb,
    scaling_pipeline,
)
from novbar.scalars import GroundField

F = Fraction
Q = GroundField.rationals()


def two_v2_blocks(field, extra: dict):
    """Two copies of d(zeta) = T^(1/10) eta; basis eta0, zeta0, eta1, zeta1."""
    entries = {(0, 1): "T^(1/10)", (2, 3): "T^(1/10)"}
    entries.update(extra)
    c = make_complex(field, [("eta0", 0), ("zeta0", 1), ("eta1", 0), ("zeta1", 1)], entries)
    return SplitDifferential.from_blocks(c, [[0, 1], [2, 3]], 1)


def test_split_differential_data():
    s = two_v2_blocks(Q, {(2, 1): "3*T^(2)"})
    assert s.delta0 == F(1, 10)
    assert s.D[2, 1] == Q.monomial(3, 1)
    assert s.d_loc.nnz() == 2


def test_split_rejects_low_off_block_entry():
    c = make_complex(Q, [("a", 0), ("b", 1)], {(0, 1): "T^(1/2)"})
    with pytest.raises(HypothesisError):
        SplitDifferential.from_blocks(c, [[0], [1]], 1)
    with pytest.raises(ComplexError):
        SplitDifferential.from_blocks(c, [[0]], 1)


def test_perturb_rejects_eps_below_delta():
    c = make_complex(Q, [("a", 0), ("b", 1)], {(0, 1): "T^(2)"})
    s = SplitDifferential.from_blocks(c, [[0, 1]], 1)
    with pytest.raises(HypothesisError):
        perturb(s, 10)


def test_perturb_with_zero_D():
    c = direct_sum(elementary_pair(Q, F(1, 4)), zero_complex(Q, 2))
    s = SplitDifferential.from_blocks(c, [[0, 1], [2, 3]], 1)
    out = perturb(s, 10)
    assert out.exact and out.X.rank == 2 and out.d_phi.is_zero()
    assert verify_certificate(out.certificate).ok


def test_perturb_torsion_free_blocks():
    c = make_complex(Q, [("a", 0), ("b", 1), ("c", 1)], {(0, 1): "T^(3)", (0, 2): "2*T^(5/2)"})
    s = SplitDifferential.from_blocks(c, [[0], [1], [2]], 1)
    out = perturb(s, 10)
    assert out.exact and out.terms == 1
    assert out.d_phi == c.diff
    assert spectrum(out.X) == spectrum(c)
    assert verify_certificate(out.certificate).ok


def test_perturb_two_v2_blocks():
    s = two_v2_blocks(Q, {(2, 1): "T^(1)"})
    out = perturb(s, 10)
    assert out.exact
    full, small = spectrum(s.complex), spectrum(out.X)
    assert full == BarSpectrum(0, (F(1, 10), F(1, 10)))
    # no local homology: X is zero and both bars are short enough to vanish
    assert out.X.rank == 0 and small == BarSpectrum(0, ())
    assert spectra_close(full, small, s.delta0)
    assert verify_certificate(out.certificate).ok


def test_perturb_invariants_on_instances():
    for seed in range(10):
        inst = perturbation_instance(seed, Q)
        s = SplitDifferential.from_blocks(inst.complex, inst.blocks, inst.eps0)
        out = perturb(s, 10 * inst.eps0)
        assert out.exact
        n = out.X.rank
        assert out.pi_bar.matrix @ out.iota_bar.matrix == Matrix.identity(Q, n)
        d = s.complex.diff
        lhs = out.iota_bar.matrix @ out.pi_bar.matrix - Matrix.identity(Q, s.complex.rank)
        assert lhs == d @ out.theta_bar + out.theta_bar @ d
        assert (out.d_phi @ out.d_phi).is_zero()
        # homology over the fraction field is preserved
        assert n - 2 * rank_over_fraction_field(out.d_phi) == spectrum(s.complex).B
        assert check_perturbation(s, 10 * inst.eps0).ok


def test_cone_examples():
    g = generate(GeneratorConfig(seed=1, field=Q, rank=4))
    c = g.complex
    z = Matrix.zeros(Q, 4)
    s0 = spectrum(cone(ChainMap(c, c, z)))
    assert s0.torsion == tuple(sorted(g.truth.torsion * 2)) and s0.B == 2 * g.truth.B
    ident = Matrix.identity(Q, 4)
    si = spectrum(cone(ChainMap(c, c, ident)))
    assert si.B == 0 and set(si.torsion) == {0}
    gamma = F(2, 3)
    zc = zero_complex(Q, 3)
    sg = spectrum(cone(ChainMap(zc, zc, Matrix.identity(Q, 3).scale(Q.T(gamma)))))
    assert sg == BarSpectrum(0, (gamma,) * 3)


def test_cone_rejects_non_chain_map():
    c = elementary_pair(Q, 1)
    S = Matrix.zeros(Q, 2)
    S[0, 0] = Q.one()
    with pytest.raises(ComplexError):
        cone(ChainMap(c, c, S))


def test_cone_bound_examples():
    c = generate(GeneratorConfig(seed=5, field=Q, rank=5, B=1)).complex
    rep = check_cone_bound(ChainMap(c, c, Matrix.zeros(Q, 5)))
    assert rep.ok and rep.equality
    rep = check_cone_bound(ChainMap(c, c, Matrix.identity(Q, 5)))
    assert not rep.ok and not rep.hypothesis_met and "hypothesis not met" in rep.message
    for seed in range(10):
        g = generate(GeneratorConfig(seed=seed, field=Q, rank=1 + seed % 6))
        S, R, gamma = null_homotopic_map(g.complex, random.Random(seed))
        d = g.complex.diff
        assert S == (d @ R + R @ d).scale(Q.T(gamma))
        rep = check_cone_bound(ChainMap(g.complex, g.complex, S))
        assert rep.ok and rep.beta_cone <= 2 * rep.beta_c


def test_majorization_examples():
    fp = GroundField.prime(3)
    fu = GroundField.prime_with_u(3)
    v2 = elementary_pair(fp, 1)
    rep = check_majorization(v2, Matrix.zeros(fu, 2))
    assert rep.ok and rep.original == rep.deformed
    D = Matrix.zeros(fu, 2)
    D[0, 1] = fu.one()
    rep = check_majorization(v2, D)
    assert rep.ok and rep.deformed.torsion == (0,) and rep.deformed_sums == [0] and rep.original_sums == [1]
    assert rep.strict


def test_majorization_hypothesis_failures():
    fu = GroundField.prime_with_u(2)
    c0 = zero_complex(GroundField.prime(2), 2)
    D = Matrix.zeros(fu, 2)
    D[0, 1] = fu.one()
    rep = check_majorization(c0, D)  # homology drops from 2 to 0
    assert not rep.ok and not rep.hypothesis_met
    D[0, 1] = fu.u().inverse()
    rep = check_majorization(c0, D)
    assert not rep.hypothesis_met and "u=0" in rep.message


def test_majorization_scenarios():
    strict = 0
    for seed in range(20):
        sc = majorization_scenario(seed, (2, 3, 5)[seed % 3])
        rep = check_majorization(sc.c0, sc.D)
        assert rep.ok, rep.message
        assert rep.deformed_sums[-1] <= rep.original_sums[-1]
        strict += rep.strict
    assert strict > 0


def test_pipeline_trivial_scenario():
    p = 2
    c = elementary_pair(GroundField.prime(p), F(1, 2))
    Cp = elementary_pair(GroundField.prime(p), 1)
    fu = GroundField.prime_with_u(p)
    sc = PipelineScenario(Cp, Matrix.zeros(GroundField.prime(p), 2), Matrix.zeros(fu, 4))
    rep = scaling_pipeline(c, p, sc)
    assert rep.ok
    assert [s.name for s in rep.steps] == ["quasi-Frobenius", "identification", "majorization", "cone bound", "conclusion"]
    assert all(s.lhs == s.rhs for s in rep.steps)


@pytest.mark.parametrize("p", [2, 3])
def test_pipeline_random(p):
    for seed in range(4):
        g = generate(GeneratorConfig(seed=seed, field=GroundField.prime(p), rank=1 + seed % 3))
        rep = scaling_pipeline(g.complex, p, pipeline_scenario(g.complex, p, seed))
        assert rep.ok, rep.to_dict()
        last = rep.steps[-1]
        assert last.lhs == p * beta_total(g.truth) and last.lhs <= last.rhs


def test_pipeline_reports_failing_step():
    p = 2
    c = elementary_pair(GroundField.prime(p), F(1, 2))
    Cp = elementary_pair(GroundField.prime(p), 2)  # wrong Tate identification
    fu = GroundField.prime_with_u(p)
    rep = scaling_pipeline(c, p, PipelineScenario(Cp, Matrix.zeros(GroundField.prime(p), 2), Matrix.zeros(fu, 4)))
    assert not rep.ok and rep.failed_step == "identification"
