"""Seeded verification suites producing stable, machine-readable reports."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Optional

from .barcode import beta_total, minors_oracle, spectrum
from .complex import ChainMap, FilteredComplex, reduce_complex_mod_p
from .equivariant import verify_quasi_frobenius
from .generate import (
    GeneratorConfig,
    digest,
    generate,
    majorization_scenario,
    modp_witness,
    null_homotopic_map,
    perturbation_instance,
    pipeline_scenario,
)
from .metrics import canonical_scaling_certificate, spectra_close, verify_certificate
from .perturb import SplitDifferential, check_cone_bound, check_majorization, check_perturbation, scaling_pipeline
from .scalars import GroundField, ReductionError

SUITES = ("barcode-oracle", "stability", "tate", "majorization", "cone", "pipeline", "modp", "perturb")

FIELDS = (
    GroundField.rationals(),
    GroundField.prime(2),
    GroundField.prime(3),
    GroundField.prime(5),
)

PRIMES_UP_TO_50 = [p for p in range(2, 51) if all(p % q for q in range(2, p))]


@dataclass
class SuiteEntry:
    check: str
    digest: str
    ok: bool
    values: dict = dc_field(default_factory=dict)
    invariant: str = ""
    instance: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {"check": self.check, "digest": self.digest, "pass": self.ok, "values": self.values}
        if not self.ok:
            out["invariant"] = self.invariant
            out["instance"] = self.instance
        return out


@dataclass
class SuiteReport:
    name: str
    seed: int
    count: int
    entries: list[SuiteEntry]

    @property
    def failures(self) -> int:
        return sum(not e.ok for e in self.entries)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        entries = sorted(self.entries, key=lambda e: (e.digest, e.check))
        return {
            "suite": self.name,
            "seed": self.seed,
            "count": self.count,
            "summary": {"total": len(entries), "passed": len(entries) - self.failures, "failed": self.failures},
            "entries": [e.to_dict() for e in entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, ensure_ascii=False)


def _fs(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def instance_seeds(seed: int, count: int) -> list[int]:
    rng = random.Random(seed)
    return [rng.getrandbits(63) for _ in range(count)]


# ---------------------------------------------------------------------------


def _barcode_oracle(k: int, s: int) -> list[SuiteEntry]:
    f = FIELDS[k % len(FIELDS)]
    g = generate(GeneratorConfig(seed=s, field=f, rank=1 + k % 6, raw=k % 3 == 0))
    a, b = spectrum(g.complex), minors_oracle(g.complex)
    ok = a == b == g.truth
    return [
        SuiteEntry(
            "spectrum == minors_oracle",
            g.digest,
            ok,
            {"field": str(f), "spectrum": a.to_dict(), "oracle": b.to_dict(), "truth": g.truth.to_dict()},
            "barcode: spectrum agrees with minors_oracle and N = B + 2K",
            g.complex.to_json_obj(),
        )
    ]


STABILITY_DELTAS = (Fraction(1, 4), Fraction(1, 3), Fraction(1))


def _stability(k: int, s: int) -> list[SuiteEntry]:
    f = FIELDS[k % len(FIELDS)]
    g = generate(GeneratorConfig(seed=s, field=f, rank=1 + k % 6))
    out = []
    s1 = spectrum(g.complex)
    for delta in STABILITY_DELTAS:
        cert = canonical_scaling_certificate(g.complex, delta)
        rep = verify_certificate(cert)
        s2 = spectrum(cert.target)
        close = spectra_close(s1, s2, delta)
        out.append(
            SuiteEntry(
                f"certificate and 2δ-closeness at δ={_fs(delta)}",
                g.digest,
                rep.ok and close,
                {"delta": _fs(delta), "spectrum": s1.to_dict(), "scaled": s2.to_dict(), "failures": rep.failures},
                "metrics: canonical certificate verifies and spectra are 2δ-close",
                g.complex.to_json_obj(),
            )
        )
    return out


TATE_CASES = [(r, 2) for r in range(1, 5)] + [(r, 3) for r in range(1, 4)] + [(r, 5) for r in range(1, 3)]


def _tate(k: int, s: int) -> list[SuiteEntry]:
    rank, p = TATE_CASES[k % len(TATE_CASES)]
    g = generate(GeneratorConfig(seed=s, field=GroundField.prime(p), rank=rank))
    res = verify_quasi_frobenius(g.complex, p)
    return [
        SuiteEntry(
            f"quasi-Frobenius p={p} rank={rank}",
            g.digest,
            res.ok,
            res.to_dict(),
            "equivariant: Tate spectrum is the doubled p-scaled spectrum",
            g.complex.to_json_obj(),
        )
    ]


def _majorization(k: int, s: int) -> list[SuiteEntry]:
    p = (2, 3, 5)[k % 3]
    sc = majorization_scenario(s, p)
    rep = check_majorization(sc.c0, sc.D)
    return [
        SuiteEntry(
            "deformation majorization",
            digest(sc.c0),
            rep.ok,
            {
                "p": p,
                "original": [_fs(x) for x in rep.original_sums],
                "deformed": [_fs(x) for x in rep.deformed_sums],
                "strict": rep.strict,
                "message": rep.message,
            },
            "perturb: partial sums of the deformed spectrum are dominated",
            sc.c0.to_json_obj(),
        )
    ]


def _cone(k: int, s: int) -> list[SuiteEntry]:
    f = FIELDS[k % len(FIELDS)]
    g = generate(GeneratorConfig(seed=s, field=f, rank=1 + k % 6))
    zero = k % 5 == 0
    S, _, gamma = null_homotopic_map(g.complex, random.Random(s), zero=zero)
    rep = check_cone_bound(ChainMap(g.complex, g.complex, S))
    ok = rep.ok and (not zero or rep.equality)
    return [
        SuiteEntry(
            "cone bound" + (" (S = 0, equality)" if zero else ""),
            g.digest,
            ok,
            {"beta_cone": _fs(rep.beta_cone or 0), "beta_c": _fs(rep.beta_c or 0), "gamma": _fs(gamma)},
            "perturb: beta_tot(Cone(S)) <= 2 beta_tot(C)",
            g.complex.to_json_obj(),
        )
    ]


def _pipeline(k: int, s: int) -> list[SuiteEntry]:
    p = 2 if k % 3 else 3
    rank = 1 + k % (4 if p == 2 else 3)
    g = generate(GeneratorConfig(seed=s, field=GroundField.prime(p), rank=rank))
    sc = pipeline_scenario(g.complex, p, s)
    rep = scaling_pipeline(g.complex, p, sc)
    return [
        SuiteEntry(
            f"scaling pipeline p={p}",
            g.digest,
            rep.ok,
            rep.to_dict(),
            "perturb: p*beta_tot(c) <= beta_tot(Cp) through every logged step",
            g.complex.to_json_obj(),
        )
    ]


def modp_primes(coefficients) -> list[int]:
    """Primes up to 50 that divide no recorded pivot coefficient."""
    out = []
    for p in PRIMES_UP_TO_50:
        if all(Fraction(c).numerator % p for c in coefficients):
            out.append(p)
    return out


def _modp(k: int, s: int) -> list[SuiteEntry]:
    g = generate(GeneratorConfig(seed=s, field=GroundField.rationals(), rank=1 + k % 6, integer=True))
    sq = spectrum(g.complex)
    bad = []
    primes = modp_primes(g.pivot_coefficients)
    for p in primes:
        try:
            sp = spectrum(reduce_complex_mod_p(g.complex, p))
        except ReductionError as exc:
            bad.append(f"p={p}: {exc}")
            continue
        if sp != sq:
            bad.append(f"p={p}: {sp} != {sq}")
    return [
        SuiteEntry(
            "spectrum over Q equals spectrum over F_p",
            g.digest,
            not bad,
            {"spectrum": sq.to_dict(), "primes": primes, "mismatches": bad},
            "cli/modp: reduction mod p preserves spectra away from pivot primes",
            g.complex.to_json_obj(),
        )
    ]


def modp_witness_entry() -> SuiteEntry:
    w = modp_witness()
    sq = spectrum(w)
    s2 = spectrum(reduce_complex_mod_p(w, 2))
    expected = sq.torsion == (Fraction(1, 2),) and s2.B == 2 and not s2.torsion
    return SuiteEntry(
        "witness 2T^(1/2): expected difference at p=2",
        digest(w),
        expected,
        {"Q": sq.to_dict(), "F_2": s2.to_dict(), "status": "expected-difference"},
        "cli/modp: characteristic 2 kills the coefficient 2",
        w.to_json_obj(),
    )


def _perturb(k: int, s: int) -> list[SuiteEntry]:
    f = FIELDS[k % len(FIELDS)]
    inst = perturbation_instance(s, f)
    sd = SplitDifferential.from_blocks(inst.complex, inst.blocks, inst.eps0)
    rep = check_perturbation(sd, 10 * inst.eps0)
    return [
        SuiteEntry(
            "perturbation certificate and spectra",
            digest(inst.complex),
            rep.ok,
            {
                "eps0": _fs(inst.eps0),
                "delta0": _fs(sd.delta0),
                "full": rep.full.to_dict(),
                "transferred": rep.transferred.to_dict(),
                "messages": rep.messages,
            },
            "perturb: transferred complex is δ0-quasi-equivalent",
            inst.complex.to_json_obj(),
        )
    ]


RUNNERS: dict[str, Callable[[int, int], list[SuiteEntry]]] = {
    "barcode-oracle": _barcode_oracle,
    "stability": _stability,
    "tate": _tate,
    "majorization": _majorization,
    "cone": _cone,
    "pipeline": _pipeline,
    "modp": _modp,
    "perturb": _perturb,
}


def run_suite(name: str, seed: int = 0, count: int = 10) -> SuiteReport:
    if name not in RUNNERS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    runner = RUNNERS[name]
    entries: list[SuiteEntry] = []
    for k, s in enumerate(instance_seeds(seed, count)):
        entries += runner(k, s)
    if name == "modp":
        entries.append(modp_witness_entry())
    return SuiteReport(name, seed, count, entries)
