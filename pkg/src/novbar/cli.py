"""Command-line interface: ``novbar <command> ...``.

Exit codes: 0 pass, 1 check failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from .barcode import minors_oracle, spectrum
from .complex import ChainMap, ComplexError, FilteredComplex, SizeCapError
from .equivariant import verify_quasi_frobenius
from .generate import GeneratorConfig, generate, null_homotopic_map, pipeline_scenario
from .matrix import Matrix
from .metrics import Barcode, barcode_from_spectrum, bottleneck, shift_quotient_distance
from .perturb import (
    HypothesisError,
    SplitDifferential,
    check_cone_bound,
    cone,
    perturb,
    scaling_pipeline,
)
from .scalars import INF, ParseError, format_scalar, parse_field, parse_scalar
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, ensure_ascii=False))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_complex(path: str) -> FilteredComplex:
    try:
        return FilteredComplex.from_json(_read(path))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _load_matrix(path: str, c: FilteredComplex) -> Matrix:
    """Map file: {"matrix": {"(i,j)": scalar}} on the basis of ``c``."""
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    entries = obj.get("matrix", obj) if isinstance(obj, dict) else None
    if not isinstance(entries, dict):
        raise ParseError(f"{path}: expected an object of '(i,j)' entries")
    m = Matrix(c.field, c.rank, c.rank)
    for key, text in entries.items():
        try:
            i, j = (int(s) for s in key.strip().strip("()").split(","))
            m[i, j] = parse_scalar(text, c.field)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}: entry {key}: {exc}") from exc
    return m


def _fs(x) -> str:
    if x == INF:
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    c = _load_complex(args.input)
    rep = c.validate()
    _emit(rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_barcode(args) -> int:
    c = _load_complex(args.input)
    rep = c.validate()
    if not rep.ok:
        _emit({"error": "invalid complex", "messages": rep.messages})
        return EXIT_FAIL
    s = minors_oracle(c) if args.oracle else spectrum(c)
    if args.concise:
        s = s.to_concise()
    out = s.to_dict()
    if args.bars:
        out["barcode"] = barcode_from_spectrum(s).to_json_obj()
    _emit(out)
    return EXIT_OK


def cmd_bottleneck(args) -> int:
    a = Barcode.from_json(_read(args.a))
    b = Barcode.from_json(_read(args.b))
    d = shift_quotient_distance(a, b) if args.shift_quotient else bottleneck(a, b)
    print(_fs(d))
    return EXIT_OK


def cmd_tate(args) -> int:
    c = _load_complex(args.input)
    p = args.p
    if c.field.kind == "Q":
        from .complex import reduce_complex_mod_p

        c = reduce_complex_mod_p(c, p)
    res = verify_quasi_frobenius(c, p, cap=args.max_rank)
    out = res.to_dict()
    if not args.verify:
        out.pop("pass")
    _emit(out)
    return EXIT_FAIL if args.verify and not res.ok else EXIT_OK


def _load_blocks(path: str) -> list[list[int]]:
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    blocks = obj.get("blocks") if isinstance(obj, dict) else obj
    if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
        raise ParseError(f"{path}: expected a list of index lists (or {{\"blocks\": [...]}})")
    return [[int(i) for i in b] for b in blocks]


def cmd_perturb(args) -> int:
    c = _load_complex(args.input)
    blocks = _load_blocks(args.split)
    sd = SplitDifferential.from_blocks(c, blocks, Fraction(args.eps))
    out = perturb(sd, Fraction(args.trunc))
    from .metrics import spectra_close, verify_certificate

    full = spectrum(sd.complex)
    small = spectrum(out.X)
    cert = verify_certificate(out.certificate) if out.exact else None
    close = spectra_close(full, small, sd.delta0)
    _emit(
        {
            "status": out.status,
            "terms": out.terms,
            "eps0": _fs(sd.eps0),
            "delta0": _fs(sd.delta0),
            "spectrum": full.to_dict(),
            "transferred": small.to_dict(),
            "spectra_close": close,
            "certificate": None if cert is None else {"pass": cert.ok, "failures": cert.failures},
            "X": out.X.to_json_obj(),
        }
    )
    ok = close and (cert is None or cert.ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cone(args) -> int:
    c = _load_complex(args.input).orthonormalize()
    if args.map:
        S = _load_matrix(args.map, c)
    else:
        S, _, _ = null_homotopic_map(c, random.Random(args.seed), zero=args.zero)
    try:
        cc = cone(S, c)
    except ComplexError as exc:
        _emit({"error": str(exc)})
        return EXIT_FAIL
    rep = check_cone_bound(ChainMap(c, c, S))
    _emit(
        {
            "cone_spectrum": spectrum(cc).to_dict(),
            "hypothesis_met": rep.hypothesis_met,
            "pass": rep.ok,
            "message": rep.message,
        }
    )
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_pipeline(args) -> int:
    c = _load_complex(args.input)
    p = args.p
    if c.field.kind == "Q":
        from .complex import reduce_complex_mod_p

        c = reduce_complex_mod_p(c, p)
    sc = pipeline_scenario(c, p, args.seed)
    rep = scaling_pipeline(c, p, sc)
    _emit(rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_gen(args) -> int:
    field = parse_field(args.field)
    try:
        cfg = GeneratorConfig(
            seed=args.seed,
            field=field,
            rank=args.rank,
            B=args.B,
            strictness=Fraction(args.strictness),
            den_bound=args.den,
            density=Fraction(args.density),
            raw=args.raw,
            integer=args.integer,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    g = generate(cfg)
    obj = g.complex.to_json_obj()
    obj["ground_truth"] = g.truth.to_dict()
    text = json.dumps(obj, indent=1, ensure_ascii=False) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_suite(args) -> int:
    rep = run_suite(args.name, args.seed, args.count)
    text = rep.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
        summary = rep.to_dict()["summary"]
        print(json.dumps({"suite": args.name, **summary}))
    else:
        print(text)
    return EXIT_OK if rep.ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="novbar", description="Bar-length spectra over Novikov rings.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check d^2 = 0, degrees and filtration")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("barcode", help="bar-length spectrum of a complex")
    p.add_argument("--input", required=True)
    p.add_argument("--concise", action="store_true", help="drop zero-length entries")
    p.add_argument("--oracle", action="store_true", help="use the minors oracle")
    p.add_argument("--bars", action="store_true", help="also print the barcode")
    p.set_defaults(func=cmd_barcode)

    p = sub.add_parser("bottleneck", help="bottleneck distance between two barcode files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--shift-quotient", action="store_true", help="minimize over uniform shifts")
    p.set_defaults(func=cmd_bottleneck)

    p = sub.add_parser("tate", help="Tate complex spectrum and quasi-Frobenius check")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--max-rank", type=int, default=None)
    p.set_defaults(func=cmd_tate)

    p = sub.add_parser("perturb", help="transfer a split differential to local homology")
    p.add_argument("--input", required=True)
    p.add_argument("--split", required=True, help="JSON list of basis index blocks")
    p.add_argument("--eps", required=True)
    p.add_argument("--trunc", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("cone", help="cone of a chain map and the cone bound")
    p.add_argument("--input", required=True)
    p.add_argument("--map", help="JSON file with the matrix of S")
    p.add_argument("--seed", type=int, default=0, help="seed for a null-homotopic S when --map is absent")
    p.add_argument("--zero", action="store_true", help="use S = 0 when --map is absent")
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("pipeline", help="end-to-end scaling pipeline on a generated scenario")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gen", help="seeded random complex with recorded ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--field", default="Q", help="Q, F_p or F_p(u)")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--strictness", default="1/4")
    p.add_argument("--den", type=int, default=4)
    p.add_argument("--density", default="1/2")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--integer", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("suite", help="run a seeded verification suite")
    p.add_argument("name", choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--output")
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ComplexError, SizeCapError, HypothesisError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
