"""
cli.py

Batch front end. Answers go to stdout, logs to stderr.

    python -m c2spectra.cli compile  -f phi.c2 --stage preb [--emit smtlib]
    python -m c2spectra.cli spectrum member  -f phi.c2 -n 5
    python -m c2spectra.cli spectrum enum    -f phi.c2 --max 40 [--jobs 4]
    python -m c2spectra.cli spectrum witness -f phi.c2 -n 5 [-o model.txt]
    python -m c2spectra.cli spectrum image   -f phi.c2 --preds P --values 1
    python -m c2spectra.cli graph bireg   --C 2 --D 2 --sizes 10,10 [--complete] [-o g.txt]
    python -m c2spectra.cli graph digraph --C 1 --D 1 --sizes 5
    python -m c2spectra.cli verify [--suite all]
    python -m c2spectra.cli dump-types -f phi.c2

Exit codes:
    0  answered            1  negative answer with --fail-on-false
    2  usage / input       3  budget exceeded       4  internal inconsistency
"""

import argparse
import itertools
import json
import random
import sys
import structlog
from typing import Optional, Sequence

import logger_setup
from c2spectra import presburger as pb
from c2spectra.biregular import construct_biregular, exists_simple_biregular
from c2spectra.config import Settings, get_settings, load_settings, set_settings
from c2spectra.errors import InternalInconsistency, SpectraError
from c2spectra.logic_core import parse_document, print_c2, print_qmlc
from c2spectra.normalize import completize, push_negations, to_normal_form, to_qmlc
from c2spectra.oracle import oracle_biregular, oracle_digraph, oracle_presburger, oracle_spectrum
from c2spectra.regdigraph import build_comp_reg_formula, build_reg_formula, construct_regular_digraph
from c2spectra.spectrum import (
    build_preb, compile_sentence, image_member, spectrum_enumerate, spectrum_member, witness_model,
)
from c2spectra.structures import dump_structure
from c2spectra.typesys import DegreeMatrix, EN, TypeTable

logger = structlog.get_logger(__name__)

JSON_SCHEMA = 1

# Small regression sentences for `verify --suite spectrum`
VERIFY_SENTENCES = {
    "exactly-one-P": "unary: P; binary: ; E x^1 (P(x)) & ~E x^2 (P(x))",
    "no-P":          "unary: P; binary: ; ~E x^1 (P(x))",
    "contradiction": "unary: P; binary: ; E x^1 (P(x) & ~P(x))",
    "out-one":       "unary: ; binary: R; ~E x^1 (~(E y^1 (R(x,y)) & ~E y^2 (R(x,y))))",
    "in-out":        "unary: ; binary: R; ~E x^1 (~(E y^1 (R(x,y)) & ~E y^2 (R(x,y)) & E y^1 (R(y,x)) & ~E y^2 (R(y,x))))",
}


#  Input helpers

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ints(text: str) -> list:
    return [int(tok) for tok in text.split(",") if tok.strip()] if text else []


def _emit(args, query: str, answer, text: Optional[str] = None, **extra):
    """Print the answer as plain text or inside the versioned JSON envelope."""
    if args.json:
        payload = {"schema": JSON_SCHEMA, "query": query, "answer": answer, **extra}
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        if text is None:
            text = json.dumps(answer) if not isinstance(answer, str) else answer
        sys.stdout.write(text.rstrip("\n") + "\n")
    if args.fail_on_false and answer is False:
        return 1
    return 0


#  compile / dump-types

def cmd_compile(args, settings: Settings) -> int:
    doc = parse_document(_read(args.file))
    if doc.kind == "qmlc":
        qmlc, sig = push_negations(doc.formula), doc.sig
        if args.stage != "preb":
            return _emit(args, f"compile:{args.stage}", print_qmlc(qmlc))
    else:
        completed_phi, completed = completize(doc.formula, doc.sig)
        if args.stage == "completize":
            return _emit(args, "compile:completize", print_c2(completed_phi),
                         text=completed.sig.header() + "\n" + print_c2(completed_phi))
        normal = to_normal_form(completed_phi, completed.sig)
        if args.stage == "normal":
            return _emit(args, "compile:normal", print_c2(normal))
        qmlc, sig = push_negations(to_qmlc(normal)), completed.sig
        if args.stage == "qmlc":
            return _emit(args, "compile:qmlc", print_qmlc(qmlc))

    preb, _ = build_preb(qmlc, sig, None, settings)
    body = pb.to_smtlib(preb, settings) if args.emit == "smtlib" else pb.to_text(preb, settings)
    return _emit(args, "compile:preb", body, size=pb.formula_size(preb, settings))


def cmd_dump_types(args, settings: Settings) -> int:
    doc = parse_document(_read(args.file))
    if doc.kind == "qmlc":
        table = TypeTable.build(push_negations(doc.formula), doc.sig, (), settings)
    else:
        table = compile_sentence(doc.formula, doc.sig, settings).table
    return _emit(args, "dump-types", table.dump(), types=len(table.types))


#  spectrum

def _c2_document(args):
    doc = parse_document(_read(args.file))
    if doc.kind != "c2":
        raise SpectraError("spectrum queries take a C² sentence")
    return doc


def cmd_spectrum(args, settings: Settings) -> int:
    doc = _c2_document(args)
    if args.query == "member":
        answer = spectrum_member(doc.formula, doc.sig, args.n, settings)
        return _emit(args, "spectrum:member", answer, n=args.n)

    if args.query == "enum":
        bits, result = spectrum_enumerate(doc.formula, doc.sig, args.max, args.window, settings, args.jobs)
        members = [n for n, bit in enumerate(bits) if bit]
        semilinear = None if result is pb.INCONCLUSIVE else [list(p) for p in result.pairs]
        text = f"members: {members}\nsemilinear: {'inconclusive' if semilinear is None else result.text()}"
        return _emit(args, "spectrum:enum", members, text=text, semilinear=semilinear)

    if args.query == "witness":
        model = witness_model(doc.formula, doc.sig, args.n, settings)
        dump = dump_structure(model, [f"model of size {args.n}"])
        if args.output:
            _write(dump, args.output)
            return _emit(args, "spectrum:witness", True, text=f"written {args.output}", witness_path=args.output)
        if args.json:
            return _emit(args, "spectrum:witness", True, witness=dump)
        _write(dump, None)
        return 0

    predicates = [p.strip() for p in args.preds.split(",") if p.strip()]
    answer = image_member(doc.formula, doc.sig, predicates, _ints(args.values), settings)
    return _emit(args, "spectrum:image", answer, predicates=predicates, values=_ints(args.values))


#  graph

def cmd_graph(args, settings: Settings) -> int:
    C, D = DegreeMatrix.parse(args.C), DegreeMatrix.parse(args.D)
    sizes = _ints(args.sizes)
    if args.kind == "bireg":
        if len(sizes) != C.cols + D.cols:
            raise SpectraError(f"--sizes needs {C.cols} left and {D.cols} right sizes")
        graph = construct_biregular(C, D, sizes[:C.cols], sizes[C.cols:], args.complete, settings)
    else:
        graph = construct_regular_digraph(C, D, sizes, args.complete, settings)
    dump = dump_structure(graph.to_structure(), graph.comments())
    if args.output:
        _write(dump, args.output)
        return _emit(args, f"graph:{args.kind}", True, text=f"written {args.output}", witness_path=args.output)
    if args.json:
        return _emit(args, f"graph:{args.kind}", True, witness=dump)
    _write(dump, None)
    return 0


#  verify

def _verify_presburger(settings: Settings, rng: random.Random) -> tuple:
    checked, mismatches = 0, []
    names = ["a", "b", "c"]
    for case in range(60):
        atoms = []
        for _ in range(rng.randint(1, 3)):
            left = pb.LinearTerm.build(rng.randint(0, 3), {v: rng.randint(0, 3) for v in rng.sample(names, 2)})
            right = pb.LinearTerm.build(rng.randint(0, 5), {rng.choice(names): rng.randint(0, 2)})
            atoms.append(pb.Atom(left, rng.choice(pb.OPS), right))
        split = rng.randint(1, len(atoms))
        branches = [pb.pconj(*atoms[:split])] + ([pb.pconj(*atoms[split:])] if atoms[split:] else [])
        psi = pb.Exists(("b", "c"), pb.pconj(pb.le("b", 12), pb.le("c", 12), pb.pdisj(*branches)))
        for a in range(16):
            got = pb.evaluate(psi, {"a": a}, settings)
            want = oracle_presburger(psi, {"a": a}, var_cap=12)
            checked += 1
            if got != want:
                mismatches.append(f"case {case} a={a}: solver {got}, sweep {want}")
    return checked, mismatches


def _verify_bireg(settings: Settings) -> tuple:
    checked, mismatches = 0, []
    entries = [EN(v) for v in range(3)] + [EN(v, True) for v in range(3)]
    for c, d in itertools.product(entries, repeat=2):
        for M, N in itertools.product(range(6), repeat=2):
            if M + N > settings.oracle_graph_cap:
                continue
            C, D = DegreeMatrix.of([[c]]), DegreeMatrix.of([[d]])
            got = exists_simple_biregular(c, d, M, N)
            want = oracle_biregular(C, D, (M,), (N,), settings=settings).answer
            checked += 1
            if got != want:
                mismatches.append(f"c={c} d={d} M={M} N={N}: closed form {got}, oracle {want}")
    return checked, mismatches


def _verify_digraph(settings: Settings) -> tuple:
    checked, mismatches = 0, []
    entries = [EN(v) for v in range(3)] + [EN(v, True) for v in range(2)]
    for c, d in itertools.product(entries, repeat=2):
        C, D = DegreeMatrix.of([[c]]), DegreeMatrix.of([[d]])
        for complete in (False, True):
            build = build_comp_reg_formula if complete else build_reg_formula
            psi = build(C, D, ["N"], settings)
            for n in range(8):
                got = pb.evaluate(psi, {"N": n}, settings)
                want = oracle_digraph(C, D, (n,), complete=complete, settings=settings).answer
                checked += 1
                if got != want:
                    mismatches.append(f"C={c} D={d} N={n} complete={complete}: formula {got}, oracle {want}")
    return checked, mismatches


def _verify_spectrum(settings: Settings) -> tuple:
    checked, mismatches = 0, []
    strict = settings.replace(oracle_fallback=False)
    for name, text in VERIFY_SENTENCES.items():
        doc = parse_document(text)
        for n in range(5):
            got = spectrum_member(doc.formula, doc.sig, n, strict)
            want = oracle_spectrum(doc.formula, doc.sig, n, settings).answer
            checked += 1
            if got != want:
                mismatches.append(f"{name} n={n}: pipeline {got}, oracle {want}")
    return checked, mismatches


def cmd_verify(args, settings: Settings) -> int:
    suites = ["presburger", "bireg", "digraph", "spectrum"] if args.suite == "all" else [args.suite]
    rng = random.Random(args.seed)
    report, failed = {}, []
    for suite in suites:
        if suite == "presburger":
            checked, mismatches = _verify_presburger(settings, rng)
        elif suite == "bireg":
            checked, mismatches = _verify_bireg(settings)
        elif suite == "digraph":
            checked, mismatches = _verify_digraph(settings)
        else:
            checked, mismatches = _verify_spectrum(settings)
        logger.info("[CLI] Verification suite finished", suite=suite, checked=checked, mismatches=len(mismatches))
        report[suite] = {"checked": checked, "mismatches": mismatches}
        failed += mismatches
    lines = [f"{suite}: {r['checked']} checked, {len(r['mismatches'])} mismatches" for suite, r in report.items()]
    lines += [f"  {m}" for m in failed[:20]]
    _emit(args, "verify", not failed, text="\n".join(lines), suites=report)
    if failed:
        raise InternalInconsistency(f"{len(failed)} mismatches against the oracles")
    return 0


#  Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="c2spectra", description="Finite spectra of two-variable logic with counting")
    parser.add_argument("--config", help="key=value budget file (default: spectra.env)")
    parser.add_argument("--json", action="store_true", help="wrap answers in a JSON envelope")
    parser.add_argument("--fail-on-false", action="store_true", help="exit 1 on a negative answer")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO")
    parser.add_argument("--debug", action="store_true", help="log at DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="show an intermediate stage")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("--stage", choices=["completize", "normal", "qmlc", "preb"], default="preb")
    p.add_argument("--emit", choices=["text", "smtlib"], default="text")

    p = sub.add_parser("dump-types", help="print the type table")
    p.add_argument("-f", "--file", required=True)

    p = sub.add_parser("spectrum", help="spectrum queries")
    p.add_argument("query", choices=["member", "enum", "witness", "image"])
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=0, help="structure size (member, witness)")
    p.add_argument("--max", type=int, default=20, help="largest size scanned (enum)")
    p.add_argument("--window", type=int, default=None, help="positions a period must be verified on (enum)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for enum")
    p.add_argument("--preds", default="", help="comma-separated unary predicates (image)")
    p.add_argument("--values", default="", help="comma-separated cardinalities (image)")
    p.add_argument("-o", "--output", help="write the witness here")

    p = sub.add_parser("graph", help="construct a degree-constrained graph")
    p.add_argument("kind", choices=["bireg", "digraph"])
    p.add_argument("--C", required=True, help="matrix like 2,>1;0,1 (bireg: left degrees, digraph: in-degrees)")
    p.add_argument("--D", required=True, help="bireg: right degrees, digraph: out-degrees")
    p.add_argument("--sizes", required=True, help="part sizes; bireg lists left then right")
    p.add_argument("--complete", action="store_true")
    p.add_argument("-o", "--output")

    p = sub.add_parser("verify", help="cross-check against the oracles")
    p.add_argument("--suite", choices=["presburger", "bireg", "digraph", "spectrum", "all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {
    "compile":    cmd_compile,
    "dump-types": cmd_dump_types,
    "spectrum":   cmd_spectrum,
    "graph":      cmd_graph,
    "verify":     cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2

    logger_setup.set_level("DEBUG" if args.debug else ("INFO" if args.verbose else "WARNING"))
    try:
        settings = load_settings(args.config) if args.config else get_settings()
        set_settings(settings)
        logger.info("[CLI] Running", command=args.command)
        return COMMANDS[args.command](args, settings)
    except SpectraError as exc:
        logger.error("[CLI] Failed", command=args.command, error=str(exc), kind=type(exc).__name__)
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
