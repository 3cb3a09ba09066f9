"""
spectrum.py

Spectrum queries for C² sentences, assembled from the pieces below:

  completize → normal form → QMLC → push negations   (normalize)
  types and consistent rows                          (typesys)
  PREB(x) = ∃X̄ [ x = ΣX̄ ∧ ATOMS(X̄) ∧ CON(X̄) ]       (this module)

One variable X_{t}_{k} per type t and consistent row k counts the elements
of that kind. ATOMS turns every basic E^k μ into Σ_{μ ∈ t} X ≥ k and every
¬E^k μ into Σ_{μ ∈ t} X ≤ k−1. CON asks for a complete regular digraph inside
every type and a complete biregular graph between every pair of types.

Spectrum, witness and image answers always refer to the original sentence:
models are lowered back through the completed signature and model-checked.
"""

import itertools
import structlog
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from c2spectra import presburger as pb
from c2spectra.biregular import build_comp_bireg_formula, construct_biregular
from c2spectra.config import Settings, get_settings
from c2spectra.errors import BudgetExceeded, InternalInconsistency, OracleCapExceeded, PreconditionError
from c2spectra.logic_core import (
    And, Exists, MAtom, Not, Or, Pred, QAnd, QExists, QNot, QOr, Rel, Signature,
    conj, disj, forall,
)
from c2spectra.normalize import CompletedSignature, completize, push_negations, to_normal_form, to_qmlc
from c2spectra.oracle import oracle_spectrum
from c2spectra.regdigraph import build_comp_reg_formula, construct_regular_digraph
from c2spectra.structures import FiniteStructure, eval_c2, eval_qmlc
from c2spectra.typesys import DegreeMatrix, TypeTable, build_type_matrices

logger = structlog.get_logger(__name__)

SIZE_VAR = "x"


#  Compilation

@dataclass(frozen=True, eq=False)
class CompiledSentence:
    phi:       object
    sig:       Signature
    completed: CompletedSignature
    qmlc:      object
    table:     TypeTable
    variables: dict = field(repr=False)      # type index → row variable names
    preb:      object = field(repr=False, default=None)

    def count_term(self, mu) -> pb.LinearTerm:
        """Σ of X over the kinds whose type contains μ."""
        names = [v for t, vs in self.variables.items() if self.table.holds(t, mu) for v in vs]
        return pb.lsum(names)


def _var(t: int, k: int) -> str:
    return f"X_{t}_{k}"


def _atoms(node, term):
    if isinstance(node, QExists):
        return pb.ge(term(node.body), node.count)
    if isinstance(node, QNot) and isinstance(node.body, QExists):
        if node.body.count == 0:
            return pb.FALSE
        return pb.le(term(node.body.body), node.body.count - 1)
    if isinstance(node, QAnd):
        return pb.pconj(_atoms(node.left, term), _atoms(node.right, term))
    if isinstance(node, QOr):
        return pb.pdisj(_atoms(node.left, term), _atoms(node.right, term))
    raise PreconditionError(f"negations must be pushed to basic nodes first: {node!r}")


def _balance_atoms(C: DegreeMatrix, D: DegreeMatrix, xs: Sequence[str], ys: Sequence[str]) -> list:
    """Per-color edge counts implied by any (C,D) graph on X̄ / Ȳ vertices."""
    atoms = []
    for i in range(C.rows):
        left = pb.LinearTerm.build(0, _coeffs(C.row(i), xs))
        right = pb.LinearTerm.build(0, _coeffs(D.row(i), ys))
        left_exact, right_exact = not C.row_has_at_least(i), not D.row_has_at_least(i)
        if not left.coeffs and not right.coeffs:
            continue
        if left_exact and right_exact:
            atoms.append(pb.Atom(left, "=", right))
        elif left_exact:
            atoms.append(pb.Atom(left, ">=", right))
        elif right_exact:
            atoms.append(pb.Atom(right, ">=", left))
    return atoms


def _coeffs(row, names) -> dict:
    out = {}
    for e, v in zip(row, names):
        if e.value:
            out[v] = out.get(v, 0) + e.value
    return out


def _con(table: TypeTable, variables: dict, settings: Settings) -> list:
    """
    Graph conditions: the per-color balance atoms every graph implies come
    first, then one complete regular digraph per type and one complete
    biregular graph per pair of types, each built when the solver reaches it.
    """
    balance, graphs = [], []
    for t in range(len(table.types)):
        out_m, in_m = build_type_matrices(table, t)
        xs = list(variables[t])
        balance += _balance_atoms(in_m, out_m, xs, xs)
        build = (lambda C, D, xs: lambda: build_comp_reg_formula(C, D, xs, settings))(in_m, out_m, xs)
        graphs.append(pb.lazy(build, f"comp-reg-T{t}"))

    for i, j in itertools.combinations(range(len(table.types)), 2):
        i, j = j, i                         # pairs (T_i, T_j) with j < i
        d, dbar = build_type_matrices(table, i, j)
        xs, ys = list(variables[i]), list(variables[j])
        balance += _balance_atoms(d, dbar, xs, ys)
        build = (lambda C, D, xs, ys: lambda: build_comp_bireg_formula(C, D, xs, ys, settings))(d, dbar, xs, ys)
        graphs.append(pb.lazy(build, f"comp-bireg-T{i}-T{j}"))
    return balance + graphs


def build_preb(phi, sig: Signature, table: Optional[TypeTable] = None, settings: Optional[Settings] = None,
               size_var: str = SIZE_VAR, extra=()):
    """
    PREB(x) for a QMLC sentence over a completed signature. Returns the
    formula together with the row variables per type. `extra` conjoins
    further atoms over the row variables inside the quantifier.
    """
    settings = settings or get_settings()
    phi = push_negations(phi)
    table = table or TypeTable.build(phi, sig, (), settings)
    variables = {t.index: [_var(t.index, k) for k in range(len(table.rows[t.index]))] for t in table.types}
    every = [v for t in sorted(variables) for v in variables[t]]

    def term(mu):
        return pb.lsum([v for t, vs in variables.items() if table.holds(t, mu) for v in vs])

    atoms = _atoms(phi, term)
    body = pb.pconj(pb.eq(size_var, pb.lsum(every)), atoms, *extra, *_con(table, variables, settings))
    preb = pb.Exists(tuple(every), body) if every else body
    logger.info("[PREB] Assembled", types=len(table.types), variables=len(every))
    return preb, variables


@lru_cache(maxsize=256)
def _compile(phi, sig: Signature, extra_unary: tuple, settings: Settings) -> CompiledSentence:
    completed_phi, completed = completize(phi, sig)
    normal = to_normal_form(completed_phi, completed.sig)
    qmlc = push_negations(to_qmlc(normal))
    extra_atoms = tuple(MAtom(p) for p in extra_unary)
    table = TypeTable.build(qmlc, completed.sig, extra_atoms, settings)
    preb, variables = build_preb(qmlc, completed.sig, table, settings)
    return CompiledSentence(phi, sig, completed, qmlc, table, variables, preb)


def compile_sentence(phi, sig: Signature, settings: Optional[Settings] = None,
                     extra_unary: Sequence[str] = ()) -> CompiledSentence:
    """Cached: repeated queries on the same sentence reuse the type table and PREB."""
    for p in extra_unary:
        if p not in sig.unary:
            raise PreconditionError(f"'{p}' is not a unary predicate of the signature")
    return _compile(phi, sig, tuple(extra_unary), settings or get_settings())


#  Membership

def _disjuncts(phi) -> list:
    """Top-level disjuncts of a sentence; the spectrum of φ ∨ ψ is the union of theirs."""
    if isinstance(phi, Or):
        return _disjuncts(phi.left) + _disjuncts(phi.right)
    return [phi]


def _with_oracle_fallback(error: BudgetExceeded, phi, sig: Signature, n: int, settings: Settings):
    if not settings.oracle_fallback:
        raise error
    try:
        result = oracle_spectrum(phi, sig, n, settings)
    except OracleCapExceeded:
        raise error from None
    logger.warning("[SPECTRUM] Budget tripped, answered by the oracle", budget=error.budget, n=n)
    return result


def spectrum_member(phi, sig: Signature, n: int, settings: Optional[Settings] = None) -> bool:
    """Is there a model of φ with exactly n elements?"""
    if n < 0:
        raise PreconditionError(f"size must be a natural number, got {n}")
    settings = settings or get_settings()
    try:
        answer = any(pb.evaluate(compile_sentence(part, sig, settings).preb, {SIZE_VAR: n}, settings)
                     for part in _disjuncts(phi))
    except BudgetExceeded as error:
        return _with_oracle_fallback(error, phi, sig, n, settings).answer
    logger.debug("[SPECTRUM] Membership", n=n, answer=answer)
    return answer


def _member_job(args) -> bool:
    phi, sig, n, settings = args
    return spectrum_member(phi, sig, n, settings)


def spectrum_enumerate(phi, sig: Signature, n_max: int, verify_window: Optional[int] = None,
                       settings: Optional[Settings] = None, jobs: int = 1) -> tuple:
    """
    Membership for n = 0..n_max and the eventually periodic set that fits it
    (or INCONCLUSIVE). verify_window defaults to half the scanned range.
    """
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    settings = settings or get_settings()
    verify_window = verify_window or max(1, (n_max + 1) // 2)
    work = [(phi, sig, n, settings) for n in range(n_max + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            bits = list(pool.map(_member_job, work))
    else:
        bits = [_member_job(item) for item in work]
    result = pb.semilinear_from_bits(bits, verify_window)
    logger.info("[SPECTRUM] Enumerated", n_max=n_max, members=sum(bits),
                result=repr(result) if result is pb.INCONCLUSIVE else result.text())
    return bits, result


#  Witness models

def _assemble(compiled: CompiledSentence, valuation: dict, n: int, settings: Settings) -> FiniteStructure:
    table, sig = compiled.table, compiled.completed.sig
    sizes = {t: [valuation.get(v, 0) for v in vs] for t, vs in compiled.variables.items()}
    offsets, start = {}, 0
    for t in sorted(sizes):
        offsets[t] = start
        start += sum(sizes[t])
    if start != n:
        raise InternalInconsistency(f"row populations sum to {start}, expected {n}")

    unary = {p: [] for p in sig.unary}
    for t in sorted(sizes):
        for p in sig.unary:
            mu = MAtom(p)
            if mu in table.closure and table.holds(t, mu):
                unary[p].extend(range(offsets[t], offsets[t] + sum(sizes[t])))

    binary = {r: [] for r in sig.binary}

    def add(relation: int, a: int, b: int):
        name = table.relations[relation]
        binary[name].append((a, b))
        binary[sig.inverse_of(name)].append((b, a))

    for t in sorted(sizes):
        if sum(sizes[t]) < 2:
            continue
        out_m, in_m = build_type_matrices(table, t)
        graph = construct_regular_digraph(in_m, out_m, sizes[t], complete=True, settings=settings)
        for i, color in enumerate(graph.edges):
            for a, b in color:
                add(i, offsets[t] + a, offsets[t] + b)

    for i, j in itertools.combinations(sorted(sizes), 2):
        i, j = j, i
        if not sum(sizes[i]) or not sum(sizes[j]):
            continue
        d, dbar = build_type_matrices(table, i, j)
        graph = construct_biregular(d, dbar, sizes[i], sizes[j], complete=True, settings=settings)
        for r, color in enumerate(graph.edges):
            for u, v in color:
                add(r, offsets[i] + u, offsets[j] + v)

    return FiniteStructure.build(n, unary, binary)


def witness_model(phi, sig: Signature, n: int, settings: Optional[Settings] = None) -> FiniteStructure:
    """
    A model of φ of size n, built from a PREB solution: vertices are split by
    kind, each type gets a complete regular digraph, each pair of types a
    complete biregular graph. The result is model-checked before returning.
    """
    settings = settings or get_settings()
    try:
        compiled, valuation = None, None
        for part in _disjuncts(phi):
            compiled = compile_sentence(part, sig, settings)
            valuation = pb.solve(compiled.preb, {SIZE_VAR: n}, settings)
            if valuation is not None:
                break
    except BudgetExceeded as error:
        result = _with_oracle_fallback(error, phi, sig, n, settings)
        if not result.answer:
            raise PreconditionError(f"no model of size {n}") from None
        return result.witness

    if valuation is None:
        raise PreconditionError(f"no model of size {n}")
    complete_model = _assemble(compiled, valuation, n, settings)
    if not eval_qmlc(complete_model, compiled.qmlc):
        logger.error("[SPECTRUM] Assembled model fails the QMLC sentence", n=n)
        raise InternalInconsistency(f"assembled model of size {n} fails the QMLC sentence")
    model = compiled.completed.lower(complete_model)
    if not eval_c2(model, phi):
        logger.error("[SPECTRUM] Lowered model fails the sentence", n=n)
        raise InternalInconsistency(f"lowered model of size {n} fails the input sentence")
    logger.info("[SPECTRUM] Witness model built", n=n)
    return model


#  Images

def _exactly(pred: str, k: int):
    at_least = Exists("x", k, Pred(pred, "x")) if k else None
    at_most = Not(Exists("x", k + 1, Pred(pred, "x")))
    return And(at_least, at_most) if at_least else at_most


def image_member(phi, sig: Signature, predicates: Sequence[str], values: Sequence[int],
                 settings: Optional[Settings] = None) -> bool:
    """Is there a model of φ of any size whose predicates have exactly the given cardinalities?"""
    if len(predicates) != len(values):
        raise PreconditionError(f"{len(predicates)} predicates but {len(values)} values")
    if any(v < 0 for v in values):
        raise PreconditionError("image entries must be natural numbers")
    settings = settings or get_settings()
    try:
        answer = False
        for part in _disjuncts(phi):
            compiled = compile_sentence(part, sig, settings, tuple(predicates))
            pins = [pb.eq(compiled.count_term(MAtom(p)), v) for p, v in zip(predicates, values)]
            preb, _ = build_preb(compiled.qmlc, compiled.completed.sig, compiled.table, settings, extra=pins)
            if pb.evaluate(pb.Exists((SIZE_VAR,), preb), {}, settings):
                answer = True
                break
    except BudgetExceeded as error:
        if not settings.oracle_fallback:
            raise
        pinned = conj(phi, *[_exactly(p, v) for p, v in zip(predicates, values)])
        for n in itertools.count(max(values, default=0)):
            try:
                if oracle_spectrum(pinned, sig, n, settings).answer:
                    logger.warning("[SPECTRUM] Image answered by the oracle", budget=error.budget, n=n)
                    return True
            except OracleCapExceeded:
                raise error from None
    logger.info("[SPECTRUM] Image query", predicates=list(predicates), values=list(values), answer=answer)
    return answer


#  Sentences for semilinear sets

def residue_sentence(base: int, period: int, tag: str = "") -> tuple:
    """
    Sentence with spectrum {base + period·k}. A holds on exactly `base`
    elements; the rest are split into classes B_0..B_{period−1} with R a
    bijection from each class onto the next, so all classes have one size.
    Period 0 puts every element into A. Returns (sentence, signature).
    """
    a = f"A{tag}"
    classes = [f"B{tag}_{i}" for i in range(period)]
    r = f"R{tag}"
    parts = [_exactly(a, base)]
    if period == 0:
        parts.append(forall("x", Pred(a, "x")))
        return conj(*parts), Signature((a,), (), ())

    # every element carries exactly one label
    labels = [Pred(a, "x")] + [Pred(b, "x") for b in classes]
    parts.append(forall("x", disj(*labels)))
    for k, first in enumerate(labels):
        for second in labels[k + 1:]:
            parts.append(forall("x", Not(And(first, second))))

    for i, b in enumerate(classes):
        nxt = classes[(i + 1) % period]
        out_edge = And(Rel(r, "x", "y"), Pred(nxt, "y"))
        in_edge = And(Rel(r, "y", "x"), Pred(b, "y"))
        parts.append(forall("x", disj(Not(Pred(b, "x")),
                                      conj(Exists("y", 1, out_edge), Not(Exists("y", 2, out_edge))))))
        parts.append(forall("x", disj(Not(Pred(nxt, "x")),
                                      conj(Exists("y", 1, in_edge), Not(Exists("y", 2, in_edge))))))
    return conj(*parts), Signature((a, *classes), (r,), ())


def sentence_from_semilinear(s: pb.SemilinearSet1D) -> tuple:
    """A C² sentence whose spectrum is exactly s: one residue sentence per linear piece, disjoined."""
    if not s.pairs:
        return Exists("x", 1, And(Pred("A", "x"), Not(Pred("A", "x")))), Signature(("A",), (), ())
    pieces, unary, binary = [], [], []
    single = len(s.pairs) == 1
    for k, (base, period) in enumerate(s.pairs):
        sentence, piece_sig = residue_sentence(base, period, "" if single else str(k + 1))
        pieces.append(sentence)
        unary += list(piece_sig.unary)
        binary += list(piece_sig.binary)
    logger.info("[SPECTRUM] Sentence from semilinear set", pieces=len(pieces), set=s.text())
    return disj(*pieces), Signature(tuple(unary), tuple(binary), ())
