"""
oracle.py

Brute-force ground truth, kept free of the main pipeline's formula code.

  oracle_spectrum            → is there a model of size n?  (z3, grounded encoding)
  oracle_complete_spectrum   → same, over complete structures, for QMLC sentences
  oracle_biregular           → (C,D)-biregular colored bipartite graph of given part sizes
  oracle_digraph             → (C,D)-regular colored digraph (C in-degrees, D out-degrees)
  oracle_presburger          → exhaustive sweep of bound variables in [0, var_cap]

The only pruning beyond z3's own search is lexicographic ordering of the
unary labels of consecutive elements.
"""

import itertools
import structlog
import z3
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from c2spectra import presburger as pb
from c2spectra.config import Settings, get_settings
from c2spectra.errors import InternalInconsistency, OracleCapExceeded, PreconditionError
from c2spectra.logic_core import (
    And, Bottom, Diamond, Eq, Exists, MAnd, MAtom, MNot, MTop, Not, Or, Pred,
    QAnd, QExists, QNot, QOr, Rel, Signature, Top,
)
from c2spectra.structures import FiniteStructure, eval_c2, eval_qmlc, is_complete

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class OracleResult:
    answer:  bool
    witness: Optional[object] = None

    def __bool__(self):
        return self.answer


#  Shared z3 helpers

def _at_least(lits: list, k: int):
    if k <= 0:
        return z3.BoolVal(True)
    if len(lits) < k:
        return z3.BoolVal(False)
    if k == 1:
        return z3.Or(*lits)
    return z3.AtLeast(*lits, k)


def _exactly(lits: list, k: int):
    if k < 0 or len(lits) < k:
        return z3.BoolVal(False)
    if not lits:
        return z3.BoolVal(True)
    return z3.PbEq([(lit, 1) for lit in lits], k)


def _at_most_one(lits: list):
    if len(lits) <= 1:
        return z3.BoolVal(True)
    return z3.AtMost(*lits, 1)


def _lex_geq(xs: list, ys: list):
    """xs ≥ ys lexicographically, True > False."""
    if not xs:
        return z3.BoolVal(True)
    return z3.Or(z3.And(xs[0], z3.Not(ys[0])), z3.And(xs[0] == ys[0], _lex_geq(xs[1:], ys[1:])))


def _check(solver: z3.Solver) -> bool:
    result = solver.check()
    if result == z3.unknown:
        raise InternalInconsistency(f"z3 returned unknown: {solver.reason_unknown()}")
    return result == z3.sat


def _cap_for(sig: Signature, settings: Settings) -> tuple:
    if sig.is_unary_only:
        return "oracle_unary_cap", settings.oracle_unary_cap
    return "oracle_structure_cap", settings.oracle_structure_cap


#  Spectrum oracles

def _structure_vars(sig: Signature, n: int):
    unary = {p: [z3.Bool(f"{p}_{a}") for a in range(n)] for p in sig.unary}
    binary = {r: [[z3.Bool(f"{r}_{a}_{b}") for b in range(n)] for a in range(n)] for r in sig.binary}
    return unary, binary


def _symmetry_breaking(solver: z3.Solver, unary: dict, n: int):
    names = sorted(unary)
    if not names:
        return
    for a in range(n - 1):
        solver.add(_lex_geq([unary[p][a] for p in names], [unary[p][a + 1] for p in names]))


def _read_structure(model, sig: Signature, unary: dict, binary: dict, n: int) -> FiniteStructure:
    truth = lambda var: z3.is_true(model.eval(var, model_completion=True))
    u = {p: [a for a in range(n) if truth(unary[p][a])] for p in sig.unary}
    b = {r: [(a, c) for a in range(n) for c in range(n) if truth(binary[r][a][c])] for r in sig.binary}
    return FiniteStructure.build(n, u, b)


def oracle_spectrum(phi, sig: Signature, n: int, settings: Optional[Settings] = None) -> OracleResult:
    """Exact: is there a structure of size n over sig satisfying the C² sentence φ?"""
    settings = settings or get_settings()
    budget, cap = _cap_for(sig, settings)
    if n > cap:
        raise OracleCapExceeded(budget, cap, n, detail="structure search")
    if n == 0:
        empty = FiniteStructure.build(0)
        answer = eval_c2(empty, phi)
        return OracleResult(answer, empty if answer else None)

    unary, binary = _structure_vars(sig, n)
    memo = {}

    def enc(node, env: tuple):
        key = (node, env)
        if key in memo:
            return memo[key]
        e = dict(env)
        if isinstance(node, Top):
            out = z3.BoolVal(True)
        elif isinstance(node, Bottom):
            out = z3.BoolVal(False)
        elif isinstance(node, Eq):
            out = z3.BoolVal(e[node.left] == e[node.right])
        elif isinstance(node, Pred):
            out = unary[node.name][e[node.var]]
        elif isinstance(node, Rel):
            out = binary[node.name][e[node.left]][e[node.right]]
        elif isinstance(node, Not):
            out = z3.Not(enc(node.body, env))
        elif isinstance(node, And):
            out = z3.And(enc(node.left, env), enc(node.right, env))
        elif isinstance(node, Or):
            out = z3.Or(enc(node.left, env), enc(node.right, env))
        elif isinstance(node, Exists):
            lits = []
            for c in range(n):
                inner = dict(e)
                inner[node.var] = c
                lits.append(enc(node.body, tuple(sorted(inner.items()))))
            out = _at_least(lits, node.count)
        else:
            raise TypeError(f"not a C2 formula: {node!r}")
        memo[key] = out
        return out

    solver = z3.Solver()
    solver.add(enc(phi, ()))
    _symmetry_breaking(solver, unary, n)
    if not _check(solver):
        logger.debug("[ORACLE] No model", n=n)
        return OracleResult(False)

    witness = _read_structure(solver.model(), sig, unary, binary, n)
    if not eval_c2(witness, phi):
        raise InternalInconsistency("oracle witness does not satisfy the sentence")
    logger.debug("[ORACLE] Model found", n=n)
    return OracleResult(True, witness)


def oracle_complete_spectrum(phi, sig: Signature, n: int, settings: Optional[Settings] = None) -> OracleResult:
    """Exact: is there a complete structure of size n satisfying the QMLC sentence φ?"""
    settings = settings or get_settings()
    if not sig.has_inverse_pairing:
        raise PreconditionError("complete structures need an inverse pairing")
    budget, cap = _cap_for(sig, settings)
    if n > cap:
        raise OracleCapExceeded(budget, cap, n, detail="complete structure search")
    if n == 0:
        empty = FiniteStructure.build(0)
        answer = eval_qmlc(empty, phi)
        return OracleResult(answer, empty if answer else None)

    unary, binary = _structure_vars(sig, n)
    solver = z3.Solver()
    for a in range(n):
        for r in sig.binary:
            solver.add(z3.Not(binary[r][a][a]))
        for b in range(n):
            if a == b:
                continue
            solver.add(_exactly([binary[r][a][b] for r in sig.binary], 1))
            for r in sig.binary:
                solver.add(binary[r][a][b] == binary[sig.inverse_of(r)][b][a])

    memo = {}

    def ext(mu, a: int):
        key = (mu, a)
        if key in memo:
            return memo[key]
        if isinstance(mu, MTop):
            out = z3.BoolVal(True)
        elif isinstance(mu, MAtom):
            out = unary[mu.name][a]
        elif isinstance(mu, MNot):
            out = z3.Not(ext(mu.body, a))
        elif isinstance(mu, MAnd):
            out = z3.And(ext(mu.left, a), ext(mu.right, a))
        elif isinstance(mu, Diamond):
            out = _at_least([z3.And(binary[mu.rel][a][b], ext(mu.body, b)) for b in range(n) if b != a], mu.count)
        else:
            raise TypeError(f"not an MLC formula: {mu!r}")
        memo[key] = out
        return out

    def sentence(q):
        if isinstance(q, QExists):
            return _at_least([ext(q.body, a) for a in range(n)], q.count)
        if isinstance(q, QNot):
            return z3.Not(sentence(q.body))
        if isinstance(q, QAnd):
            return z3.And(sentence(q.left), sentence(q.right))
        if isinstance(q, QOr):
            return z3.Or(sentence(q.left), sentence(q.right))
        raise TypeError(f"not a QMLC formula: {q!r}")

    solver.add(sentence(phi))
    _symmetry_breaking(solver, unary, n)
    if not _check(solver):
        return OracleResult(False)
    witness = _read_structure(solver.model(), sig, unary, binary, n)
    if not (eval_qmlc(witness, phi) and is_complete(witness, sig)):
        raise InternalInconsistency("complete oracle witness fails its own check")
    return OracleResult(True, witness)


#  Graph oracles

def _entry_constraint(lits: list, entry):
    if entry.at_least:
        return _at_least(lits, entry.value)
    return _exactly(lits, entry.value)


def _parts(sizes: Sequence[int]) -> list:
    """Part index of every vertex, vertices numbered in part order."""
    return [j for j, size in enumerate(sizes) for _ in range(size)]


def oracle_biregular(C, D, M: Sequence[int], N: Sequence[int], complete: bool = False,
                     cap: Optional[int] = None, settings: Optional[Settings] = None) -> OracleResult:
    """
    Witness: tuple of per-color edge lists (u, v) with u a left and v a right
    vertex, both numbered in part order.
    """
    settings = settings or get_settings()
    cap = settings.oracle_graph_cap if cap is None else cap
    if len(M) != C.cols or len(N) != D.cols or C.rows != D.rows:
        raise PreconditionError("matrix shapes do not match the size vectors")
    total = sum(M) + sum(N)
    if total > cap:
        raise OracleCapExceeded("oracle_graph_cap", cap, total, detail="bipartite search")

    ell = C.rows
    left, right = _parts(M), _parts(N)
    edge = [[[z3.Bool(f"e{i}_{u}_{v}") for v in range(len(right))] for u in range(len(left))] for i in range(ell)]

    solver = z3.Solver()
    for u in range(len(left)):
        for v in range(len(right)):
            lits = [edge[i][u][v] for i in range(ell)]
            solver.add(_exactly(lits, 1) if complete else _at_most_one(lits))
    for i in range(ell):
        for u, j in enumerate(left):
            solver.add(_entry_constraint([edge[i][u][v] for v in range(len(right))], C[i, j]))
        for v, k in enumerate(right):
            solver.add(_entry_constraint([edge[i][u][v] for u in range(len(left))], D[i, k]))

    if not _check(solver):
        return OracleResult(False)
    model = solver.model()
    witness = tuple(
        tuple((u, v) for u in range(len(left)) for v in range(len(right))
              if z3.is_true(model.eval(edge[i][u][v], model_completion=True)))
        for i in range(ell))
    return OracleResult(True, witness)


def oracle_complete_biregular(C, D, M, N, cap=None, settings=None) -> OracleResult:
    return oracle_biregular(C, D, M, N, complete=True, cap=cap, settings=settings)


def oracle_digraph(C, D, N: Sequence[int], complete: bool = False,
                   cap: Optional[int] = None, settings: Optional[Settings] = None) -> OracleResult:
    """
    C holds in-degrees and D out-degrees. Irreflexive, antisymmetric across
    all colors; complete means every unordered pair carries one oriented edge.
    Witness: tuple of per-color lists of (a, b) meaning a → b.
    """
    settings = settings or get_settings()
    cap = settings.oracle_graph_cap if cap is None else cap
    if len(N) != C.cols or C.shape != D.shape:
        raise PreconditionError("matrix shapes do not match the size vector")
    total = sum(N)
    if total > cap:
        raise OracleCapExceeded("oracle_graph_cap", cap, total, detail="digraph search")

    ell = C.rows
    part = _parts(N)
    n = len(part)
    edge = [[[z3.Bool(f"d{i}_{a}_{b}") if a != b else None for b in range(n)] for a in range(n)] for i in range(ell)]

    solver = z3.Solver()
    for a in range(n):
        for b in range(a + 1, n):
            lits = [edge[i][a][b] for i in range(ell)] + [edge[i][b][a] for i in range(ell)]
            solver.add(_exactly(lits, 1) if complete else _at_most_one(lits))
    for i in range(ell):
        for a in range(n):
            outs = [edge[i][a][b] for b in range(n) if b != a]
            ins = [edge[i][b][a] for b in range(n) if b != a]
            solver.add(_entry_constraint(outs, D[i, part[a]]))
            solver.add(_entry_constraint(ins, C[i, part[a]]))

    if not _check(solver):
        return OracleResult(False)
    model = solver.model()
    witness = tuple(
        tuple((a, b) for a in range(n) for b in range(n)
              if a != b and z3.is_true(model.eval(edge[i][a][b], model_completion=True)))
        for i in range(ell))
    return OracleResult(True, witness)


def oracle_complete_digraph(C, D, N, cap=None, settings=None) -> OracleResult:
    return oracle_digraph(C, D, N, complete=True, cap=cap, settings=settings)


#  Presburger oracle

def oracle_presburger(psi, assignment: Mapping, var_cap: int = 5) -> bool:
    """
    Exhaustive sweep of every existential variable over [0, var_cap]. Sound
    for true answers; sound for false once var_cap exceeds the solver's
    small-solution bound for ψ.
    """
    def holds(node, env: dict) -> bool:
        if isinstance(node, pb.Atom):
            return node.holds(env)
        if isinstance(node, pb.Conj):
            return all(holds(item, env) for item in node.items)
        if isinstance(node, pb.Disj):
            return any(holds(item, env) for item in node.items)
        if isinstance(node, pb.Exists):
            for values in itertools.product(range(var_cap + 1), repeat=len(node.vars)):
                if holds(node.body, {**env, **dict(zip(node.vars, values))}):
                    return True
            return False
        if isinstance(node, pb.PointSet):
            return node.holds(tuple(env[v] for v in node.vars))
        if isinstance(node, pb.Family):
            values = tuple(env[v] for v in node.pinned)
            if not all(lo <= a <= hi for a, (lo, hi) in zip(values, node.ranges)):
                return False
            return holds(node.build(values), env)
        raise TypeError(f"not a Presburger formula: {node!r}")

    missing = [v for v in pb.free_variables(psi) if v not in assignment]
    if missing:
        raise PreconditionError(f"unassigned variables {missing}")
    return holds(psi, dict(assignment))
