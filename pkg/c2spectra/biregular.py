"""
biregular.py

Colored bipartite graphs with prescribed per-part, per-color degrees.

A (C,D)-biregular graph of size (M̄,N̄) has left parts U_1..U_m with |U_j| = M_j,
right parts V_1..V_n with |V_k| = N_k, and edge colors 1..ℓ. Every u ∈ U_j has
color-i degree admitted by C[i,j]; every v ∈ V_k has color-i degree admitted
by D[i,k]. Colors are disjoint and the graph is simple.

  exists_simple_biregular      → closed forms for ℓ = m = n = 1
  build_bireg_formula_nat      → exact formula over ℕ matrices
  build_bireg_formula_bnat     → exact when the sizes are big enough
  build_partial_formula        → pinned vertices peeled one at a time
  build_bireg_formula_full     → exact for all sizes
  build_comp_bireg_formula     → complete bipartite variant
  search_biregular             → exhaustive search at concrete sizes
  decide_biregular             → exact decision at concrete sizes
  realize / construct_biregular → witness graphs

Size thresholds:
  H-set         Σ ≤ 2(c̄·1)(d̄·1)+2 for one color, Σ < 2ℓ(C·1)(D·1)+3ℓ otherwise
  big enough    per-row χ-mass ≥ 2(C·1)(D·1)+3
  completeness  a part larger than ⌊C⌋·1 + ⌊D⌋·1 forces easy columns

Only the H set asks the solver oracle; every other node of the formulas is
literal Presburger arithmetic or a constant found by the native search.
"""

import itertools
import structlog
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from c2spectra import presburger as pb
from c2spectra.config import Settings, get_settings
from c2spectra.errors import BudgetExceeded, InternalInconsistency, PreconditionError
from c2spectra.oracle import oracle_biregular
from c2spectra.structures import FiniteStructure
from c2spectra.typesys import EN, DegreeMatrix

logger = structlog.get_logger(__name__)


#  Graph types

@dataclass(frozen=True)
class ColoredBipartiteGraph:
    left_parts:  tuple              # tuple of tuples of left vertex ids
    right_parts: tuple
    edges:       tuple              # per color: sorted tuple of (u, v)
    C:           DegreeMatrix
    D:           DegreeMatrix
    complete:    bool = False

    @property
    def left_size(self) -> int:
        return sum(len(p) for p in self.left_parts)

    @property
    def right_size(self) -> int:
        return sum(len(p) for p in self.right_parts)

    @property
    def sizes(self) -> tuple:
        return tuple(len(p) for p in self.left_parts), tuple(len(p) for p in self.right_parts)

    def to_structure(self) -> FiniteStructure:
        """Left vertices keep their ids, right vertex v becomes left_size + v."""
        shift = self.left_size
        unary = {f"U{j + 1}": part for j, part in enumerate(self.left_parts)}
        unary.update({f"V{k + 1}": [shift + v for v in part] for k, part in enumerate(self.right_parts)})
        binary = {f"E{i + 1}": [(u, shift + v) for u, v in color] for i, color in enumerate(self.edges)}
        return FiniteStructure.build(shift + self.right_size, unary, binary)

    def comments(self) -> list:
        m_sizes, n_sizes = self.sizes
        return [f"bipartite graph, C={self.C.text()} D={self.D.text()}",
                f"left sizes {list(m_sizes)} as U*, right sizes {list(n_sizes)} as V*",
                "complete" if self.complete else "simple"]


@dataclass(frozen=True)
class PartialGraph:
    """(C,D) with extra pinned vertices: S on the left, T on the right, each a degree column."""
    C: DegreeMatrix
    D: DegreeMatrix
    S: tuple = ()
    T: tuple = ()

    def swapped(self) -> "PartialGraph":
        return PartialGraph(self.D, self.C, self.T, self.S)


#  Small helpers

def _check_shapes(C: DegreeMatrix, D: DegreeMatrix, M=None, N=None):
    if C.rows != D.rows:
        raise PreconditionError(f"C has {C.rows} rows but D has {D.rows}")
    if M is not None and len(M) != C.cols:
        raise PreconditionError(f"{len(M)} left sizes for {C.cols} columns")
    if N is not None and len(N) != D.cols:
        raise PreconditionError(f"{len(N)} right sizes for {D.cols} columns")


def _names(stem: str, count: int) -> list:
    return [f"{stem}{k + 1}" for k in range(count)]


class _Namer:
    """Deterministic fresh names for one formula build."""

    def __init__(self):
        self.counter = itertools.count(1)

    def take(self, stem: str) -> str:
        return f"{stem}{next(self.counter)}"


def _dot(coeffs: Sequence[int], names: Sequence[str], const: int = 0) -> pb.LinearTerm:
    return pb.LinearTerm.build(const, {v: c for v, c in zip(names, coeffs) if c})


def _compare(left: pb.LinearTerm, op: str, right: pb.LinearTerm):
    """Atom, folded to TRUE/FALSE when both sides are constant."""
    if not left.coeffs and not right.coeffs:
        a, b = left.const, right.const
        ok = a == b if op == "=" else (a <= b if op == "<=" else a >= b)
        return pb.TRUE if ok else pb.FALSE
    return pb.Atom(left, op, right)


def biregular_threshold(C: DegreeMatrix, D: DegreeMatrix) -> int:
    return 2 * C.total() * D.total() + 3


#  One color, one part per side

def exists_simple_biregular(c, d, M: int, N: int) -> bool:
    """
    Closed forms for ℓ = m = n = 1. The bounds N ≥ c and M ≥ d are only
    needed when the side whose vertices need those neighbours is non-empty.
    """
    c, d = EN.coerce(c), EN.coerce(d)
    if M > 0 and N < c.value:
        return False
    if N > 0 and M < d.value:
        return False
    if not c.at_least and not d.at_least:
        return M * c.value == N * d.value
    if not c.at_least:
        return M * c.value >= N * d.value
    if not d.at_least:
        return N * d.value >= M * c.value
    return True


def simple_biregular_formula(c, d, x: str, y: str):
    """exists_simple_biregular over the size variables x and y."""
    c, d = EN.coerce(c), EN.coerce(d)
    exact = not c.at_least and not d.at_least
    items = []
    # with both exact and a degree ≤ 1 the balance equation already implies the bounds
    if not (exact and min(c.value, d.value) <= 1):
        if c.value:
            items.append(pb.pdisj(pb.eq(x, 0), pb.ge(y, c.value)))
        if d.value:
            items.append(pb.pdisj(pb.eq(y, 0), pb.ge(x, d.value)))
    left, right = pb.LinearTerm.of(x) * c.value, pb.LinearTerm.of(y) * d.value
    if exact:
        items.append(_compare(left, "=", right))
    elif not c.at_least:
        items.append(_compare(left, ">=", right))
    elif not d.at_least:
        items.append(_compare(right, ">=", left))
    return pb.pconj(*items)


def construct_vector_biregular(c: Sequence[int], d: Sequence[int], M: Sequence[int], N: Sequence[int],
                               settings: Optional[Settings] = None) -> ColoredBipartiteGraph:
    """Single-color construction for big sizes: stars, stride merge, swap repair."""
    if len(c) != len(M) or len(d) != len(N):
        raise PreconditionError("degree and size vectors differ in length")
    if any(x == 0 for x in list(c) + list(d)):
        raise PreconditionError("degree vectors must not contain zero entries")
    left_edges = sum(a * b for a, b in zip(M, c))
    right_edges = sum(a * b for a, b in zip(N, d))
    if left_edges != right_edges:
        raise PreconditionError(f"edge counts differ: M·c={left_edges}, N·d={right_edges}")
    bound = 2 * sum(c) * sum(d) + 3
    if sum(M) + sum(N) < bound:
        raise PreconditionError(f"sizes too small: {sum(M) + sum(N)} < {bound}")
    settings = settings or get_settings()
    if sum(M) + sum(N) > settings.max_vertices:
        raise BudgetExceeded("max_vertices", settings.max_vertices, sum(M) + sum(N))
    ltarget = [a for a, size in zip(c, M) for _ in range(size)]
    rtarget = [b for b, size in zip(d, N) for _ in range(size)]
    edges = _realize_color(ltarget, rtarget)
    if edges is None:
        raise InternalInconsistency(f"vector construction failed for c={list(c)} d={list(d)} M={list(M)} N={list(N)}")
    C, D = DegreeMatrix.of([list(c)]), DegreeMatrix.of([list(d)])
    graph = ColoredBipartiteGraph(_vertex_parts(M), _vertex_parts(N), (tuple(edges),), C, D)
    problems = audit_bipartite(graph)
    if problems:
        raise InternalInconsistency(f"vector construction failed its audit: {problems[0]}")
    return graph


#  The H set: small sizes, answered by the solver oracle

@lru_cache(maxsize=65536)
def _oracle_answer(C: DegreeMatrix, D: DegreeMatrix, M: tuple, N: tuple, complete: bool, cap: int) -> bool:
    return oracle_biregular(C, D, M, N, complete=complete, cap=cap).answer


def compute_H_set(C: DegreeMatrix, D: DegreeMatrix, bound: Optional[int] = None,
                  settings: Optional[Settings] = None) -> frozenset:
    """All (M̄,N̄) with Σ ≤ bound that admit a (C,D)-biregular graph."""
    _check_shapes(C, D)
    settings = settings or get_settings()
    if bound is None:
        bound = _h_bound(C, D)
    parts = C.cols + D.cols
    cap = max(settings.oracle_graph_cap, bound)
    logger.info("[BIREG] Computing H set", C=C.text(), D=D.text(), bound=bound)
    found = set()
    for sizes in itertools.product(range(bound + 1), repeat=parts):
        if sum(sizes) > bound:
            continue
        M, N = tuple(sizes[:C.cols]), tuple(sizes[C.cols:])
        if _oracle_answer(C, D, M, N, False, cap):
            found.add((M, N))
    return frozenset(found)


def _h_bound(C: DegreeMatrix, D: DegreeMatrix) -> int:
    """Largest Σ covered by the H set."""
    if C.rows == 1:
        return 2 * C.total() * D.total() + 2
    return 2 * C.rows * C.total() * D.total() + 3 * C.rows - 1


def _h_pointset(C: DegreeMatrix, D: DegreeMatrix, xs, ys, settings: Settings) -> pb.PointSet:
    bound = _h_bound(C, D)
    cap = max(settings.oracle_graph_cap, bound)
    m = C.cols

    def member(values):
        if sum(values) > bound:
            return False
        M, N = tuple(values[:m]), tuple(values[m:])
        if not _necessary(C, D, M, N, False):
            return False
        return _oracle_answer(C, D, M, N, False, cap)

    return pb.PointSet(tuple(xs) + tuple(ys), member, bound, f"H[{C.text()}|{D.text()}]")


#  ℕ matrices

def _reduce_nat(C: DegreeMatrix, D: DegreeMatrix, xs: list, ys: list):
    """Drop zero columns (free sizes) and unused colors; a color absent on one side forces zero sizes."""
    forced = []
    changed = True
    while changed:
        changed = False
        zero_c = [j for j in range(C.cols) if all(e.value == 0 for e in C.column(j))]
        zero_d = [k for k in range(D.cols) if all(e.value == 0 for e in D.column(k))]
        if zero_c or zero_d:
            C, xs = C.drop_columns(zero_c), [v for j, v in enumerate(xs) if j not in zero_c]
            D, ys = D.drop_columns(zero_d), [v for k, v in enumerate(ys) if k not in zero_d]
            changed = True
        for i in range(C.rows):
            c_zero = all(e.value == 0 for e in C.row(i))
            d_zero = all(e.value == 0 for e in D.row(i))
            if c_zero and d_zero:
                C, D = C.drop_row(i), D.drop_row(i)
                changed = True
                break
            if c_zero:
                hit = [k for k in range(D.cols) if D[i, k].value > 0]
                forced += [pb.eq(ys[k], 0) for k in hit]
                D, ys = D.drop_columns(hit), [v for k, v in enumerate(ys) if k not in hit]
                changed = True
                break
            if d_zero:
                hit = [j for j in range(C.cols) if C[i, j].value > 0]
                forced += [pb.eq(xs[j], 0) for j in hit]
                C, xs = C.drop_columns(hit), [v for j, v in enumerate(xs) if j not in hit]
                changed = True
                break
    return C, D, xs, ys, forced


def build_bireg_formula_nat(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                            ys: Optional[Sequence[str]] = None, settings: Optional[Settings] = None):
    """
    Exact existence formula for ℕ matrices: the H set below the threshold, and
    above it either the edge-count equation (one color) or some color that is
    big enough on its own, split off and recursed on.
    """
    _check_shapes(C, D)
    if C.has_at_least() or D.has_at_least():
        raise PreconditionError("build_bireg_formula_nat needs matrices over ℕ")
    settings = settings or get_settings()
    xs = list(xs) if xs is not None else _names("X", C.cols)
    ys = list(ys) if ys is not None else _names("Y", D.cols)
    C, D, xs, ys, forced = _reduce_nat(C, D, xs, ys)
    if C.rows == 0:
        return pb.pconj(*forced) if forced else pb.TRUE

    h = _h_pointset(C, D, xs, ys, settings)
    total = pb.lsum(xs + ys)
    if C.rows == 1:
        big = _compare(total, ">=", pb.LinearTerm.of(_h_bound(C, D) + 1))
        balance = _compare(_dot(C.floor()[0], xs), "=", _dot(D.floor()[0], ys))
        return pb.pconj(*forced, pb.pdisj(h, pb.pconj(big, balance)))

    bound = biregular_threshold(C, D)
    branches = [h]
    cf, df = C.floor(), D.floor()
    for j in range(C.rows):
        chi = _dot([1 if v else 0 for v in cf[j]], xs) + _dot([1 if v else 0 for v in df[j]], ys)
        rest = build_bireg_formula_nat(C.drop_row(j), D.drop_row(j), xs, ys, settings)
        single = build_bireg_formula_nat(C.take_rows([j]), D.take_rows([j]), xs, ys, settings)
        branches.append(pb.pconj(_compare(chi, ">=", pb.LinearTerm.of(bound)), rest, single))
    return pb.pconj(*forced, pb.pdisj(*branches))


#  ▶ matrices, big sizes

def is_big_enough(M: Sequence[int], N: Sequence[int], C: DegreeMatrix, D: DegreeMatrix) -> bool:
    _check_shapes(C, D, M, N)
    bound = biregular_threshold(C, D)
    for i in range(C.rows):
        c_row, d_row = C.row(i), D.row(i)
        if any(e.value for e in c_row) or any(e.value for e in d_row):
            mass = sum(M[j] for j, e in enumerate(c_row) if e.value) + sum(N[k] for k, e in enumerate(d_row) if e.value)
            if mass < bound:
                return False
        if any(e.at_least for e in d_row):
            if sum(N[k] for k, e in enumerate(d_row) if e.at_least) < max((e.value for e in c_row), default=0):
                return False
        if any(e.at_least for e in c_row):
            if sum(M[j] for j, e in enumerate(c_row) if e.at_least) < max((e.value for e in d_row), default=0):
                return False
    return True


def big_enough_formula(C: DegreeMatrix, D: DegreeMatrix, xs: Sequence[str], ys: Sequence[str]):
    bound = biregular_threshold(C, D)
    atoms = []
    for i in range(C.rows):
        c_row, d_row = C.row(i), D.row(i)
        if any(e.value for e in c_row) or any(e.value for e in d_row):
            mass = _dot([1 if e.value else 0 for e in c_row], xs) + _dot([1 if e.value else 0 for e in d_row], ys)
            atoms.append(_compare(mass, ">=", pb.LinearTerm.of(bound)))
        if any(e.at_least for e in d_row):
            mass = _dot([1 if e.at_least else 0 for e in d_row], ys)
            atoms.append(_compare(mass, ">=", pb.LinearTerm.of(max((e.value for e in c_row), default=0))))
        if any(e.at_least for e in c_row):
            mass = _dot([1 if e.at_least else 0 for e in c_row], xs)
            atoms.append(_compare(mass, ">=", pb.LinearTerm.of(max((e.value for e in d_row), default=0))))
    return pb.pconj(*atoms) if atoms else pb.TRUE


def _row_kind(C: DegreeMatrix, D: DegreeMatrix, i: int) -> str:
    c_flex, d_flex = C.row_has_at_least(i), D.row_has_at_least(i)
    if c_flex and d_flex:
        return "both"
    if d_flex:
        return "d"
    if c_flex:
        return "c"
    return "nat"


@dataclass(frozen=True)
class Augmented:
    C: DegreeMatrix
    D: DegreeMatrix
    k_terms: tuple          # (row, positive, negative): K = positive − negative
    l_terms: tuple


def augment_for_bnat(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                     ys: Optional[Sequence[str]] = None) -> Augmented:
    """
    Replace ▶ rows by ℕ rows plus one absorbing column per row: rows with ▶
    only in C get an identity column on the left (size K), rows with ▶ only
    in D one on the right (size L).
    """
    _check_shapes(C, D)
    xs = list(xs) if xs is not None else _names("X", C.cols)
    ys = list(ys) if ys is not None else _names("Y", D.cols)
    kinds = [_row_kind(C, D, i) for i in range(C.rows)]
    if "both" in kinds:
        raise PreconditionError(f"row {kinds.index('both') + 1} has ▶ entries on both sides")
    c_rows = [i for i, k in enumerate(kinds) if k == "c"]
    d_rows = [i for i, k in enumerate(kinds) if k == "d"]
    cf, df = C.floor(), D.floor()

    c_aug = [[EN(int(v)) for v in cf[i]] + [EN(1 if i == r else 0) for r in c_rows] for i in range(C.rows)]
    d_aug = [[EN(int(v)) for v in df[i]] + [EN(1 if i == r else 0) for r in d_rows] for i in range(D.rows)]
    k_terms = tuple((i, _dot(df[i], ys), _dot(cf[i], xs)) for i in c_rows)
    l_terms = tuple((i, _dot(cf[i], xs), _dot(df[i], ys)) for i in d_rows)
    return Augmented(DegreeMatrix.of(c_aug, C.cols + len(c_rows)),
                     DegreeMatrix.of(d_aug, D.cols + len(d_rows)), k_terms, l_terms)


def build_bireg_formula_bnat(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                             ys: Optional[Sequence[str]] = None, settings: Optional[Settings] = None,
                             namer: Optional[_Namer] = None):
    """
    Valid for big-enough sizes. Each row is classified by comparing the floor
    edge totals: equal (both floored), left larger (C floored, D keeps ▶) or
    right larger (D floored, C keeps ▶); then the ▶ surplus is absorbed by
    augmentation columns.
    """
    _check_shapes(C, D)
    settings = settings or get_settings()
    namer = namer or _Namer()
    xs = list(xs) if xs is not None else _names("X", C.cols)
    ys = list(ys) if ys is not None else _names("Y", D.cols)
    if not C.has_at_least() and not D.has_at_least():
        return build_bireg_formula_nat(C, D, xs, ys, settings)

    cf, df = C.floor(), D.floor()
    options = []
    for i in range(C.rows):
        kind = _row_kind(C, D, i)
        options.append({"nat": (0,), "d": (0, 1), "c": (0, 2), "both": (0, 1, 2)}[kind])

    branches = []
    for labels in itertools.product(*options):
        guards = []
        for i, label in enumerate(labels):
            if _row_kind(C, D, i) == "nat":
                continue
            left, right = _dot(cf[i], xs), _dot(df[i], ys)
            if label == 0:
                guards.append(_compare(left, "=", right))
            elif label == 1:
                guards.append(_compare(left, ">=", right + 1))
            else:
                guards.append(_compare(right, ">=", left + 1))
        c_exact = [i for i, label in enumerate(labels) if label in (0, 1)]
        d_exact = [i for i, label in enumerate(labels) if label in (0, 2)]
        aug = augment_for_bnat(C.floor_rows(c_exact), D.floor_rows(d_exact), xs, ys)
        ks = [namer.take("K") for _ in aug.k_terms]
        ls = [namer.take("L") for _ in aug.l_terms]
        defs = [pb.Atom(pb.LinearTerm.of(z) + neg, "=", pos) for z, (_, pos, neg) in zip(ks, aug.k_terms)]
        defs += [pb.Atom(pb.LinearTerm.of(z) + neg, "=", pos) for z, (_, pos, neg) in zip(ls, aug.l_terms)]
        core = build_bireg_formula_nat(aug.C, aug.D, xs + ks, ys + ls, settings)
        body = pb.pconj(*defs, core)
        if ks or ls:
            body = pb.Exists(tuple(ks + ls), body)
        branches.append(pb.pconj(*guards, body))
    return pb.pdisj(*branches)


#  Partial graphs

def xi_matrix(C: DegreeMatrix) -> DegreeMatrix:
    """
    [C | M_1 | … | M_m] where M_j repeats column j ℓ times and takes one off
    the k-th copy's row k. ▶ entries saturate at ▶0; an exact 0 stays 0 and
    the matching population is pinned to zero by the caller.
    """
    ell = C.rows
    rows = [list(C.row(i)) for i in range(ell)]
    for j in range(C.cols):
        column = C.column(j)
        for k in range(ell):
            for i in range(ell):
                e = column[i]
                if i == k:
                    e = e.saturating_sub(1) if e.at_least or e.value else EN(0)
                rows[i].append(e)
    return DegreeMatrix.of(rows, C.cols * (ell + 1))


def _from_columns(columns: Sequence[tuple], rows: int) -> DegreeMatrix:
    return DegreeMatrix.of([[col[i] for col in columns] for i in range(rows)], len(columns))


def _pinned_constant(P: PartialGraph, complete: bool, settings: Settings):
    """Both sides consist of pinned vertices: the answer is a constant."""
    left, right = Counter(P.S), Counter(P.T)
    C, D = _from_columns(list(left), P.C.rows), _from_columns(list(right), P.D.rows)
    found = _decide_at_sizes(C, D, tuple(left.values()), tuple(right.values()), complete, settings)
    return pb.TRUE if found else pb.FALSE


def _patterns(column: tuple, pinned: Sequence[tuple], complete: bool) -> list:
    """
    Every way a vertex with degree column `column` can meet the pinned
    vertices: one color (or None) per pinned vertex, with the color allowed
    at that pinned vertex and the totals admitted by the column.
    """
    ell = len(column)
    out, counts, chosen = [], [0] * ell, []

    def grow(s):
        if sum(max(e.value - n, 0) for e, n in zip(column, counts)) > len(pinned) - s:
            return
        if s == len(pinned):
            if all(e.admits(n) for e, n in zip(column, counts)):
                out.append(tuple(chosen))
            return
        options = [] if complete else [None]
        options += [c for c in range(ell)
                    if (pinned[s][c].at_least or pinned[s][c].value)
                    and (column[c].at_least or counts[c] < column[c].value)]
        for c in options:
            if c is not None:
                counts[c] += 1
            chosen.append(c)
            grow(s + 1)
            chosen.pop()
            if c is not None:
                counts[c] -= 1

    grow(0)
    return out


def _pattern_formula(P: PartialGraph, xs, ys, complete: bool, settings: Settings, namer: _Namer):
    """
    One side holds pinned vertices only. Each vertex on the other side is
    classified by its pattern towards them; Z counts the vertices of a part
    showing one pattern, and every pinned vertex sums its degrees over them.
    """
    if P.C.cols:
        P, xs, ys = P.swapped(), ys, xs
    owners = [(P.D.column(k), pb.LinearTerm.of(y)) for k, y in enumerate(ys)]
    owners += [(t, pb.LinearTerm.of(1)) for t in P.T]
    uses = {(s, c): [] for s in range(len(P.S)) for c in range(P.C.rows)}
    zs, atoms, seen = [], [], 0
    for column, size in owners:
        names = []
        for pattern in _patterns(column, P.S, complete):
            seen += 1
            if seen > settings.expansion_budget:
                raise BudgetExceeded("expansion_budget", settings.expansion_budget, seen,
                                     detail="too many neighbourhood patterns")
            z = namer.take("Z")
            names.append(z)
            for s, c in enumerate(pattern):
                if c is not None:
                    uses[(s, c)].append(z)
        zs += names
        atoms.append(_compare(pb.lsum(names), "=", size))
    for s, column in enumerate(P.S):
        for c, e in enumerate(column):
            atoms.append(_compare(pb.lsum(uses[(s, c)]), ">=" if e.at_least else "=", pb.LinearTerm.of(e.value)))
    body = pb.pconj(*atoms)
    return pb.Exists(tuple(zs), body) if zs else body


def build_partial_formula(P: PartialGraph, xs: Optional[Sequence[str]] = None, ys: Optional[Sequence[str]] = None,
                          complete: bool = False, settings: Optional[Settings] = None,
                          namer: Optional[_Namer] = None):
    """
    Ψ_𝒫(X̄,Ȳ): peel one pinned vertex t of T at a time. Its neighbours among
    the pinned S vertices are branched over; its neighbours in part i of color
    j are counted by Z_{i,j}, the rest of part i by Z_i, and the remaining
    graph is again partial over ξ(C). Once a side has no free parts left the
    other side is counted by neighbourhood patterns.
    """
    settings = settings or get_settings()
    namer = namer or _Namer()
    _check_shapes(P.C, P.D)
    xs = list(xs) if xs is not None else _names("X", P.C.cols)
    ys = list(ys) if ys is not None else _names("Y", P.D.cols)
    if not P.C.cols and not P.D.cols:
        return _pinned_constant(P, complete, settings)
    depth = len(P.S) + len(P.T)
    if depth > settings.partial_depth_budget:
        raise BudgetExceeded("partial_depth_budget", settings.partial_depth_budget, depth,
                             detail="too many pinned vertices")

    if not P.S and not P.T:
        return build_bireg_formula_bnat(P.C, P.D, xs, ys, settings, namer)
    if not P.C.cols or not P.D.cols:
        return _pattern_formula(P, xs, ys, complete, settings, namer)
    if not P.T:
        return build_partial_formula(P.swapped(), ys, xs, complete, settings, namer)

    C, ell = P.C, P.C.rows
    if C.cols * (ell + 1) > settings.expansion_budget:
        raise BudgetExceeded("expansion_budget", settings.expansion_budget, C.cols * (ell + 1),
                             detail="partial graph grew too wide")
    g, rest_t = P.T[0], P.T[1:]
    xi = xi_matrix(C)

    choices_per_s = []
    for s in P.S:
        options = [] if complete else [None]
        options += [c for c in range(ell) if (s[c].at_least or s[c].value > 0) and (g[c].at_least or g[c].value > 0)]
        choices_per_s.append(options)

    branches = []
    for choice in itertools.product(*choices_per_s):
        counts = [sum(1 for c in choice if c == color) for color in range(ell)]
        if any(not g[c].at_least and counts[c] > g[c].value for c in range(ell)):
            continue
        new_s = tuple(tuple(e.saturating_sub(1) if c == color else e for c, e in enumerate(s))
                      if color is not None else s for s, color in zip(P.S, choice))
        remaining = [EN(max(g[c].value - counts[c], 0), True) if g[c].at_least else EN(g[c].value - counts[c])
                     for c in range(ell)]

        z_free = [namer.take("Z") for _ in range(C.cols)]
        z_adj = [[namer.take("Z") for _ in range(ell)] for _ in range(C.cols)]
        atoms = []
        for i in range(C.cols):
            atoms.append(pb.Atom(pb.LinearTerm.of(xs[i]), "=", pb.lsum([z_free[i]] + z_adj[i])))
            if complete:
                atoms.append(pb.eq(z_free[i], 0))
            for c in range(ell):
                e = C[c, i]
                if not e.at_least and e.value == 0:
                    atoms.append(pb.eq(z_adj[i][c], 0))
        for c in range(ell):
            total = pb.lsum([z_adj[i][c] for i in range(C.cols)])
            atoms.append(pb.Atom(total, ">=" if remaining[c].at_least else "=", pb.LinearTerm.of(remaining[c].value)))

        inner_vars = z_free + [z for row in z_adj for z in row]
        inner = build_partial_formula(PartialGraph(xi, P.D, new_s, rest_t), inner_vars, ys, complete, settings, namer)
        branches.append(pb.Exists(tuple(inner_vars), pb.pconj(*atoms, inner)))
    return pb.pdisj(*branches) if branches else pb.FALSE


#  Exact reductions

def is_easy_pair(C: DegreeMatrix, D: DegreeMatrix) -> bool:
    """Every left column and right column share a color that is ▶ on both."""
    _check_shapes(C, D)
    return all(any(C[l, j].at_least and D[l, k].at_least for l in range(C.rows))
               for j in range(C.cols) for k in range(D.cols))


def _quiet(entries) -> bool:
    """Nothing is required: every entry is 0 or ▶0."""
    return all(e.value == 0 for e in entries)


def _silent(entries) -> bool:
    return all(e == EN(0) for e in entries)


def _drop(names: list, idx: Sequence[int]) -> list:
    gone = set(idx)
    return [v for j, v in enumerate(names) if j not in gone]


def _merge_columns(X: DegreeMatrix, names: list, namer: _Namer, atoms: list, fresh: list):
    """Parts with equal degree columns are one part of the summed size."""
    groups = {}
    for j in range(X.cols):
        groups.setdefault(X.column(j), []).append(j)
    if len(groups) == X.cols:
        return X, names, False
    columns, merged = [], []
    for column, members in groups.items():
        if len(members) == 1:
            name = names[members[0]]
        else:
            name = namer.take("W")
            fresh.append(name)
            atoms.append(pb.eq(name, pb.lsum([names[j] for j in members])))
        columns.append(column)
        merged.append(name)
    return _from_columns(columns, X.rows), merged, True


@dataclass
class _Reduced:
    C:        DegreeMatrix
    D:        DegreeMatrix
    xs:       list
    ys:       list
    complete: bool
    atoms:    list = field(default_factory=list)
    fresh:    list = field(default_factory=list)

    def wrap(self, core):
        body = pb.pconj(*self.atoms, core)
        return pb.Exists(tuple(self.fresh), body) if self.fresh else body


def _reduce_pair(C: DegreeMatrix, D: DegreeMatrix, xs: list, ys: list, complete: bool, namer: _Namer) -> _Reduced:
    """
    Size-preserving simplifications, repeated to a fixpoint: a complete easy
    pair only needs a simple graph; colors nobody requires and parts that
    take no edges at all drop out; a color one side can never carry empties
    the parts on the other side that need it; equal columns merge.
    """
    red = _Reduced(C, D, list(xs), list(ys), complete)
    changed = True
    while changed:
        changed = False
        if red.complete and is_easy_pair(red.C, red.D):
            red.complete, changed = False, True
        if not red.complete:
            keep = [i for i in range(red.C.rows) if not (_quiet(red.C.row(i)) and _quiet(red.D.row(i)))]
            if len(keep) < red.C.rows:
                red.C, red.D, changed = red.C.take_rows(keep), red.D.take_rows(keep), True
        for i in range(red.C.rows):
            if _silent(red.C.row(i)):
                hit = [k for k in range(red.D.cols) if red.D[i, k].value > 0]
                if hit:
                    red.atoms += [pb.eq(red.ys[k], 0) for k in hit]
                    red.D, red.ys, changed = red.D.drop_columns(hit), _drop(red.ys, hit), True
            if _silent(red.D.row(i)):
                hit = [j for j in range(red.C.cols) if red.C[i, j].value > 0]
                if hit:
                    red.atoms += [pb.eq(red.xs[j], 0) for j in hit]
                    red.C, red.xs, changed = red.C.drop_columns(hit), _drop(red.xs, hit), True
        if not red.complete:
            idle_c = [j for j in range(red.C.cols) if _silent(red.C.column(j))]
            idle_d = [k for k in range(red.D.cols) if _silent(red.D.column(k))]
            if idle_c or idle_d:
                red.C, red.xs = red.C.drop_columns(idle_c), _drop(red.xs, idle_c)
                red.D, red.ys = red.D.drop_columns(idle_d), _drop(red.ys, idle_d)
                changed = True
        red.C, red.xs, merged_c = _merge_columns(red.C, red.xs, namer, red.atoms, red.fresh)
        red.D, red.ys, merged_d = _merge_columns(red.D, red.ys, namer, red.atoms, red.fresh)
        changed = changed or merged_c or merged_d
    return red


def _hall_formula(C: DegreeMatrix, D: DegreeMatrix, xs: list, ys: list):
    """
    The right side requires nothing, so every left vertex is on its own: it
    needs C[i,j] distinct color-i neighbours among the right parts where
    color i is allowed, which Hall's condition over sets of colors decides.
    """
    clauses = []
    for j in range(C.cols):
        demands = [(i, C[i, j].value) for i in range(C.rows) if C[i, j].value]
        need = {}
        for r in range(1, len(demands) + 1):
            for combo in itertools.combinations(demands, r):
                allowed = frozenset(k for k in range(D.cols) for i, _ in combo if D[i, k].at_least)
                need[allowed] = max(need.get(allowed, 0), sum(v for _, v in combo))
        atoms = [_compare(pb.lsum([ys[k] for k in sorted(allowed)]), ">=", pb.LinearTerm.of(n))
                 for allowed, n in sorted(need.items(), key=lambda item: sorted(item[0]))]
        clauses.append(pb.pdisj(pb.eq(xs[j], 0), pb.pconj(*atoms)))
    return pb.pconj(*clauses)


def _reduced_formula(red: _Reduced, settings: Settings):
    C, D, xs, ys = red.C, red.D, red.xs, red.ys
    if C.rows == 0:
        if red.complete:
            return pb.pdisj(_compare(pb.lsum(xs), "=", pb.LinearTerm.of(0)),
                            _compare(pb.lsum(ys), "=", pb.LinearTerm.of(0)))
        return pb.TRUE
    if red.complete:
        return _all_sizes_formula(C, D, xs, ys, True, settings)
    if C.rows == 1 and C.cols == 1 and D.cols == 1:
        return simple_biregular_formula(C[0, 0], D[0, 0], xs[0], ys[0])
    if all(_quiet(D.row(i)) for i in range(D.rows)):
        return _hall_formula(C, D, xs, ys)
    if all(_quiet(C.row(i)) for i in range(C.rows)):
        return _hall_formula(D, C, ys, xs)
    return _all_sizes_formula(C, D, xs, ys, False, settings)


#  All sizes

def build_bireg_formula_full(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                             ys: Optional[Sequence[str]] = None, complete: bool = False,
                             settings: Optional[Settings] = None):
    """Exact for all sizes: the reductions first, then closed forms where they apply."""
    _check_shapes(C, D)
    settings = settings or get_settings()
    xs = list(xs) if xs is not None else _names("X", C.cols)
    ys = list(ys) if ys is not None else _names("Y", D.cols)
    red = _reduce_pair(C, D, xs, ys, complete, _Namer())
    logger.debug("[BIREG] Reduced", before=C.shape, after=red.C.shape, complete=red.complete)
    return red.wrap(_reduced_formula(red, settings))


def _all_sizes_formula(C: DegreeMatrix, D: DegreeMatrix, xs: list, ys: list, complete: bool, settings: Settings):
    """
    ⋁ over column subsets I, J whose parts are pinned to sizes in [0, thr]:
    the pinned vertices become a partial graph, the other parts must be big
    enough. Members are built when the solver reaches them.
    """
    if not complete and not C.has_at_least() and not D.has_at_least():
        return build_bireg_formula_nat(C, D, xs, ys, settings)

    thr = biregular_threshold(C, D)
    if complete:
        thr = max(thr, C.total() + D.total() + 1)

    def member(I, J, values):
        c_rest, d_rest = C.drop_columns(I), D.drop_columns(J)
        x_rest, y_rest = _drop(xs, I), _drop(ys, J)
        if complete and c_rest.cols and d_rest.cols and not is_easy_pair(c_rest, d_rest):
            return pb.FALSE
        S = tuple(C.column(j) for j, count in zip(I, values[:len(I)]) for _ in range(count))
        T = tuple(D.column(k) for k, count in zip(J, values[len(I):]) for _ in range(count))
        partial = PartialGraph(c_rest, d_rest, S, T)
        label = f"partial[{C.text()}|{D.text()}|pins={len(S)},{len(T)}]"
        return pb.pconj(big_enough_formula(c_rest, d_rest, x_rest, y_rest),
                        pb.lazy(lambda: build_partial_formula(partial, x_rest, y_rest, complete, settings), label))

    branches = []
    for I in _subsets(range(C.cols)):
        for J in _subsets(range(D.cols)):
            if not I and not J:
                branches.append(member((), (), ()))
                continue
            pinned = tuple(xs[j] for j in I) + tuple(ys[k] for k in J)
            build = (lambda I, J: lambda values: member(I, J, values))(I, J)
            branches.append(pb.Family(pinned, ((0, thr),) * len(pinned), build, f"pins[{','.join(pinned)}]"))
    return pb.pdisj(*branches)


def _subsets(items) -> list:
    items = list(items)
    return [tuple(c) for r in range(len(items) + 1) for c in itertools.combinations(items, r)]


def build_comp_bireg_formula(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                             ys: Optional[Sequence[str]] = None, settings: Optional[Settings] = None):
    """Complete variant: easy pairs complete any biregular graph, otherwise small parts are pinned."""
    return build_bireg_formula_full(C, D, xs, ys, True, settings)


#  Counting conditions

def edge_balance_violation(C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int]) -> Optional[str]:
    """First per-color edge-count contradiction, if any."""
    for i in range(C.rows):
        live_c = [(C[i, j], M[j]) for j in range(C.cols) if M[j]]
        live_d = [(D[i, k], N[k]) for k in range(D.cols) if N[k]]
        left = sum(e.value * size for e, size in live_c)
        right = sum(e.value * size for e, size in live_d)
        left_exact = not any(e.at_least for e, _ in live_c)
        right_exact = not any(e.at_least for e, _ in live_d)
        if left_exact and right_exact and left != right:
            return f"color {i + 1}: {left} left endpoints vs {right} right endpoints"
        if left_exact and left < right:
            return f"color {i + 1}: exact left total {left} below right floor {right}"
        if right_exact and right < left:
            return f"color {i + 1}: exact right total {right} below left floor {left}"
    return None


def _necessary(C, D, M, N, complete: bool) -> bool:
    if edge_balance_violation(C, D, M, N):
        return False
    for X, own, other in ((C, M, sum(N)), (D, N, sum(M))):
        for j in range(X.cols):
            if not own[j]:
                continue
            column = X.column(j)
            floor = sum(e.value for e in column)
            if floor > other:
                return False
            if complete and not any(e.at_least for e in column) and floor != other:
                return False
    return True



#  Exhaustive search

def _splits(size: int, room: Sequence[int], complete: bool):
    """Vectors s with s_i ≤ room_i and Σ s ≤ size (= size when complete)."""
    def grow(i, left):
        if i == len(room):
            if not complete or left == 0:
                yield ()
            return
        for s in range(min(room[i], left) + 1):
            for tail in grow(i + 1, left - s):
                yield (s,) + tail

    yield from grow(0, size)


class _BipartiteSearch:
    """
    Exact search for a (C,D)-biregular graph. Left vertices are placed one
    at a time; right vertices of the same part with the same per-color
    degrees so far are interchangeable, so a state is a multiset of such
    classes and a state that failed once is never expanded again.
    """

    def __init__(self, C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int], complete: bool,
                 settings: Settings):
        self.C, self.D, self.complete, self.settings = C, D, complete, settings
        self.ell = C.rows
        self.left = [j for j, size in enumerate(M) for _ in range(size)]
        self.edges = [[] for _ in range(self.ell)]
        self.failed = set()
        self.nodes = 0
        self.start, offset = {}, 0
        for k, size in enumerate(N):
            if size:
                self.start[(k, (0,) * self.ell)] = list(range(offset, offset + size))
            offset += size

    def run(self) -> Optional[tuple]:
        if not self._place(0, self.start):
            return None
        return tuple(tuple(sorted(color)) for color in self.edges)

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.settings.solver_node_budget:
            raise BudgetExceeded("solver_node_budget", self.settings.solver_node_budget, self.nodes,
                                 detail="biregular search did not finish")

    def _viable(self, key: tuple, remaining: int) -> bool:
        k, counts = key
        column = self.D.column(k)
        need = sum(max(e.value - n, 0) for e, n in zip(column, counts))
        if need > remaining:
            return False
        if self.complete and not any(e.at_least for e in column):
            return sum(e.value - n for e, n in zip(column, counts)) >= remaining
        return True

    def _place(self, u: int, groups: dict) -> bool:
        self._tick()
        remaining = len(self.left) - u
        state = (u, tuple(sorted((key, len(vs)) for key, vs in groups.items())))
        if state in self.failed:
            return False
        if not all(self._viable(key, remaining) for key in groups):
            self.failed.add(state)
            return False
        if remaining == 0:
            return True
        keys = sorted(groups)
        for choice in self._choices(self.left[u], keys, groups):
            marks = [len(color) for color in self.edges]
            if self._place(u + 1, self._apply(u, keys, groups, choice)):
                return True
            for color, mark in zip(self.edges, marks):
                del color[mark:]
        self.failed.add(state)
        return False

    def _choices(self, j: int, keys: list, groups: dict):
        column = self.C.column(j)
        sizes = [len(groups[key]) for key in keys]
        after = [sum(sizes[idx + 1:]) for idx in range(len(keys))]

        def grow(idx, totals):
            if idx == len(keys):
                if all(e.admits(n) for e, n in zip(column, totals)):
                    yield ()
                return
            if sum(max(e.value - n, 0) for e, n in zip(column, totals)) > sizes[idx] + after[idx]:
                return
            k, counts = keys[idx]
            room = []
            for i, e in enumerate(column):
                takes = self.D[i, k].at_least or counts[i] < self.D[i, k].value
                cap = sizes[idx] if takes else 0
                room.append(cap if e.at_least else min(cap, e.value - totals[i]))
            for split in _splits(sizes[idx], room, self.complete):
                for tail in grow(idx + 1, [n + s for n, s in zip(totals, split)]):
                    yield (split,) + tail

        yield from grow(0, [0] * self.ell)

    def _apply(self, u: int, keys: list, groups: dict, choice: tuple) -> dict:
        moved = {}
        for key, split in zip(keys, choice):
            k, counts = key
            vertices, at = groups[key], 0
            for i, s in enumerate(split):
                if not s:
                    continue
                bumped = counts[:i] + (counts[i] + 1,) + counts[i + 1:]
                taken = vertices[at:at + s]
                at += s
                moved.setdefault((k, bumped), []).extend(taken)
                self.edges[i].extend((u, v) for v in taken)
            if at < len(vertices):
                moved.setdefault(key, []).extend(vertices[at:])
        return moved


@lru_cache(maxsize=65536)
def _search_cached(C: DegreeMatrix, D: DegreeMatrix, M: tuple, N: tuple, complete: bool,
                   settings: Settings) -> Optional[tuple]:
    if not _necessary(C, D, M, N, complete):
        return None
    if sum(M) <= sum(N):
        return _BipartiteSearch(C, D, M, N, complete, settings).run()
    # fewer placement levels with the smaller side on the left
    flipped = _BipartiteSearch(D, C, N, M, complete, settings).run()
    if flipped is None:
        return None
    return tuple(tuple(sorted((u, v) for v, u in color)) for color in flipped)


def search_biregular(C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int], complete: bool = False,
                     settings: Optional[Settings] = None) -> Optional[ColoredBipartiteGraph]:
    """Exhaustive search at concrete sizes: a witness graph, or None when there is none."""
    _check_shapes(C, D, M, N)
    settings = settings or get_settings()
    total = sum(M) + sum(N)
    if total > settings.construction_search_cap:
        raise BudgetExceeded("construction_search_cap", settings.construction_search_cap, total,
                             detail="too many vertices for exhaustive search")
    edges = _search_cached(C, D, tuple(M), tuple(N), complete, settings)
    if edges is None:
        return None
    return ColoredBipartiteGraph(_vertex_parts(M), _vertex_parts(N), edges, C, D, complete)


#  Decision at concrete sizes

def _decide_at_sizes(C: DegreeMatrix, D: DegreeMatrix, M: tuple, N: tuple, complete: bool,
                     settings: Settings) -> bool:
    """Counting conditions, then the realiser, then exhaustive search within its cap."""
    keep_c = [j for j in range(C.cols) if M[j]]
    keep_d = [k for k in range(D.cols) if N[k]]
    C, D = C.take_columns(keep_c), D.take_columns(keep_d)
    M, N = tuple(M[j] for j in keep_c), tuple(N[k] for k in keep_d)
    if not _necessary(C, D, M, N, complete):
        return False
    if not M or not N:
        return True
    if realize(C, D, M, N, complete, settings) is not None:
        return True
    return search_biregular(C, D, M, N, complete, settings) is not None


@lru_cache(maxsize=65536)
def _decide_cached(C, D, M, N, complete, settings) -> bool:
    try:
        return _decide_at_sizes(C, D, M, N, complete, settings)
    except BudgetExceeded as exc:
        if exc.budget != "construction_search_cap":
            raise
    xs, ys = _names("X", C.cols), _names("Y", D.cols)
    formula = build_bireg_formula_full(C, D, xs, ys, complete, settings)
    return pb.evaluate(formula, {**dict(zip(xs, M)), **dict(zip(ys, N))}, settings)


def decide_biregular(C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int],
                     complete: bool = False, settings: Optional[Settings] = None) -> bool:
    """
    Exact: is there a (C,D)-biregular graph of size (M̄,N̄)? Necessary
    counting conditions, the constructive realiser and exhaustive search
    settle small sizes; larger ones evaluate the literal formula.
    """
    _check_shapes(C, D, M, N)
    settings = settings or get_settings()
    return _decide_cached(C, D, tuple(M), tuple(N), complete, settings)


#  Construction

def _vertex_parts(sizes: Sequence[int]) -> tuple:
    parts, start = [], 0
    for size in sizes:
        parts.append(tuple(range(start, start + size)))
        start += size
    return tuple(parts)


def _raise_flexible(targets: list, flexible: list, caps: list, amount: int) -> bool:
    """Distribute `amount` extra degree round robin over flexible vertices, respecting caps."""
    pool = [u for u in range(len(targets)) if flexible[u]]
    while amount > 0:
        progressed = False
        for u in pool:
            if amount == 0:
                break
            if targets[u] < caps[u]:
                targets[u] += 1
                amount -= 1
                progressed = True
        if not progressed:
            return False
    return True


def _realize_color(ltarget: Sequence[int], rtarget: Sequence[int]) -> Optional[list]:
    """
    One color as a simple bipartite graph with the given degrees. Each left
    vertex u starts as a star of ltarget[u] endpoints, taken in order; the
    right endpoints are grouped by target degree d, and endpoint e of a group
    of N vertices is merged into the group's vertex e mod N. Parallel edges
    left by the merge are swapped away.
    """
    if sum(ltarget) != sum(rtarget):
        return None
    by_degree = {}
    for v, d in enumerate(rtarget):
        if d:
            by_degree.setdefault(d, []).append(v)
    right = []
    for d in sorted(by_degree):
        group = by_degree[d]
        right += [group[e % len(group)] for e in range(len(group) * d)]
    left = [u for u, c in enumerate(ltarget) for _ in range(c)]
    return _swap_parallel(Counter(zip(left, right)))


def _swap_parallel(multi: Counter) -> Optional[list]:
    """
    Remove parallel edges: one copy of the least parallel (u,v) and the least
    edge (a,b) with (u,b) and (a,v) absent become (u,b) and (a,v). Degrees
    are unchanged and the number of surplus copies drops every round.
    """
    excess = sum(m - 1 for m in multi.values())
    while excess:
        u, v = min(edge for edge, m in multi.items() if m > 1)
        swap = next(((a, b) for a, b in sorted(multi)
                     if a != u and b != v and (u, b) not in multi and (a, v) not in multi), None)
        if swap is None:
            return None
        multi[(u, v)] -= 1
        multi[swap] -= 1
        if not multi[swap]:
            del multi[swap]
        a, b = swap
        multi[(u, b)] = 1
        multi[(a, v)] = 1
        after = sum(m - 1 for m in multi.values())
        assert after < excess, "parallel-edge swap must shrink the surplus"
        excess = after
    return sorted(multi)


def _combine_layers(layers: list) -> Optional[list]:
    """
    Make the colors disjoint. Layer l is repaired against the union of the
    earlier ones: the least shared pair (u,v) and the least (a,b) of layer l
    with (u,b) and (a,v) unused in every layer become (u,b) and (a,v).
    """
    used = set()
    for layer in layers:
        overlap = sorted(layer & used)
        while overlap:
            u, v = overlap[0]
            taken = used | layer
            swap = next(((a, b) for a, b in sorted(layer)
                         if a != u and b != v and (u, b) not in taken and (a, v) not in taken), None)
            if swap is None:
                return None
            a, b = swap
            layer.difference_update({(u, v), swap})
            layer.update({(u, b), (a, v)})
            after = sorted(layer & used)
            assert len(after) < len(overlap), "layer swap must shrink the overlap"
            overlap = after
        used |= layer
    return layers


def realize(C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int], complete: bool = False,
            settings: Optional[Settings] = None) -> Optional[ColoredBipartiteGraph]:
    """
    Constructive realiser: ▶ entries are raised until each color balances,
    every color is built on its own and the layers are made disjoint; a
    complete graph fills the empty pairs with an easy color. None when it
    cannot certify a graph (the caller falls back).
    """
    _check_shapes(C, D, M, N)
    settings = settings or get_settings()
    n_left, n_right = sum(M), sum(N)
    if n_left + n_right > settings.max_vertices:
        raise BudgetExceeded("max_vertices", settings.max_vertices, n_left + n_right)
    left_parts, right_parts = _vertex_parts(M), _vertex_parts(N)
    lpart = [j for j, p in enumerate(left_parts) for _ in p]
    rpart = [k for k, p in enumerate(right_parts) for _ in p]

    ldeg, rdeg = [0] * n_left, [0] * n_right
    layers = []
    for i in range(C.rows):
        ltarget = [C[i, lpart[u]].value for u in range(n_left)]
        rtarget = [D[i, rpart[v]].value for v in range(n_right)]
        lflex = [C[i, lpart[u]].at_least for u in range(n_left)]
        rflex = [D[i, rpart[v]].at_least for v in range(n_right)]
        lcap = [n_right - ldeg[u] for u in range(n_left)]
        rcap = [n_left - rdeg[v] for v in range(n_right)]
        gap = sum(rtarget) - sum(ltarget)
        if gap > 0 and not _raise_flexible(ltarget, lflex, lcap, gap):
            return None
        if gap < 0 and not _raise_flexible(rtarget, rflex, rcap, -gap):
            return None
        edges = _realize_color(ltarget, rtarget)
        if edges is None:
            logger.warning("[BIREG] Swap repair stalled", color=i + 1, C=C.text(), D=D.text(), M=list(M), N=list(N))
            return None
        for u, v in edges:
            ldeg[u] += 1
            rdeg[v] += 1
        layers.append(set(edges))

    layers = _combine_layers(layers)
    if layers is None:
        logger.warning("[BIREG] Layer repair stalled", C=C.text(), D=D.text(), M=list(M), N=list(N))
        return None

    if complete:
        adjacent = set().union(*layers) if layers else set()
        for u in range(n_left):
            for v in range(n_right):
                if (u, v) in adjacent:
                    continue
                fill = next((l for l in range(C.rows)
                             if C[l, lpart[u]].at_least and D[l, rpart[v]].at_least), None)
                if fill is None:
                    return None
                layers[fill].add((u, v))
                adjacent.add((u, v))

    graph = ColoredBipartiteGraph(left_parts, right_parts, tuple(tuple(sorted(c)) for c in layers), C, D, complete)
    problems = audit_bipartite(graph)
    if problems:
        logger.warning("[BIREG] Realised graph failed its audit", problems=problems[:3])
        return None
    return graph


def audit_bipartite(graph: ColoredBipartiteGraph) -> list:
    """Violated invariants, as readable strings; empty means the graph is a valid witness."""
    problems = []
    n_left, n_right = graph.left_size, graph.right_size
    lpart = {u: j for j, p in enumerate(graph.left_parts) for u in p}
    rpart = {v: k for k, p in enumerate(graph.right_parts) for v in p}
    owner = {}
    for i, color in enumerate(graph.edges):
        for u, v in color:
            if not (0 <= u < n_left and 0 <= v < n_right):
                problems.append(f"edge ({u},{v}) outside the vertex sets")
                continue
            if (u, v) in owner:
                problems.append(f"pair ({u},{v}) carries colors {owner[(u, v)] + 1} and {i + 1}")
            owner[(u, v)] = i
    for i, color in enumerate(graph.edges):
        ldeg, rdeg = [0] * n_left, [0] * n_right
        for u, v in color:
            if 0 <= u < n_left and 0 <= v < n_right:
                ldeg[u] += 1
                rdeg[v] += 1
        for u in range(n_left):
            if not graph.C[i, lpart[u]].admits(ldeg[u]):
                problems.append(f"left {u} has color-{i + 1} degree {ldeg[u]}, needs {graph.C[i, lpart[u]]}")
        for v in range(n_right):
            if not graph.D[i, rpart[v]].admits(rdeg[v]):
                problems.append(f"right {v} has color-{i + 1} degree {rdeg[v]}, needs {graph.D[i, rpart[v]]}")
    if graph.complete and len(owner) != n_left * n_right:
        problems.append(f"not complete: {len(owner)} of {n_left * n_right} pairs carry an edge")
    return problems


def construct_biregular(C: DegreeMatrix, D: DegreeMatrix, M: Sequence[int], N: Sequence[int],
                        complete: bool = False, settings: Optional[Settings] = None) -> ColoredBipartiteGraph:
    """A witness graph: the realiser first, then exhaustive search."""
    _check_shapes(C, D, M, N)
    settings = settings or get_settings()
    M, N = tuple(M), tuple(N)
    graph = realize(C, D, M, N, complete, settings)
    if graph is not None:
        logger.info("[BIREG] Constructed graph", M=list(M), N=list(N), colors=C.rows, method="realize")
        return graph

    if sum(M) + sum(N) <= settings.construction_search_cap:
        graph = search_biregular(C, D, M, N, complete, settings)
        if graph is None:
            raise PreconditionError(f"no (C,D)-biregular graph of size ({list(M)},{list(N)})")
        problems = audit_bipartite(graph)
        if problems:
            raise InternalInconsistency(f"search witness failed its audit: {problems[0]}")
        logger.info("[BIREG] Constructed graph", M=list(M), N=list(N), colors=C.rows, method="search")
        return graph

    if decide_biregular(C, D, M, N, complete, settings):
        raise InternalInconsistency(f"decision says a graph of size ({list(M)},{list(N)}) exists "
                                    f"but construction failed")
    raise PreconditionError(f"no (C,D)-biregular graph of size ({list(M)},{list(N)})")
