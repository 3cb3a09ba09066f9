"""
regdigraph.py

Colored digraphs with prescribed per-part in/out degrees, reduced to the
bipartite case by splitting every vertex into an in-copy and an out-copy.

  C[i,j]  in-degree of color i for vertices of part j
  D[i,j]  out-degree of color i for vertices of part j

Digraphs are irreflexive and antisymmetric across all colors. The complete
variant orients every unordered pair with exactly one colored edge.

Split / merge:
  vertex a of part j  → u_a (left, in-edges, degrees C) and w_a (right, out-edges, degrees D)
  edge a → b          ↔ bipartite edge (u_b, w_a)
  merging fuses u_a with w_a, then swap-repairs loops and then 2-cycles

Small totals are answered at concrete sizes by the realiser and by an
exhaustive search that settles one vertex at a time.
"""

import itertools
import structlog
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from c2spectra import presburger as pb
from c2spectra.biregular import (ColoredBipartiteGraph, _Namer, _check_shapes, _compare, _drop, _merge_columns,
                                 _names, _quiet, _silent, _splits, _vertex_parts, build_bireg_formula_full,
                                 edge_balance_violation, is_easy_pair, realize)
from c2spectra.config import Settings, get_settings
from c2spectra.errors import BudgetExceeded, InternalInconsistency, PreconditionError
from c2spectra.structures import FiniteStructure
from c2spectra.typesys import DegreeMatrix

logger = structlog.get_logger(__name__)


#  Graph type

@dataclass(frozen=True)
class ColoredDigraph:
    parts:    tuple             # tuple of tuples of vertex ids
    edges:    tuple             # per color: sorted tuple of (a, b) meaning a → b
    C:        DegreeMatrix      # in-degrees
    D:        DegreeMatrix      # out-degrees
    complete: bool = False

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.parts)

    @property
    def sizes(self) -> tuple:
        return tuple(len(p) for p in self.parts)

    def to_structure(self) -> FiniteStructure:
        unary = {f"P{j + 1}": part for j, part in enumerate(self.parts)}
        binary = {f"E{i + 1}": list(color) for i, color in enumerate(self.edges)}
        return FiniteStructure.build(self.size, unary, binary)

    def comments(self) -> list:
        return [f"digraph, in C={self.C.text()} out D={self.D.text()}",
                f"part sizes {list(self.sizes)} as P*",
                "complete" if self.complete else "simple"]


#  Split and merge

def split_to_bipartite(graph: ColoredDigraph) -> ColoredBipartiteGraph:
    """u-copies carry in-edges (left, C), w-copies carry out-edges (right, D)."""
    edges = tuple(tuple(sorted((b, a) for a, b in color)) for color in graph.edges)
    return ColoredBipartiteGraph(graph.parts, graph.parts, edges, graph.C, graph.D, False)


class _Arcs:
    """Mutable arc set with per-pair occupancy, used by the merge repair."""

    def __init__(self, colors: list):
        self.colors = [set(c) for c in colors]
        self.owner = {}
        for i, color in enumerate(self.colors):
            for arc in color:
                self.owner.setdefault(arc, []).append(i)

    def arcs(self) -> list:
        return sorted((a, b, i) for i, color in enumerate(self.colors) for a, b in color)

    def bad(self) -> list:
        """Loops first, then the lexicographically larger arc of each 2-cycle."""
        loops = [(a, b, i) for a, b, i in self.arcs() if a == b]
        cycles = [(a, b, i) for a, b, i in self.arcs() if a > b and (b, a) in self.owner]
        return loops + cycles

    def free(self, a: int, b: int) -> bool:
        return a != b and (a, b) not in self.owner and (b, a) not in self.owner

    def move(self, color: int, old: tuple, new: tuple):
        self.colors[color].discard(old)
        owners = self.owner[old]
        owners.remove(color)
        if not owners:
            del self.owner[old]
        self.colors[color].add(new)
        self.owner.setdefault(new, []).append(color)


def merge_to_digraph(bipartite: ColoredBipartiteGraph) -> ColoredDigraph:
    """
    Fuse u_a with w_a and repair. A bad arc a → b of color i is swapped with
    the least arc c → d of the same color such that a → d and c → b are both
    free; out-degrees of a, c and in-degrees of b, d are unchanged.
    """
    if bipartite.sizes[0] != bipartite.sizes[1]:
        raise PreconditionError(f"merge needs equal part sizes, got {bipartite.sizes}")
    arcs = _Arcs([[(w, u) for u, w in color] for color in bipartite.edges])

    while True:
        bad = arcs.bad()
        if not bad:
            break
        before = len(bad)
        repaired = False
        for a, b, i in bad:
            for c, d in sorted(arcs.colors[i]):
                if (c, d) == (a, b) or not arcs.free(a, d) or not arcs.free(c, b):
                    continue
                arcs.move(i, (a, b), (a, d))
                arcs.move(i, (c, d), (c, b))
                if len(arcs.bad()) < before:
                    repaired = True
                    break
                arcs.move(i, (c, b), (c, d))
                arcs.move(i, (a, d), (a, b))
            if repaired:
                break
        if not repaired:
            logger.warning("[REG] Merge repair stalled", bad=before, sizes=list(bipartite.sizes[0]))
            raise PreconditionError(f"merge repair stalled with {before} loops or 2-cycles left")

    edges = tuple(tuple(sorted(color)) for color in arcs.colors)
    return ColoredDigraph(bipartite.left_parts, edges, bipartite.C, bipartite.D, False)


#  Formulas

def regular_threshold(C: DegreeMatrix, D: DegreeMatrix, complete: bool = False) -> int:
    thr = 2 * C.total() * D.total() + 3
    if complete:
        thr = max(thr, C.total() + D.total() + 1)
    return thr


@dataclass
class _Reduced:
    C:        DegreeMatrix
    D:        DegreeMatrix
    xs:       list
    complete: bool
    atoms:    list = field(default_factory=list)
    fresh:    list = field(default_factory=list)

    def wrap(self, core):
        body = pb.pconj(*self.atoms, core)
        return pb.Exists(tuple(self.fresh), body) if self.fresh else body


def _reduce_digraph(C: DegreeMatrix, D: DegreeMatrix, xs: list, complete: bool, namer: _Namer) -> _Reduced:
    """
    Size-preserving simplifications, to a fixpoint: a complete easy system
    only needs a simple digraph; colors nobody requires and parts without
    any arc drop out; a color nobody may receive (or send) empties the parts
    that must send (or receive) it; parts with equal in/out columns merge.
    """
    red = _Reduced(C, D, list(xs), complete)
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
            for silent, other in ((red.C, red.D), (red.D, red.C)):
                if not _silent(silent.row(i)):
                    continue
                hit = [j for j in range(other.cols) if other[i, j].value > 0]
                if hit:
                    red.atoms += [pb.eq(red.xs[j], 0) for j in hit]
                    red.C, red.D, red.xs = red.C.drop_columns(hit), red.D.drop_columns(hit), _drop(red.xs, hit)
                    changed = True
                    break
            if changed:
                break
        if not red.complete:
            idle = [j for j in range(red.C.cols) if _silent(red.C.column(j) + red.D.column(j))]
            if idle:
                red.C, red.D, red.xs = red.C.drop_columns(idle), red.D.drop_columns(idle), _drop(red.xs, idle)
                changed = True
        stacked = red.C.vstack(red.D)
        merged, names, did = _merge_columns(stacked, red.xs, namer, red.atoms, red.fresh)
        if did:
            ell = red.C.rows
            red.C, red.D = merged.take_rows(range(ell)), merged.take_rows(range(ell, 2 * ell))
            red.xs, changed = names, True
    return red


def _small_points(C: DegreeMatrix, D: DegreeMatrix, xs: list, complete: bool, settings: Settings):
    """Totals below the threshold: the finitely many sizes are answered by the native search."""
    thr = regular_threshold(C, D, complete)

    def member(values):
        if sum(values) >= thr:
            return False
        return _decide_at_sizes(C, D, tuple(values), complete, settings)

    label = f"{'comp-' if complete else ''}reg-small[{C.text()}|{D.text()}]"
    return pb.pconj(pb.le(pb.lsum(xs), thr - 1), pb.PointSet(tuple(xs), member, thr - 1, label))


def build_reg_formula(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                      settings: Optional[Settings] = None):
    """
    REG(X̄): below the threshold the exact small set; above it the split
    problem at size (X̄, X̄), since swap repair removes every loop and 2-cycle
    once the parts are that large.
    """
    if C.shape != D.shape:
        raise PreconditionError(f"C is {C.shape} but D is {D.shape}")
    settings = settings or get_settings()
    xs = list(xs) if xs is not None else _names("X", C.cols)
    red = _reduce_digraph(C, D, xs, False, _Namer())
    return red.wrap(_reg_core(red.C, red.D, red.xs, settings))


def _reg_core(C, D, xs, settings):
    if C.rows == 0 or C.cols == 0:
        return pb.TRUE
    thr = regular_threshold(C, D)
    big = pb.ge(pb.lsum(xs), thr)
    return pb.pdisj(_small_points(C, D, xs, False, settings),
                    pb.pconj(big, build_bireg_formula_full(C, D, xs, xs, False, settings)))


def build_comp_reg_formula(C: DegreeMatrix, D: DegreeMatrix, xs: Optional[Sequence[str]] = None,
                           settings: Optional[Settings] = None):
    """
    COMP-REG(X̄). Small totals come from the exact set. Otherwise the parts
    pinned to sizes in [0, thr] are listed; the remaining parts must be
    pairwise easy (each with itself too). With nothing pinned, any regular
    digraph completes; otherwise the pinned vertices are explicit and the
    others are counted by how they meet them.
    """
    if C.shape != D.shape:
        raise PreconditionError(f"C is {C.shape} but D is {D.shape}")
    settings = settings or get_settings()
    xs = list(xs) if xs is not None else _names("X", C.cols)
    red = _reduce_digraph(C, D, xs, True, _Namer())
    if not red.complete:
        return red.wrap(_reg_core(red.C, red.D, red.xs, settings))
    C, D, xs = red.C, red.D, red.xs
    if C.cols == 0:
        return red.wrap(pb.TRUE)
    if C.rows == 0:
        return red.wrap(pb.le(pb.lsum(xs), 1))
    thr = regular_threshold(C, D, complete=True)

    def member(I, values):
        rest = [j for j in range(C.cols) if j not in I]
        if rest and not is_easy_pair(C.take_columns(rest), D.take_columns(rest)):
            return pb.FALSE
        if not I:
            return build_reg_formula(C, D, xs, settings)
        label = f"comp-reg[{C.text()}|{D.text()}|pins={sum(values)}]"
        return pb.lazy(lambda: _pinned_formula(C, D, xs, I, values, settings), label)

    branches = [_small_points(C, D, xs, True, settings)]
    big = pb.ge(pb.lsum(xs), thr)
    for r in range(C.cols + 1):
        for I in itertools.combinations(range(C.cols), r):
            if not I:
                branches.append(pb.pconj(big, member((), ())))
                continue
            pinned = tuple(xs[j] for j in I)
            build = (lambda I: lambda values: member(I, values))(I)
            branches.append(pb.pconj(big, pb.Family(pinned, ((0, thr),) * len(I), build, f"pins[{','.join(pinned)}]")))
    return red.wrap(pb.pdisj(*branches))


def _arc_patterns(k: int, C: DegreeMatrix, D: DegreeMatrix, pinned: Sequence[int]) -> list:
    """
    Ways a vertex of part k meets the pinned vertices in a complete digraph:
    per pinned vertex one (color, direction), "out" meaning an arc towards
    the pinned vertex. Exact entries of part k are never overrun.
    """
    ell = C.rows
    out, ins, outs, chosen = [], [0] * ell, [0] * ell, []

    def grow(s):
        if s == len(pinned):
            out.append(tuple(chosen))
            return
        p = pinned[s]
        for i in range(ell):
            if (D[i, k].at_least or outs[i] < D[i, k].value) and (C[i, p].at_least or C[i, p].value):
                outs[i] += 1
                chosen.append((i, "out"))
                grow(s + 1)
                chosen.pop()
                outs[i] -= 1
            if (C[i, k].at_least or ins[i] < C[i, k].value) and (D[i, p].at_least or D[i, p].value):
                ins[i] += 1
                chosen.append((i, "in"))
                grow(s + 1)
                chosen.pop()
                ins[i] -= 1

    grow(0)
    return out


def _pinned_formula(C: DegreeMatrix, D: DegreeMatrix, xs: list, I: tuple, values: tuple, settings: Settings):
    """
    Complete digraph with the parts in I pinned to `values`. The pinned
    vertices and the arcs among them are explicit; every other vertex is
    counted by its arc pattern towards them, and what its degrees still
    need comes from a simple regular digraph on the rest, which completes
    because the remaining parts are easy.
    """
    pinned = [j for j, count in zip(I, values) for _ in range(count)]
    rest = [j for j in range(C.cols) if j not in I]
    if not rest:
        found = _decide_at_sizes(C, D, tuple(dict(zip(I, values)).get(j, 0) for j in range(C.cols)), True, settings)
        return pb.TRUE if found else pb.FALSE
    if len(pinned) > settings.partial_depth_budget:
        raise BudgetExceeded("partial_depth_budget", settings.partial_depth_budget, len(pinned),
                             detail="too many pinned vertices")

    ell, namer = C.rows, _Namer()
    atoms, zs = [], []
    arcs_in = {(s, i): [] for s in range(len(pinned)) for i in range(ell)}
    arcs_out = {(s, i): [] for s in range(len(pinned)) for i in range(ell)}

    for s, t in itertools.combinations(range(len(pinned)), 2):
        names = []
        for i in range(ell):
            for tail, head in ((s, t), (t, s)):
                if (D[i, pinned[tail]].at_least or D[i, pinned[tail]].value) and \
                        (C[i, pinned[head]].at_least or C[i, pinned[head]].value):
                    b = namer.take("B")
                    names.append(b)
                    arcs_out[(tail, i)].append(b)
                    arcs_in[(head, i)].append(b)
        zs += names
        atoms.append(_compare(pb.lsum(names), "=", pb.LinearTerm.of(1)))

    residual, seen = {}, 0
    for k in rest:
        names = []
        for pattern in _arc_patterns(k, C, D, pinned):
            seen += 1
            if seen > settings.expansion_budget:
                raise BudgetExceeded("expansion_budget", settings.expansion_budget, seen,
                                     detail="too many arc patterns")
            z = namer.take("Z")
            names.append(z)
            sent = Counter(i for i, way in pattern if way == "out")
            got = Counter(i for i, way in pattern if way == "in")
            for s, (i, way) in enumerate(pattern):
                (arcs_in if way == "out" else arcs_out)[(s, i)].append(z)
            column = tuple(C[i, k].saturating_sub(got[i]) for i in range(ell)) + \
                tuple(D[i, k].saturating_sub(sent[i]) for i in range(ell))
            residual.setdefault(column, []).append(z)
        zs += names
        atoms.append(_compare(pb.lsum(names), "=", pb.LinearTerm.of(xs[k])))

    for s, j in enumerate(pinned):
        for i in range(ell):
            for arcs, e in ((arcs_in, C[i, j]), (arcs_out, D[i, j])):
                atoms.append(_compare(pb.lsum(arcs[(s, i)]), ">=" if e.at_least else "=", pb.LinearTerm.of(e.value)))

    ws = [namer.take("W") for _ in residual]
    for w, members in zip(ws, residual.values()):
        atoms.append(pb.eq(w, pb.lsum(members)))
    columns = list(residual)
    c_res = DegreeMatrix.of([[col[i] for col in columns] for i in range(ell)], len(columns))
    d_res = DegreeMatrix.of([[col[ell + i] for col in columns] for i in range(ell)], len(columns))
    inner = build_reg_formula(c_res, d_res, ws, settings)
    return pb.Exists(tuple(zs + ws), pb.pconj(*atoms, inner))


#  Exhaustive search

class _DigraphSearch:
    """
    Exact search for a (C,D)-regular digraph. One vertex at a time settles
    its arcs to all unsettled vertices; unsettled vertices of one part with
    equal in/out degrees so far are interchangeable, so a state is a multiset
    of such classes and a state that failed once is never expanded again.
    """

    def __init__(self, C: DegreeMatrix, D: DegreeMatrix, N: Sequence[int], complete: bool, settings: Settings):
        self.C, self.D, self.complete, self.settings = C, D, complete, settings
        self.ell = C.rows
        self.arcs = [[] for _ in range(self.ell)]
        self.failed = set()
        self.nodes = 0
        self.start, offset = {}, 0
        zero = (0,) * self.ell
        for k, size in enumerate(N):
            if size:
                self.start[(k, zero, zero)] = list(range(offset, offset + size))
            offset += size

    def run(self) -> Optional[tuple]:
        if not self._settle(self.start):
            return None
        return tuple(tuple(sorted(color)) for color in self.arcs)

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.settings.solver_node_budget:
            raise BudgetExceeded("solver_node_budget", self.settings.solver_node_budget, self.nodes,
                                 detail="digraph search did not finish")

    def _entries(self, k: int) -> tuple:
        return self.C.column(k) + self.D.column(k)

    def _viable(self, key: tuple, others: int) -> bool:
        k, ins, outs = key
        entries = self._entries(k)
        counts = ins + outs
        if sum(max(e.value - n, 0) for e, n in zip(entries, counts)) > others:
            return False
        if self.complete and not any(e.at_least for e in entries):
            return sum(e.value - n for e, n in zip(entries, counts)) >= others
        return True

    def _settle(self, groups: dict) -> bool:
        self._tick()
        state = tuple(sorted((key, len(vs)) for key, vs in groups.items()))
        if state in self.failed:
            return False
        total = sum(len(vs) for vs in groups.values())
        if total == 0:
            return True
        if not all(self._viable(key, total - 1) for key in groups):
            self.failed.add(state)
            return False
        first = min(groups)
        a, rest = groups[first][0], {key: list(vs) for key, vs in groups.items()}
        rest[first] = rest[first][1:]
        if not rest[first]:
            del rest[first]
        keys = sorted(rest)
        for choice in self._choices(first, keys, rest):
            marks = [len(color) for color in self.arcs]
            if self._settle(self._apply(a, keys, rest, choice)):
                return True
            for color, mark in zip(self.arcs, marks):
                del color[mark:]
        self.failed.add(state)
        return False

    def _choices(self, own: tuple, keys: list, groups: dict):
        j, ins, outs = own
        entries = self._entries(j)
        have = ins + outs
        ell = self.ell
        sizes = [len(groups[key]) for key in keys]
        after = [sum(sizes[idx + 1:]) for idx in range(len(keys))]

        def grow(idx, totals):
            if idx == len(keys):
                if all(e.admits(n + t) for e, n, t in zip(entries, have, totals)):
                    yield ()
                return
            if sum(max(e.value - n - t, 0) for e, n, t in zip(entries, have, totals)) > sizes[idx] + after[idx]:
                return
            k, w_ins, w_outs = keys[idx]
            room = []
            # slots 0..ℓ-1: arcs into this vertex (w → a), slots ℓ..2ℓ-1: arcs out of it (a → w)
            for slot, e in enumerate(entries):
                i = slot % ell
                if slot < ell:
                    takes = self.D[i, k].at_least or w_outs[i] < self.D[i, k].value
                else:
                    takes = self.C[i, k].at_least or w_ins[i] < self.C[i, k].value
                cap = sizes[idx] if takes else 0
                room.append(cap if e.at_least else min(cap, e.value - have[slot] - totals[slot]))
            for split in _splits(sizes[idx], room, self.complete):
                for tail in grow(idx + 1, [t + s for t, s in zip(totals, split)]):
                    yield (split,) + tail

        yield from grow(0, [0] * (2 * ell))

    def _apply(self, a: int, keys: list, groups: dict, choice: tuple) -> dict:
        ell = self.ell
        moved = {}
        for key, split in zip(keys, choice):
            k, w_ins, w_outs = key
            vertices, at = groups[key], 0
            for slot, s in enumerate(split):
                if not s:
                    continue
                i = slot % ell
                taken = vertices[at:at + s]
                at += s
                if slot < ell:
                    bumped = (k, w_ins, w_outs[:i] + (w_outs[i] + 1,) + w_outs[i + 1:])
                    self.arcs[i].extend((w, a) for w in taken)
                else:
                    bumped = (k, w_ins[:i] + (w_ins[i] + 1,) + w_ins[i + 1:], w_outs)
                    self.arcs[i].extend((a, w) for w in taken)
                moved.setdefault(bumped, []).extend(taken)
            if at < len(vertices):
                moved.setdefault(key, []).extend(vertices[at:])
        return moved


@lru_cache(maxsize=65536)
def _search_cached(C: DegreeMatrix, D: DegreeMatrix, N: tuple, complete: bool, settings: Settings) -> Optional[tuple]:
    if not _necessary(C, D, N, complete):
        return None
    return _DigraphSearch(C, D, N, complete, settings).run()


def search_regular_digraph(C: DegreeMatrix, D: DegreeMatrix, N: Sequence[int], complete: bool = False,
                           settings: Optional[Settings] = None) -> Optional[ColoredDigraph]:
    """Exhaustive search at concrete sizes: a witness digraph, or None when there is none."""
    if C.shape != D.shape:
        raise PreconditionError(f"C is {C.shape} but D is {D.shape}")
    settings = settings or get_settings()
    if sum(N) > settings.construction_search_cap:
        raise BudgetExceeded("construction_search_cap", settings.construction_search_cap, sum(N),
                             detail="too many vertices for exhaustive search")
    arcs = _search_cached(C, D, tuple(N), complete, settings)
    if arcs is None:
        return None
    return ColoredDigraph(_vertex_parts(N), arcs, C, D, complete)


#  Decision

def _necessary(C: DegreeMatrix, D: DegreeMatrix, N: Sequence[int], complete: bool) -> bool:
    if edge_balance_violation(C, D, N, N):
        return False
    n = sum(N)
    for j in range(C.cols):
        if not N[j]:
            continue
        column = C.column(j) + D.column(j)
        floor = sum(e.value for e in column)
        if floor > n - 1:
            return False
        if complete and not any(e.at_least for e in column) and floor != n - 1:
            return False
    return True


def _decide_at_sizes(C: DegreeMatrix, D: DegreeMatrix, N: tuple, complete: bool, settings: Settings) -> bool:
    """Counting conditions, then the realiser, then exhaustive search within its cap."""
    keep = [j for j in range(C.cols) if N[j]]
    C, D, N = C.take_columns(keep), D.take_columns(keep), tuple(N[j] for j in keep)
    if not N:
        return True
    if not _necessary(C, D, N, complete):
        return False
    if _realize_digraph(C, D, N, complete, settings) is not None:
        return True
    return search_regular_digraph(C, D, N, complete, settings) is not None


@lru_cache(maxsize=65536)
def _decide_cached(C, D, N, complete, settings) -> bool:
    try:
        return _decide_at_sizes(C, D, N, complete, settings)
    except BudgetExceeded as exc:
        if exc.budget != "construction_search_cap":
            raise
    xs = _names("X", C.cols)
    formula = build_comp_reg_formula(C, D, xs, settings) if complete else build_reg_formula(C, D, xs, settings)
    return pb.evaluate(formula, dict(zip(xs, N)), settings)


def decide_regular(C: DegreeMatrix, D: DegreeMatrix, N: Sequence[int], complete: bool = False,
                   settings: Optional[Settings] = None) -> bool:
    """Exact: is there a (C,D)-regular digraph (complete if asked) with part sizes N̄?"""
    if C.shape != D.shape:
        raise PreconditionError(f"C is {C.shape} but D is {D.shape}")
    _check_shapes(C, D, N, N)
    settings = settings or get_settings()
    return _decide_cached(C, D, tuple(N), complete, settings)


#  Construction

def _complete_fill(graph: ColoredDigraph) -> Optional[ColoredDigraph]:
    """Orient every empty pair with the least color that is ▶ out of its tail and ▶ into its head."""
    part = {a: j for j, p in enumerate(graph.parts) for a in p}
    colors = [set(c) for c in graph.edges]
    taken = {frozenset(arc) for c in colors for arc in c}
    for a, b in itertools.combinations(range(graph.size), 2):
        if frozenset((a, b)) in taken:
            continue
        placed = False
        for i in range(graph.C.rows):
            for tail, head in ((a, b), (b, a)):
                if graph.D[i, part[tail]].at_least and graph.C[i, part[head]].at_least:
                    colors[i].add((tail, head))
                    placed = True
                    break
            if placed:
                break
        if not placed:
            return None
        taken.add(frozenset((a, b)))
    return ColoredDigraph(graph.parts, tuple(tuple(sorted(c)) for c in colors), graph.C, graph.D, True)


def _realize_digraph(C, D, N, complete: bool, settings: Settings) -> Optional[ColoredDigraph]:
    bipartite = realize(C, D, N, N, False, settings)
    if bipartite is None:
        return None
    try:
        graph = merge_to_digraph(bipartite)
    except PreconditionError:
        return None
    if complete:
        graph = _complete_fill(graph)
        if graph is None:
            return None
    problems = audit_digraph(graph)
    if problems:
        logger.warning("[REG] Realised digraph failed its audit", problems=problems[:3])
        return None
    return graph


def audit_digraph(graph: ColoredDigraph) -> list:
    """Violated invariants as readable strings; empty means valid."""
    problems = []
    n = graph.size
    part = {a: j for j, p in enumerate(graph.parts) for a in p}
    seen = {}
    for i, color in enumerate(graph.edges):
        for a, b in color:
            if not (0 <= a < n and 0 <= b < n):
                problems.append(f"arc {a}->{b} outside the vertex set")
                continue
            if a == b:
                problems.append(f"loop at {a} in color {i + 1}")
            key = frozenset((a, b))
            if key in seen:
                problems.append(f"pair {{{a},{b}}} carries more than one arc")
            seen[key] = i
    for i, color in enumerate(graph.edges):
        indeg, outdeg = [0] * n, [0] * n
        for a, b in color:
            if 0 <= a < n and 0 <= b < n:
                outdeg[a] += 1
                indeg[b] += 1
        for a in range(n):
            if not graph.C[i, part[a]].admits(indeg[a]):
                problems.append(f"vertex {a} has color-{i + 1} in-degree {indeg[a]}, needs {graph.C[i, part[a]]}")
            if not graph.D[i, part[a]].admits(outdeg[a]):
                problems.append(f"vertex {a} has color-{i + 1} out-degree {outdeg[a]}, needs {graph.D[i, part[a]]}")
    if graph.complete and len(seen) != n * (n - 1) // 2:
        problems.append(f"not complete: {len(seen)} of {n * (n - 1) // 2} pairs carry an arc")
    return problems


def construct_regular_digraph(C: DegreeMatrix, D: DegreeMatrix, N: Sequence[int], complete: bool = False,
                              settings: Optional[Settings] = None) -> ColoredDigraph:
    """A witness digraph: split, realise, merge and repair; exhaustive search otherwise."""
    if C.shape != D.shape:
        raise PreconditionError(f"C is {C.shape} but D is {D.shape}")
    _check_shapes(C, D, N, N)
    settings = settings or get_settings()
    N = tuple(N)
    if sum(N) > settings.max_vertices:
        raise BudgetExceeded("max_vertices", settings.max_vertices, sum(N))
    if sum(N) == 0:
        return ColoredDigraph(_vertex_parts(N), tuple(() for _ in range(C.rows)), C, D, complete)

    graph = _realize_digraph(C, D, N, complete, settings) if _necessary(C, D, N, complete) else None
    if graph is not None:
        logger.info("[REG] Constructed digraph", sizes=list(N), colors=C.rows, method="realize")
        return graph

    if sum(N) <= settings.construction_search_cap:
        graph = search_regular_digraph(C, D, N, complete, settings)
        if graph is None:
            raise PreconditionError(f"no (C,D)-regular digraph with part sizes {list(N)}")
        problems = audit_digraph(graph)
        if problems:
            raise InternalInconsistency(f"search witness failed its audit: {problems[0]}")
        logger.info("[REG] Constructed digraph", sizes=list(N), colors=C.rows, method="search")
        return graph

    if decide_regular(C, D, N, complete, settings):
        logger.error("[REG] Construction gap", sizes=list(N), C=C.text(), D=D.text())
        raise InternalInconsistency(f"decision says a digraph with sizes {list(N)} exists but construction failed")
    raise PreconditionError(f"no (C,D)-regular digraph with part sizes {list(N)}")
