"""
typesys.py

Types, consistent rows and degree matrices for a QMLC sentence.

  ExtendedNat    → d (exactly d) or ▶d (at least d)
  DegreeMatrix   → ℓ×m matrix over ExtendedNat, text form "2,>1;0,1"
  Type           → bitmask over subformula_closure (bit 2i positive, 2i+1 negated;
                   compact types leave pairs nobody looks at with neither bit)
  ConsistentFn   → the row f(T,·,·) of one source type T
  TypeTable      → types + rows per type, pruned to a fixpoint

Consistent rows range over {0..K} ∪ {▶K}. Tables keep only the ⪯-weakest
of them: every entry that no negated modality pins to an exact value is ▶c
with c as small as the positive modalities allow. Any element of a model
dominates one of them, and any realisation of one of them gives every
element the type it was assigned.
"""

import itertools
import structlog
import numpy as np
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from c2spectra.config import Settings, get_settings
from c2spectra.errors import BudgetExceeded, PreconditionError
from c2spectra.logic_core import (
    Diamond, MAnd, MAtom, MNot, MTop, QAnd, QExists, QNot, Signature,
    max_count, qmlc_bodies, subformula_closure,
)
from c2spectra.structures import FiniteStructure, extension

logger = structlog.get_logger(__name__)


#  ExtendedNat

@dataclass(frozen=True)
class ExtendedNat:
    value:    int
    at_least: bool = False

    def __post_init__(self):
        if self.value < 0:
            raise PreconditionError(f"ExtendedNat value must be >= 0, got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "ExtendedNat":
        text = str(text).strip()
        if text[:1] in (">", "▶"):
            return cls(int(text[1:]), True)
        return cls(int(text))

    @classmethod
    def coerce(cls, item) -> "ExtendedNat":
        if isinstance(item, ExtendedNat):
            return item
        if isinstance(item, str):
            return cls.parse(item)
        return cls(int(item))

    @property
    def floor(self) -> int:
        return self.value

    def __add__(self, other):
        other = ExtendedNat.coerce(other)
        return ExtendedNat(self.value + other.value, self.at_least or other.at_least)

    __radd__ = __add__

    def saturating_sub(self, d: int) -> "ExtendedNat":
        """(▶c) − d = ▶max(c−d, 0); an exact entry must stay non-negative."""
        if self.at_least:
            return ExtendedNat(max(self.value - d, 0), True)
        if self.value < d:
            raise PreconditionError(f"cannot subtract {d} from exact entry {self.value}")
        return ExtendedNat(self.value - d)

    def admits(self, n: int) -> bool:
        return n == self.value or (self.at_least and n >= self.value)

    def weaker_or_equal(self, other: "ExtendedNat") -> bool:
        """self ⪯ other: every count admitted by other is admitted by self."""
        if other.at_least:
            return self.at_least and self.value <= other.value
        return self.admits(other.value)

    def text(self) -> str:
        return f">{self.value}" if self.at_least else str(self.value)

    def __str__(self):
        return f"▶{self.value}" if self.at_least else str(self.value)


EN = ExtendedNat


#  DegreeMatrix

@dataclass(frozen=True)
class DegreeMatrix:
    """ℓ×m matrix over ExtendedNat; rows are edge colors, columns are parts."""
    entries: tuple
    cols:    int

    @classmethod
    def of(cls, rows, cols: Optional[int] = None) -> "DegreeMatrix":
        rows = tuple(tuple(EN.coerce(e) for e in row) for row in rows)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != cols:
                raise PreconditionError(f"ragged matrix: expected {cols} columns, got {len(row)}")
        return cls(rows, cols)

    @classmethod
    def parse(cls, text: str) -> "DegreeMatrix":
        text = text.strip()
        if not text:
            return cls((), 0)
        rows = [[EN.parse(tok) for tok in row.split(",") if tok.strip()] for row in text.split(";")]
        return cls.of(rows)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DegreeMatrix":
        return cls.of([[EN(0)] * cols for _ in range(rows)], cols)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def __getitem__(self, index) -> ExtendedNat:
        i, j = index
        return self.entries[i][j]

    def row(self, i: int) -> tuple:
        return self.entries[i]

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.entries)

    def floor(self) -> np.ndarray:
        return np.array([[e.value for e in row] for row in self.entries], dtype=np.int64).reshape(self.rows, self.cols)

    def total(self) -> int:
        """C·1̄ = sum of all floors."""
        return int(sum(e.value for row in self.entries for e in row))

    def has_at_least(self) -> bool:
        return any(e.at_least for row in self.entries for e in row)

    def row_has_at_least(self, i: int) -> bool:
        return any(e.at_least for e in self.entries[i])

    def take_columns(self, idx: Sequence[int]) -> "DegreeMatrix":
        return DegreeMatrix.of([[row[j] for j in idx] for row in self.entries], len(idx))

    def drop_columns(self, idx: Sequence[int]) -> "DegreeMatrix":
        drop = set(idx)
        return self.take_columns([j for j in range(self.cols) if j not in drop])

    def take_rows(self, idx: Sequence[int]) -> "DegreeMatrix":
        return DegreeMatrix.of([self.entries[i] for i in idx], self.cols)

    def drop_row(self, i: int) -> "DegreeMatrix":
        return self.take_rows([k for k in range(self.rows) if k != i])

    def hstack(self, other: "DegreeMatrix") -> "DegreeMatrix":
        if self.rows != other.rows:
            raise PreconditionError("hstack needs equal row counts")
        return DegreeMatrix.of([a + b for a, b in zip(self.entries, other.entries)], self.cols + other.cols)

    def vstack(self, other: "DegreeMatrix") -> "DegreeMatrix":
        if self.cols != other.cols:
            raise PreconditionError("vstack needs equal column counts")
        return DegreeMatrix.of(self.entries + other.entries, self.cols)

    def floor_rows(self, rows: Sequence[int]) -> "DegreeMatrix":
        """C(I): rows in I replaced by their floors."""
        keep = set(rows)
        return DegreeMatrix.of(
            [[EN(e.value) if i in keep else e for e in row] for i, row in enumerate(self.entries)], self.cols)

    def text(self) -> str:
        return ";".join(",".join(e.text() for e in row) for row in self.entries)

    def pretty(self) -> str:
        cells = [[str(e) for e in row] for row in self.entries]
        width = max((len(c) for row in cells for c in row), default=1)
        return "\n".join("[ " + " ".join(c.rjust(width) for c in row) + " ]" for row in cells)


#  Types

@dataclass(frozen=True)
class Type:
    index: int
    mask:  int

    def holds(self, pair: int) -> bool:
        return bool((self.mask >> (2 * pair)) & 1)

    def refutes(self, pair: int) -> bool:
        return bool((self.mask >> (2 * pair + 1)) & 1)

    def decided(self, pair: int) -> bool:
        return self.holds(pair) or self.refutes(pair)


class _Closure:
    """Index helpers over subformula_closure (pairs of positive/negated forms)."""

    def __init__(self, closure: tuple):
        self.closure = closure
        self.positives = closure[0::2]
        self.pair_of = {mu: i for i, mu in enumerate(self.positives)}

    def value(self, t: Type, mu) -> Optional[bool]:
        """Truth of μ in T; None when T leaves μ undecided."""
        if isinstance(mu, MTop):
            return True
        if isinstance(mu, MNot):
            inner = self.value(t, mu.body)
            return None if inner is None else not inner
        i = self.pair_of[mu]
        if t.holds(i):
            return True
        if t.refutes(i):
            return False
        return None

    def holds(self, t: Type, mu) -> bool:
        return self.value(t, mu) is True

    def members(self, t: Type) -> list:
        return [self.closure[2 * i if t.holds(i) else 2 * i + 1]
                for i in range(len(self.positives)) if t.decided(i)]


def _top_level_forbidden(phi) -> list:
    """Bodies μ of top-level conjuncts ¬E^1[μ]: no element may satisfy μ."""
    if isinstance(phi, QAnd):
        return _top_level_forbidden(phi.left) + _top_level_forbidden(phi.right)
    if isinstance(phi, QNot) and isinstance(phi.body, QExists) and phi.body.count == 1:
        return [phi.body.body]
    return []


class _Decider:
    """Three-valued evaluation of closure formulas under a partial assignment of the decision atoms."""

    def __init__(self, phi, idx: _Closure):
        self.idx = idx
        self.decisions, self.forced_true = [], set()
        for i, mu in enumerate(idx.positives):
            if isinstance(mu, MTop) or (isinstance(mu, Diamond) and mu.count == 0):
                self.forced_true.add(i)
            elif isinstance(mu, (MAtom, Diamond)):
                self.decisions.append(i)
        self.monotone = []
        for i, mu in enumerate(idx.positives):
            if isinstance(mu, Diamond) and mu.count >= 2:
                lower = Diamond(mu.rel, mu.count - 1, mu.body)
                if lower in idx.pair_of:
                    self.monotone.append((i, idx.pair_of[lower]))
        self.forbidden = _top_level_forbidden(phi)

    def value(self, mu, assign: dict) -> Optional[bool]:
        if isinstance(mu, MTop):
            return True
        if isinstance(mu, MNot):
            inner = self.value(mu.body, assign)
            return None if inner is None else not inner
        if isinstance(mu, MAnd):
            left, right = self.value(mu.left, assign), self.value(mu.right, assign)
            if left is False or right is False:
                return False
            if left is None or right is None:
                return None
            return True
        i = self.idx.pair_of[mu]
        if i in self.forced_true:
            return True
        return assign.get(i)

    def violates(self, assign: dict) -> bool:
        for hi, lo in self.monotone:
            if assign.get(hi) is True and assign.get(lo) is False:
                return True
        return any(self.value(mu, assign) is True for mu in self.forbidden)

    def mask(self, assign: dict) -> int:
        mask = 0
        for i, mu in enumerate(self.idx.positives):
            v = self.value(mu, assign)
            if v is not None:
                mask |= 1 << (2 * i if v else 2 * i + 1)
        return mask


class _Leaves:
    """Visit and leaf counters shared by both enumerations."""

    def __init__(self, settings: Settings, atoms: int):
        self.settings, self.atoms = settings, atoms
        self.visits = 0
        self.found = []

    def visit(self):
        self.visits += 1
        if self.visits > 2 ** self.settings.max_free_atoms:
            raise BudgetExceeded("max_free_atoms", self.settings.max_free_atoms, self.atoms,
                                 detail="type enumeration exceeds the free-atom budget")

    def add(self, mask: int):
        self.found.append(mask)
        if len(self.found) > self.settings.max_types * 64:
            raise BudgetExceeded("max_types", self.settings.max_types, len(self.found),
                                 detail="too many candidate types")


def enumerate_types(phi, extra_atoms: Sequence = (), settings: Optional[Settings] = None) -> list:
    """
    All types of φ in canonical order (decision atoms in closure order,
    true before false), skipping types that violate ◇^{k+1}μ → ◇^kμ or a
    top-level universal ¬E^1[μ].
    """
    settings = settings or get_settings()
    idx = _Closure(subformula_closure(phi, extra_atoms))
    decider = _Decider(phi, idx)
    decisions = decider.decisions
    leaves = _Leaves(settings, len(decisions))
    assign = {}

    def dfs(k):
        leaves.visit()
        if decider.violates(assign):
            return
        if k == len(decisions):
            leaves.add(decider.mask(assign))
            return
        for choice in (True, False):
            assign[decisions[k]] = choice
            dfs(k + 1)
        del assign[decisions[k]]

    dfs(0)
    types = [Type(index, mask) for index, mask in enumerate(leaves.found)]
    logger.info("[TYPES] Enumerated types", closure_pairs=len(idx.positives), decision_atoms=len(decisions),
                types=len(types))
    return types


def _surface_atoms(mu) -> list:
    """Decision atoms μ is evaluated on, without entering modal bodies."""
    if isinstance(mu, (MAtom, Diamond)):
        return [mu]
    if isinstance(mu, MNot):
        return _surface_atoms(mu.body)
    if isinstance(mu, MAnd):
        return _surface_atoms(mu.left) + _surface_atoms(mu.right)
    return []


def enumerate_compact_types(phi, extra_atoms: Sequence = (), settings: Optional[Settings] = None) -> list:
    """
    Coarsest types that still fix every formula the sentence looks at: the
    counting-quantifier bodies, the extra atoms and every modal body. Each
    type is a leaf of a decision tree that branches on one atom of the first
    undecided such formula (unary atoms first); atoms no leaf depends on are
    left undecided and carry neither bit. The leaves partition the full
    types, so spectra are unchanged.
    """
    settings = settings or get_settings()
    idx = _Closure(subformula_closure(phi, extra_atoms))
    decider = _Decider(phi, idx)
    decision_set = set(decider.decisions)

    relevant = list(dict.fromkeys(
        qmlc_bodies(phi) + list(extra_atoms) + [mu.body for mu in idx.positives if isinstance(mu, Diamond)]))
    atoms_of = {}
    for mu in relevant:
        atoms = [idx.pair_of[a] for a in _surface_atoms(mu) if idx.pair_of[a] in decision_set]
        unary = [i for i in atoms if isinstance(idx.positives[i], MAtom)]
        atoms_of[mu] = list(dict.fromkeys(unary + atoms))

    leaves = _Leaves(settings, len(decider.decisions))
    assign = {}

    def dfs():
        leaves.visit()
        if decider.violates(assign):
            return
        pending = next((mu for mu in relevant if decider.value(mu, assign) is None), None)
        if pending is None:
            leaves.add(decider.mask(assign))
            return
        atom = next(i for i in atoms_of[pending] if i not in assign)
        for choice in (True, False):
            assign[atom] = choice
            dfs()
        del assign[atom]

    dfs()
    types = [Type(index, mask) for index, mask in enumerate(leaves.found)]
    logger.info("[TYPES] Enumerated compact types", closure_pairs=len(idx.positives),
                relevant=len(relevant), types=len(types))
    return types


#  Consistent rows

@dataclass(frozen=True)
class ConsistentFn:
    """Row f(T,·,·) of the source type: entries[r][t] = f(T, relations[r], types[t])."""
    source:  int
    entries: tuple

    def __call__(self, relation: int, target: int) -> ExtendedNat:
        return self.entries[relation][target]

    def weaker_or_equal(self, other: "ConsistentFn") -> bool:
        return all(a.weaker_or_equal(b)
                   for row_a, row_b in zip(self.entries, other.entries)
                   for a, b in zip(row_a, row_b))


def _modal_constraints(idx: _Closure, types: Sequence[Type], t: Type, relation: str):
    """(positive, negative) lists of (target positions, bound) for T and one relation."""
    positive, negative = [], []
    for i, mu in enumerate(idx.positives):
        if not isinstance(mu, Diamond) or mu.rel != relation or mu.count == 0:
            continue
        support = tuple(k for k, target in enumerate(types) if idx.holds(target, mu.body))
        if t.holds(i):
            positive.append((support, mu.count))
        elif t.refutes(i):
            negative.append((support, mu.count - 1))
    return positive, negative


def _minimal_covers(free: Sequence[int], demands: list, cap: int) -> list:
    """Componentwise-minimal c ∈ ℕ^free with Σ_{k∈S} c_k ≥ need for every (S, need)."""
    results = set()

    def grow(vector):
        for support, need in demands:
            got = sum(vector[k] for k in support if k in vector)
            if got < need:
                for k in support:
                    if k in vector and vector[k] < cap:
                        vector[k] += 1
                        grow(vector)
                        vector[k] -= 1
                return
        results.add(tuple(vector[k] for k in free))

    for support, need in demands:
        if need > 0 and not any(k in free for k in support):
            return []
    grow({k: 0 for k in free})
    minimal = [v for v in results
               if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in results)]
    return sorted(minimal, reverse=True)


def _relation_vectors_dominant(m: int, positive: list, negative: list, K: int) -> list:
    exact = sorted({k for support, _ in negative for k in support})
    limit = {k: min(bound for support, bound in negative if k in support) for k in exact}
    free = [k for k in range(m) if k not in limit]

    exact_choices = []

    def pick(pos, chosen):
        if pos == len(exact):
            exact_choices.append(dict(chosen))
            return
        k = exact[pos]
        for v in range(limit[k] + 1):
            chosen[k] = v
            if all(sum(chosen.get(q, 0) for q in support) <= bound for support, bound in negative):
                pick(pos + 1, chosen)
        chosen.pop(k, None)

    if any(bound < 0 for _, bound in negative):
        return []
    pick(0, {})

    out = []
    for chosen in exact_choices:
        demands = [(support, need - sum(chosen.get(k, 0) for k in support)) for support, need in positive]
        demands = [(tuple(k for k in support if k not in limit), need) for support, need in demands if need > 0]
        for cover in _minimal_covers(free, demands, K):
            vector = [None] * m
            for k, v in chosen.items():
                vector[k] = EN(v)
            for k, c in zip(free, cover):
                vector[k] = EN(c, True)
            out.append(tuple(vector))
    return out


def _relation_vectors_full(m: int, positive: list, negative: list, K: int) -> list:
    codomain = [EN(v) for v in range(K + 1)] + [EN(K, True)]
    out = []
    for vector in itertools.product(codomain, repeat=m):
        if all(sum(vector[k].value for k in support) >= need for support, need in positive) and \
           all(all(not vector[k].at_least for k in support) and sum(vector[k].value for k in support) <= bound
               for support, bound in negative):
            out.append(vector)
    return out


def enumerate_consistent_fns(closure: tuple, types: Sequence[Type], relations: Sequence[str], K: int,
                             dominant_only: bool = False,
                             settings: Optional[Settings] = None) -> Iterator[ConsistentFn]:
    """
    Stream consistent rows, source type by source type, in a deterministic order.

    By default every entry ranges over {0..K} ∪ {▶K}. With dominant_only the
    stream holds just the ⪯-weakest rows (entries d or ▶c for any c), which
    is what TypeTable keeps: every row of the full stream dominates one of
    them and the matrices built from them describe the same models.
    """
    settings = settings or get_settings()
    idx = _Closure(closure)
    builder = _relation_vectors_dominant if dominant_only else _relation_vectors_full
    streamed = 0
    for t in types:
        per_relation = []
        for relation in relations:
            positive, negative = _modal_constraints(idx, types, t, relation)
            per_relation.append(builder(len(types), positive, negative, K))
        for combo in itertools.product(*per_relation):
            streamed += 1
            if streamed > settings.max_rows:
                raise BudgetExceeded("max_rows", settings.max_rows, streamed, detail="too many consistent rows")
            yield ConsistentFn(t.index, tuple(combo))


def is_consistent(closure: tuple, types: Sequence[Type], fn: ConsistentFn, relations: Sequence[str]) -> bool:
    idx = _Closure(closure)
    t = types[fn.source]
    for r, relation in enumerate(relations):
        positive, negative = _modal_constraints(idx, types, t, relation)
        row = fn.entries[r]
        for support, need in positive:
            if sum(row[k].value for k in support) < need:
                return False
        for support, bound in negative:
            if any(row[k].at_least for k in support) or sum(row[k].value for k in support) > bound:
                return False
    return True


#  Observation on concrete structures

def type_of(structure: FiniteStructure, a: int, closure: tuple, types: Sequence[Type]) -> Optional[int]:
    idx = _Closure(closure)
    mask = 0
    for i, mu in enumerate(idx.positives):
        mask |= 1 << (2 * i if a in extension(structure, mu) else 2 * i + 1)
    for t in types:
        if t.mask & ~mask == 0:
            return t.index
    return None


def observed_row(structure: FiniteStructure, a: int, closure: tuple, types: Sequence[Type],
                 relations: Sequence[str], K: int) -> ConsistentFn:
    """Out-degree row of element a, saturated at K (counts ≥ K become ▶K)."""
    labels = [type_of(structure, b, closure, types) for b in range(structure.size)]
    position = {t.index: k for k, t in enumerate(types)}
    entries = []
    for relation in relations:
        counts = [0] * len(types)
        for b in structure.successors(relation, a):
            if labels[b] is not None:
                counts[position[labels[b]]] += 1
        entries.append(tuple(EN(K, True) if c >= K else EN(c) for c in counts))
    source = labels[a]
    return ConsistentFn(source if source is not None else -1, tuple(entries))


def _admits_one(e: ExtendedNat) -> bool:
    return e.at_least or e.value > 0


def _prune_dead_rows(types: Sequence[Type], rows: dict, pairs: int) -> dict:
    """
    Drop rows that demand an r-neighbour of type T when no row of T admits
    an r̄-neighbour of the source type, until nothing changes. A model
    only uses rows that reciprocate each other, so none of those is dropped.
    """
    rows = {src: list(fns) for src, fns in rows.items()}
    while True:
        answers = set()
        for src, fns in rows.items():
            for fn in fns:
                for r, row in enumerate(fn.entries):
                    for k, e in enumerate(row):
                        if _admits_one(e):
                            answers.add((types[k].index, r, src))

        dropped = 0
        for src, fns in rows.items():
            keep = [fn for fn in fns
                    if all((src, (r + pairs) % (2 * pairs), types[k].index) in answers
                           for r, row in enumerate(fn.entries) for k, e in enumerate(row) if e.value > 0)]
            dropped += len(fns) - len(keep)
            rows[src] = keep
        if not dropped:
            return rows
        logger.debug("[TYPES] Dropped unreciprocated rows", rows=dropped)


#  Type table

def relation_order(sig: Signature) -> tuple:
    """R_1..R_ℓ followed by R̄_1..R̄_ℓ, from the inverse pairing."""
    firsts = tuple(r for r, _ in sig.inverse_pairs)
    seconds = tuple(rbar for _, rbar in sig.inverse_pairs)
    return firsts + seconds


@dataclass
class TypeTable:
    closure:   tuple
    types:     list
    relations: tuple
    K:         int
    rows:      dict = field(default_factory=dict)

    @property
    def pairs(self) -> int:
        return len(self.relations) // 2

    @classmethod
    def build(cls, phi, sig: Signature, extra_atoms: Sequence = (), settings: Optional[Settings] = None) -> "TypeTable":
        """Types and dominant rows, pruning dead rows and row-less types until nothing changes."""
        settings = settings or get_settings()
        if not sig.has_inverse_pairing:
            raise PreconditionError("type tables need a completed signature")
        closure = subformula_closure(phi, extra_atoms)
        relations = relation_order(sig)
        K = max_count(phi)
        enumerate_ = enumerate_compact_types if settings.compact_types else enumerate_types
        types = enumerate_(phi, extra_atoms, settings)

        while True:
            rows = {}
            for fn in enumerate_consistent_fns(closure, types, relations, K, True, settings):
                rows.setdefault(fn.source, []).append(fn)
                if len(rows[fn.source]) > settings.max_rows_per_type:
                    raise BudgetExceeded("max_rows_per_type", settings.max_rows_per_type, len(rows[fn.source]),
                                         detail="too many consistent rows for one type")
            rows = _prune_dead_rows(types, rows, len(relations) // 2)
            alive = [t for t in types if rows.get(t.index)]
            if len(alive) == len(types):
                break
            logger.debug("[TYPES] Pruned row-less types", before=len(types), after=len(alive))
            types = alive

        if len(types) > settings.max_types:
            raise BudgetExceeded("max_types", settings.max_types, len(types), detail="too many types")

        # reindex so that type positions and indices agree
        remap = {t.index: k for k, t in enumerate(types)}
        types = [Type(k, t.mask) for k, t in enumerate(types)]
        rows = {remap[src]: [ConsistentFn(remap[src], fn.entries) for fn in fns] for src, fns in rows.items()}
        table = cls(closure, types, relations, K, rows)
        logger.info("[TYPES] Type table ready", types=len(types), rows=sum(len(r) for r in rows.values()), K=K)
        return table

    def holds(self, t: int, mu) -> bool:
        return _Closure(self.closure).holds(self.types[t], mu)

    def members(self, t: int) -> list:
        return _Closure(self.closure).members(self.types[t])

    def type_of(self, structure: FiniteStructure, a: int) -> Optional[int]:
        return type_of(structure, a, self.closure, self.types)

    def dump(self) -> str:
        from c2spectra.logic_core import print_mlc
        lines = [f"# relations: {' '.join(self.relations)}", f"# K = {self.K}", f"types {len(self.types)}"]
        for t in self.types:
            members = [print_mlc(mu) for mu in self.members(t.index) if not isinstance(mu, MNot)]
            lines.append(f"T{t.index}: {{{', '.join(members)}}}")
            for k, fn in enumerate(self.rows.get(t.index, [])):
                cells = " | ".join(" ".join(str(e) for e in row) for row in fn.entries)
                lines.append(f"  f{k}: {cells}")
        return "\n".join(lines) + "\n"


#  Matrices

def build_type_matrices(table: TypeTable, source: int, target: Optional[int] = None) -> tuple:
    """
    (D_T, D̄_T) for a single type, or (D_{S→T}, D̄_{S→T}) for a pair.
    Columns follow the rows of the type whose population the matrix counts.
    """
    ell = table.pairs
    if target is None or target == source:
        fns = table.rows.get(source, [])
        if not fns:
            raise PreconditionError(f"type {source} has no rows")
        d = DegreeMatrix.of([[fn(i, source) for fn in fns] for i in range(ell)], len(fns))
        dbar = DegreeMatrix.of([[fn(ell + i, source) for fn in fns] for i in range(ell)], len(fns))
        return d, dbar

    s_fns, t_fns = table.rows.get(source, []), table.rows.get(target, [])
    if not s_fns or not t_fns:
        raise PreconditionError("both types need rows")
    d = DegreeMatrix.of([[fn(i, target) for fn in s_fns] for i in range(2 * ell)], len(s_fns))
    order = [ell + i for i in range(ell)] + list(range(ell))
    dbar = DegreeMatrix.of([[fn(r, source) for fn in t_fns] for r in order], len(t_fns))
    return d, dbar
