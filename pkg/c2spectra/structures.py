"""
structures.py

Finite structures over the universe {0..size-1} and model checking for C², MLC
and QMLC.

Text format (also written by witness construction):
  size 5
  A: 0 1
  E: (2,3) (3,4) (4,2)
Lines starting with '#' are comments.
"""

import re
import structlog
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping, Optional, Sequence

from c2spectra.errors import PreconditionError, UnassignedVariableError
from c2spectra.logic_core import (
    And, Bottom, Diamond, Eq, Exists, MAnd, MAtom, MNot, MTop, Not, Or, Pred,
    QAnd, QExists, QNot, QOr, Rel, Signature, Top,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class FiniteStructure:
    """
    size: universe {0..size-1}
    unary / binary: sorted tuples of (name, sorted elements / pairs); empty
    entries are dropped so equal structures compare equal.
    """
    size:   int
    unary:  tuple = ()
    binary: tuple = ()

    @classmethod
    def build(cls, size: int, unary: Optional[Mapping] = None, binary: Optional[Mapping] = None) -> "FiniteStructure":
        if size < 0:
            raise PreconditionError(f"structure size must be >= 0, got {size}")
        u_items, b_items = [], []
        for name, elems in sorted((unary or {}).items()):
            elems = tuple(sorted(set(int(e) for e in elems)))
            for e in elems:
                if not 0 <= e < size:
                    raise PreconditionError(f"element {e} of '{name}' outside universe of size {size}")
            if elems:
                u_items.append((name, elems))
        for name, pairs in sorted((binary or {}).items()):
            pairs = tuple(sorted(set((int(a), int(b)) for a, b in pairs)))
            for a, b in pairs:
                if not (0 <= a < size and 0 <= b < size):
                    raise PreconditionError(f"pair ({a},{b}) of '{name}' outside universe of size {size}")
            if pairs:
                b_items.append((name, pairs))
        return cls(size, tuple(u_items), tuple(b_items))

    @cached_property
    def _unary_map(self) -> dict:
        return {name: frozenset(elems) for name, elems in self.unary}

    @cached_property
    def _binary_map(self) -> dict:
        return {name: frozenset(pairs) for name, pairs in self.binary}

    @cached_property
    def _successors(self) -> dict:
        table = {}
        for name, pairs in self.binary:
            succ = [[] for _ in range(self.size)]
            for a, b in pairs:
                succ[a].append(b)
            table[name] = succ
        return table

    def pred(self, name: str) -> frozenset:
        return self._unary_map.get(name, frozenset())

    def rel(self, name: str) -> frozenset:
        return self._binary_map.get(name, frozenset())

    def successors(self, name: str, a: int) -> list:
        succ = self._successors.get(name)
        return succ[a] if succ is not None else []

    def unary_names(self) -> list:
        return [name for name, _ in self.unary]

    def binary_names(self) -> list:
        return [name for name, _ in self.binary]


#  Serialisation

def dump_structure(structure: FiniteStructure, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"size {structure.size}")
    for name, elems in structure.unary:
        lines.append(f"{name}: " + " ".join(str(e) for e in elems))
    for name, pairs in structure.binary:
        lines.append(f"{name}: " + " ".join(f"({a},{b})" for a, b in pairs))
    return "\n".join(lines) + "\n"


_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def load_structure(text: str) -> FiniteStructure:
    size = None
    unary, binary = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("size"):
            size = int(line.split()[1])
            continue
        if ":" not in line:
            raise PreconditionError(f"line {lineno}: expected 'name: ...', got '{line}'")
        name, _, body = line.partition(":")
        name, body = name.strip(), body.strip()
        if "(" in body:
            binary[name] = [(int(a), int(b)) for a, b in _PAIR_RE.findall(body)]
        elif body:
            unary[name] = [int(tok) for tok in body.split()]
    if size is None:
        raise PreconditionError("structure text has no 'size N' line")
    return FiniteStructure.build(size, unary, binary)


def rename(structure: FiniteStructure, permutation: Sequence[int]) -> FiniteStructure:
    """Apply the bijection element i ↦ permutation[i]."""
    if sorted(permutation) != list(range(structure.size)):
        raise PreconditionError("rename needs a permutation of the universe")
    unary = {name: [permutation[e] for e in elems] for name, elems in structure.unary}
    binary = {name: [(permutation[a], permutation[b]) for a, b in pairs] for name, pairs in structure.binary}
    return FiniteStructure.build(structure.size, unary, binary)


#  Complete structures (N1)–(N4)

@dataclass(frozen=True)
class CompletenessReport:
    ok:      bool
    clause:  Optional[str] = None
    witness: Optional[tuple] = None
    detail:  str = ""

    def __bool__(self):
        return self.ok


def is_complete(structure: FiniteStructure, sig: Signature) -> CompletenessReport:
    """
    Check (N2) irreflexive, (N3) inverse closure, (N4) disjointness and
    (N1) clique coverage, reporting the first violated clause in that order.
    """
    if not sig.has_inverse_pairing:
        raise PreconditionError("is_complete needs a signature with an inverse pairing")

    for name in sig.binary:
        for a, b in structure.rel(name):
            if a == b:
                return CompletenessReport(False, "N2", (a, b), f"{name} has a self-loop")

    for name in sig.binary:
        inv = structure.rel(sig.inverse_of(name))
        for a, b in structure.rel(name):
            if (b, a) not in inv:
                return CompletenessReport(False, "N3", (a, b), f"{sig.inverse_of(name)} misses ({b},{a})")

    owner = {}
    for name in sig.binary:
        for pair in structure.rel(name):
            if pair in owner:
                return CompletenessReport(False, "N4", pair, f"{owner[pair]} and {name} overlap")
            owner[pair] = name

    for a in range(structure.size):
        for b in range(structure.size):
            if a != b and (a, b) not in owner:
                return CompletenessReport(False, "N1", (a, b), "pair carries no relation")

    return CompletenessReport(True)


#  MLC / QMLC model checking

@lru_cache(maxsize=8192)
def extension(structure: FiniteStructure, mu) -> frozenset:
    """Set of elements satisfying the MLC formula μ (memoised per structure)."""
    if isinstance(mu, MTop):
        return frozenset(range(structure.size))
    if isinstance(mu, MAtom):
        return structure.pred(mu.name)
    if isinstance(mu, MNot):
        return frozenset(range(structure.size)) - extension(structure, mu.body)
    if isinstance(mu, MAnd):
        return extension(structure, mu.left) & extension(structure, mu.right)
    if isinstance(mu, Diamond):
        if mu.count == 0:
            return frozenset(range(structure.size))
        inner = extension(structure, mu.body)
        out = set()
        for a in range(structure.size):
            hits = sum(1 for b in structure.successors(mu.rel, a) if b in inner)
            if hits >= mu.count:
                out.add(a)
        return frozenset(out)
    raise TypeError(f"not an MLC formula: {mu!r}")


def eval_mlc(structure: FiniteStructure, a: int, mu) -> bool:
    if not 0 <= a < structure.size:
        raise PreconditionError(f"element {a} outside universe of size {structure.size}")
    return a in extension(structure, mu)


def eval_qmlc(structure: FiniteStructure, phi) -> bool:
    if isinstance(phi, QExists):
        return len(extension(structure, phi.body)) >= phi.count
    if isinstance(phi, QNot):
        return not eval_qmlc(structure, phi.body)
    if isinstance(phi, QAnd):
        return eval_qmlc(structure, phi.left) and eval_qmlc(structure, phi.right)
    if isinstance(phi, QOr):
        return eval_qmlc(structure, phi.left) or eval_qmlc(structure, phi.right)
    raise TypeError(f"not a QMLC formula: {phi!r}")


#  C² model checking

def eval_c2(structure: FiniteStructure, phi, assignment: Optional[Mapping] = None) -> bool:
    """Standard counting-quantifier satisfaction under a partial {x,y} assignment."""
    env = dict(assignment or {})

    def value(var):
        try:
            return env[var]
        except KeyError:
            raise UnassignedVariableError(f"variable '{var}' is unassigned") from None

    def ev(node) -> bool:
        if isinstance(node, Top):
            return True
        if isinstance(node, Bottom):
            return False
        if isinstance(node, Eq):
            return value(node.left) == value(node.right)
        if isinstance(node, Pred):
            return value(node.var) in structure.pred(node.name)
        if isinstance(node, Rel):
            return (value(node.left), value(node.right)) in structure.rel(node.name)
        if isinstance(node, Not):
            return not ev(node.body)
        if isinstance(node, And):
            return ev(node.left) and ev(node.right)
        if isinstance(node, Or):
            return ev(node.left) or ev(node.right)
        if isinstance(node, Exists):
            if node.count == 0:
                return True
            saved = env.get(node.var, None)
            had = node.var in env
            hits = 0
            try:
                for c in range(structure.size):
                    env[node.var] = c
                    if ev(node.body):
                        hits += 1
                        if hits >= node.count:
                            return True
                return False
            finally:
                if had:
                    env[node.var] = saved
                else:
                    env.pop(node.var, None)
        raise TypeError(f"not a C2 formula: {node!r}")

    return ev(phi)
