"""
normalize.py

C² → QMLC compilation front half:

  completize        → profile relations so every model is a complete structure
  to_normal_form    → quantifiers of shape ∃^k z θ(z) or ∃^k w (r(z,w) ∧ θ(w))
  to_qmlc           → ∃^k z θ ↦ E^k [F θ],  ∃^k w (r(z,w) ∧ θ) ↦ <>_r^k F θ
  push_negations    → negations sit directly on basic E^k nodes

Completion scheme for base relations R_1..R_b used by the sentence:
  profile of an ordered pair (a,b), a≠b  = bits (R_i(a,b), R_i(b,a)) for each i
  a profile and its mirror form an inverse pair of relations;
  a self-mirrored profile is split into two mutually inverse relations, one per
  orientation of the unordered pair;
  R(z,z) becomes a fresh unary loop predicate.
With no binary atoms the single empty profile still yields one relation pair,
so the clique condition can hold.
"""

import itertools
import structlog
from dataclasses import dataclass, field
from typing import Iterator

from c2spectra.errors import NotNormalFormError, PreconditionError
from c2spectra.logic_core import (
    And, Bottom, Diamond, Eq, Exists, MAnd, MNot, MTop, MAtom, Not, Or, Pred,
    QAnd, QExists, QNot, QOr, Q_FALSE, Q_TRUE, Rel, Signature, Top,
    conj, disj, free_vars, is_sentence, neg,
)
from c2spectra.structures import FiniteStructure

logger = structlog.get_logger(__name__)

PROFILE_PREFIX = "pr_"
LOOP_SUFFIX    = "_loop"


def _other(var: str) -> str:
    return "y" if var == "x" else "x"


#  Boolean simplification

def simplify(phi):
    """Constant folding, double-negation collapse, a∧a = a, ∃^0 = true."""
    if isinstance(phi, Eq):
        return Top() if phi.left == phi.right else phi
    if isinstance(phi, Not):
        body = simplify(phi.body)
        if isinstance(body, Top):
            return Bottom()
        if isinstance(body, Bottom):
            return Top()
        return neg(body)
    if isinstance(phi, And):
        left, right = simplify(phi.left), simplify(phi.right)
        if isinstance(left, Bottom) or isinstance(right, Bottom):
            return Bottom()
        if isinstance(left, Top):
            return right
        if isinstance(right, Top):
            return left
        if left == right:
            return left
        if left == neg(right):
            return Bottom()
        return And(left, right)
    if isinstance(phi, Or):
        left, right = simplify(phi.left), simplify(phi.right)
        if isinstance(left, Top) or isinstance(right, Top):
            return Top()
        if isinstance(left, Bottom):
            return right
        if isinstance(right, Bottom):
            return left
        if left == right:
            return left
        if left == neg(right):
            return Top()
        return Or(left, right)
    if isinstance(phi, Exists):
        if phi.count == 0:
            return Top()
        body = simplify(phi.body)
        if isinstance(body, Bottom):
            return Bottom()
        return Exists(phi.var, phi.count, body)
    return phi


def swap_variables(phi):
    """Rename x↔y everywhere (bound and free)."""
    s = _other
    if isinstance(phi, (Top, Bottom)):
        return phi
    if isinstance(phi, Eq):
        return Eq(s(phi.left), s(phi.right))
    if isinstance(phi, Pred):
        return Pred(phi.name, s(phi.var))
    if isinstance(phi, Rel):
        return Rel(phi.name, s(phi.left), s(phi.right))
    if isinstance(phi, Not):
        return Not(swap_variables(phi.body))
    if isinstance(phi, And):
        return And(swap_variables(phi.left), swap_variables(phi.right))
    if isinstance(phi, Or):
        return Or(swap_variables(phi.left), swap_variables(phi.right))
    if isinstance(phi, Exists):
        return Exists(s(phi.var), phi.count, swap_variables(phi.body))
    raise TypeError(f"not a C2 formula: {phi!r}")


def _map_leaves(phi, fn):
    """Rebuild the Boolean skeleton of φ, replacing every leaf by fn(leaf)."""
    if isinstance(phi, Not):
        return Not(_map_leaves(phi.body, fn))
    if isinstance(phi, And):
        return And(_map_leaves(phi.left, fn), _map_leaves(phi.right, fn))
    if isinstance(phi, Or):
        return Or(_map_leaves(phi.left, fn), _map_leaves(phi.right, fn))
    return fn(phi)


def _leaves(phi, out=None) -> list:
    out = [] if out is None else out
    if isinstance(phi, Not):
        _leaves(phi.body, out)
    elif isinstance(phi, (And, Or)):
        _leaves(phi.left, out)
        _leaves(phi.right, out)
    elif phi not in out:
        out.append(phi)
    return out


#  Completion

@dataclass(frozen=True)
class CompletedSignature:
    """
    The completed signature plus the bookkeeping needed to move models
    back and forth between the original and the completed vocabulary.

    profiles: profile relation → bit tuple (fwd_1, bwd_1, ..., fwd_b, bwd_b)
    loops:    base relation → unary loop predicate
    aliases:  declared inverse name → base name (Rbar(x,y) read as R(y,x))
    """
    sig:      Signature
    original: Signature
    base:     tuple
    profiles: dict = field(hash=False, compare=False)
    loops:    dict = field(hash=False, compare=False)
    aliases:  dict = field(hash=False, compare=False)

    def profile_of(self, structure: FiniteStructure, a: int, b: int) -> tuple:
        bits = []
        for r in self.base:
            rel = structure.rel(r)
            bits.append(int((a, b) in rel))
            bits.append(int((b, a) in rel))
        return tuple(bits)

    def relations_for(self, bits: tuple) -> list:
        return [name for name, p in self.profiles.items() if p == bits]

    def lift(self, structure: FiniteStructure) -> FiniteStructure:
        """Original model → complete model over the same universe."""
        unary = {name: structure.pred(name) for name in self.original.unary}
        for r, loop in self.loops.items():
            unary[loop] = [a for a, b in structure.rel(r) if a == b]
        binary = {name: [] for name in self.sig.binary}
        for a in range(structure.size):
            for b in range(a + 1, structure.size):
                bits = self.profile_of(structure, a, b)
                names = self.relations_for(bits)
                if len(names) == 2:      # self-mirrored profile, orient a→b on the first
                    binary[names[0]].append((a, b))
                    binary[names[1]].append((b, a))
                else:
                    binary[names[0]].append((a, b))
                    mirror = self.relations_for(_mirror(bits))
                    binary[mirror[0]].append((b, a))
        return FiniteStructure.build(structure.size, unary, binary)

    def lower(self, structure: FiniteStructure) -> FiniteStructure:
        """Complete model → model of the original vocabulary."""
        unary = {name: structure.pred(name) for name in self.original.unary}
        binary = {r: [] for r in self.base}
        for r, loop in self.loops.items():
            binary[r].extend((a, a) for a in structure.pred(loop))
        for name, bits in self.profiles.items():
            for a, b in structure.rel(name):
                for i, r in enumerate(self.base):
                    if bits[2 * i]:
                        binary[r].append((a, b))
        for alias, r in self.aliases.items():
            binary[alias] = [(b, a) for a, b in binary[r]]
        return FiniteStructure.build(structure.size, unary, binary)


def _mirror(bits: tuple) -> tuple:
    out = []
    for i in range(0, len(bits), 2):
        out.extend((bits[i + 1], bits[i]))
    return tuple(out)


def _relations_used(phi) -> list:
    if isinstance(phi, Rel):
        return [phi.name]
    if isinstance(phi, Not):
        return _relations_used(phi.body)
    if isinstance(phi, (And, Or)):
        return _relations_used(phi.left) + _relations_used(phi.right)
    if isinstance(phi, Exists):
        return _relations_used(phi.body)
    return []


def _fresh(name: str, taken: set) -> str:
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def completize(phi, sig: Signature):
    """
    Rewrite φ over profile relations so that its models correspond, size for
    size, to complete models of the result. Returns (φ′, CompletedSignature).
    """
    if not is_sentence(phi):
        raise PreconditionError("completize expects a sentence")

    aliases = {}
    for r, rbar in sig.inverse_pairs:
        aliases[rbar] = r

    used = {aliases.get(name, name) for name in _relations_used(phi)}
    base = [r for r in sig.binary if r in used]
    used_aliases = {a: r for a, r in aliases.items() if r in base}

    taken = set(sig.unary) | set(sig.binary)
    loops = {r: _fresh(r + LOOP_SUFFIX, taken) for r in base}

    profiles, pairs, binary = {}, [], []
    done = set()
    for bits in itertools.product((0, 1), repeat=2 * len(base)):
        if bits in done:
            continue
        label = "".join(str(b) for b in bits)
        mirror = _mirror(bits)
        if mirror == bits:
            first = _fresh(f"{PROFILE_PREFIX}{label}a", taken)
            second = _fresh(f"{PROFILE_PREFIX}{label}b", taken)
            profiles[first] = bits
            profiles[second] = bits
        else:
            first = _fresh(f"{PROFILE_PREFIX}{label}", taken)
            second = _fresh(PROFILE_PREFIX + "".join(str(b) for b in mirror), taken)
            profiles[first] = bits
            profiles[second] = mirror
            done.add(mirror)
        done.add(bits)
        binary.extend([first, second])
        pairs.append((first, second))

    new_sig = Signature(tuple(sig.unary) + tuple(loops[r] for r in base), tuple(binary), tuple(pairs))
    csig = CompletedSignature(new_sig, sig, tuple(base), profiles, loops, used_aliases)

    def rewrite(node):
        if isinstance(node, Rel):
            name, left, right = node.name, node.left, node.right
            if name in used_aliases:
                name, left, right = used_aliases[name], right, left
            if left == right:
                return Pred(loops[name], left)
            index = base.index(name)
            hits = [Rel(q, left, right) for q, bits in profiles.items() if bits[2 * index]]
            return Or(And(Eq(left, right), Pred(loops[name], left)), disj(*hits))
        if isinstance(node, Not):
            return Not(rewrite(node.body))
        if isinstance(node, And):
            return And(rewrite(node.left), rewrite(node.right))
        if isinstance(node, Or):
            return Or(rewrite(node.left), rewrite(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, node.count, rewrite(node.body))
        return node

    result = rewrite(phi) if base else phi
    logger.info("[NORMALIZE] Completed signature", base=list(base), relations=len(binary), loops=list(loops.values()))
    return result, csig


#  Normal form

def _compositions(total: int, parts: int) -> Iterator[tuple]:
    """All tuples of `parts` naturals summing to `total` (Δ^total), lazily."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class _Normalizer:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.inverse = sig.inverse

    def run(self, phi):
        return simplify(self.nf(phi))

    def nf(self, phi):
        if isinstance(phi, Eq):
            return Top() if phi.left == phi.right else phi
        if isinstance(phi, Rel):
            return Bottom() if phi.left == phi.right else phi
        if isinstance(phi, Not):
            return simplify(Not(self.nf(phi.body)))
        if isinstance(phi, And):
            return simplify(And(self.nf(phi.left), self.nf(phi.right)))
        if isinstance(phi, Or):
            return simplify(Or(self.nf(phi.left), self.nf(phi.right)))
        if isinstance(phi, Exists):
            if phi.count == 0:
                return Top()
            body = self.nf(phi.body)
            z, w = phi.var, _other(phi.var)
            if w in free_vars(body):
                return self.binary_quantifier(z, w, phi.count, body)
            return self.unary_quantifier(z, phi.count, body)
        return phi

    def _factor(self, body, bound: str, build):
        """Case-split on leaves that do not mention the bound variable (step 2)."""
        factors = [leaf for leaf in _leaves(body)
                   if not isinstance(leaf, (Top, Bottom)) and bound not in free_vars(leaf)]
        if not factors:
            return build(body)
        cases = []
        for bits in itertools.product((True, False), repeat=len(factors)):
            table = dict(zip(factors, bits))
            case_body = simplify(_map_leaves(
                body, lambda leaf: (Top() if table[leaf] else Bottom()) if leaf in table else leaf))
            literals = [f if b else Not(f) for f, b in table.items()]
            cases.append(conj(*literals, build(case_body)))
        return simplify(disj(*cases))

    def unary_quantifier(self, z: str, k: int, body):
        return self._factor(body, z, lambda b: simplify(Exists(z, k, b)))

    def binary_quantifier(self, z: str, w: str, k: int, body):
        return self._factor(body, z, lambda b: self._split_equal(z, w, k, b))

    def _split_equal(self, z: str, w: str, k: int, body):
        """Step 1: separate the z=w witness from the z≠w witnesses."""
        if isinstance(body, (Top, Bottom)):
            return simplify(Exists(z, k, body))
        on_diagonal = simplify(_map_leaves(body, lambda leaf: self._diagonal(leaf, z, w)))
        if isinstance(on_diagonal, Bottom):
            return self._count(z, w, k, body)
        if isinstance(on_diagonal, Top):
            return self._count(z, w, k - 1, body)
        return simplify(Or(And(on_diagonal, self._count(z, w, k - 1, body)),
                           And(Not(on_diagonal), self._count(z, w, k, body))))

    def _diagonal(self, leaf, z, w):
        if isinstance(leaf, Eq):
            return Top()
        if isinstance(leaf, Rel):
            return Bottom()
        if isinstance(leaf, Pred):
            return Pred(leaf.name, w)
        if isinstance(leaf, Exists):
            # unary in z; the same formula about w is its variable swap
            return swap_variables(leaf)
        return leaf

    def _under_relation(self, leaf, z, w, r):
        if isinstance(leaf, Eq):
            return Top() if leaf.left == leaf.right else Bottom()
        if isinstance(leaf, Rel):
            if leaf.left == leaf.right:
                return Bottom()
            if leaf.left == w:
                return Top() if leaf.name == r else Bottom()
            return Top() if self.inverse.get(leaf.name) == r else Bottom()
        return leaf

    def _count(self, z: str, w: str, k: int, body):
        """Step 3: at least k witnesses z≠w, distributed over the relations."""
        if k <= 0:
            return Top()
        bodies = []
        for r in self.sig.binary:
            theta = simplify(_map_leaves(body, lambda leaf: self._under_relation(leaf, z, w, r)))
            if not isinstance(theta, Bottom):
                bodies.append((r, theta))
        if not bodies:
            return Bottom()
        disjuncts = []
        for split in _compositions(k, len(bodies)):
            parts = []
            for (r, theta), count in zip(bodies, split):
                if count == 0:
                    continue
                inner = Rel(r, w, z) if isinstance(theta, Top) else And(Rel(r, w, z), theta)
                parts.append(Exists(z, count, inner))
            disjuncts.append(conj(*parts))
        return disj(*disjuncts)


def to_normal_form(phi, sig: Signature = None):
    """
    Rewrite a sentence over a completed signature into normal form.
    Inputs already in normal form are returned unchanged.
    """
    if is_normal_form(phi):
        return phi
    if sig is None or not sig.has_inverse_pairing:
        raise PreconditionError("to_normal_form needs the completed signature (with inverse pairing)")
    result = _Normalizer(sig).run(phi)
    if not is_normal_form(result):
        raise NotNormalFormError("normalisation produced a non-normal formula", _offending(result))
    return result


#  Shape predicate

def _unary_nf(phi, z: str) -> bool:
    return _offending_unary(phi, z) is None


def _offending_unary(phi, z: str):
    if isinstance(phi, (Top, Bottom)):
        return None
    if isinstance(phi, Pred):
        return None if phi.var == z else phi
    if isinstance(phi, Not):
        return _offending_unary(phi.body, z)
    if isinstance(phi, (And, Or)):
        return _offending_unary(phi.left, z) or _offending_unary(phi.right, z)
    if isinstance(phi, Exists):
        w = _other(z)
        if phi.var != w or phi.count < 1:
            return phi
        body = phi.body
        if isinstance(body, Rel):
            return None if (body.left, body.right) == (z, w) else phi
        if isinstance(body, And) and isinstance(body.left, Rel) and (body.left.left, body.left.right) == (z, w):
            return _offending_unary(body.right, w)
        return phi
    return phi


def _offending(phi):
    if isinstance(phi, (Top, Bottom)):
        return None
    if isinstance(phi, Not):
        return _offending(phi.body)
    if isinstance(phi, (And, Or)):
        return _offending(phi.left) or _offending(phi.right)
    if isinstance(phi, Exists):
        if phi.count < 1:
            return phi
        return _offending_unary(phi.body, phi.var)
    return phi


def is_normal_form(phi) -> bool:
    return _offending(phi) is None


#  Translation F

def _to_mlc(theta, z: str):
    if isinstance(theta, Top):
        return MTop()
    if isinstance(theta, Bottom):
        return MNot(MTop())
    if isinstance(theta, Pred):
        return MAtom(theta.name)
    if isinstance(theta, Not):
        return neg(_to_mlc(theta.body, z))
    if isinstance(theta, And):
        return MAnd(_to_mlc(theta.left, z), _to_mlc(theta.right, z))
    if isinstance(theta, Or):
        return neg(MAnd(neg(_to_mlc(theta.left, z)), neg(_to_mlc(theta.right, z))))
    if isinstance(theta, Exists):
        w = theta.var
        body = theta.body
        if isinstance(body, Rel):
            return Diamond(body.name, theta.count, MTop())
        return Diamond(body.left.name, theta.count, _to_mlc(body.right, w))
    raise NotNormalFormError(f"cannot translate {theta!r}", theta)


def _to_q(phi):
    if isinstance(phi, Top):
        return Q_TRUE
    if isinstance(phi, Bottom):
        return Q_FALSE
    if isinstance(phi, Not):
        return neg(_to_q(phi.body))
    if isinstance(phi, And):
        return QAnd(_to_q(phi.left), _to_q(phi.right))
    if isinstance(phi, Or):
        return QOr(_to_q(phi.left), _to_q(phi.right))
    if isinstance(phi, Exists):
        return QExists(phi.count, _to_mlc(phi.body, phi.var))
    raise NotNormalFormError(f"cannot translate {phi!r}", phi)


def to_qmlc(psi):
    """Structural translation F of a normal-form sentence into QMLC."""
    bad = _offending(psi)
    if bad is not None:
        from c2spectra.logic_core import print_c2
        raise NotNormalFormError(f"not in normal form: {print_c2(bad)}", bad)
    return _to_q(psi)


#  Negation pushing

def push_negations(phi):
    """De Morgan down to basic E^k nodes; the result uses ∧, ∨ and ¬E^k only."""
    if isinstance(phi, QExists):
        return phi
    if isinstance(phi, QAnd):
        return QAnd(push_negations(phi.left), push_negations(phi.right))
    if isinstance(phi, QOr):
        return QOr(push_negations(phi.left), push_negations(phi.right))
    if isinstance(phi, QNot):
        inner = phi.body
        if isinstance(inner, QExists):
            return phi
        if isinstance(inner, QNot):
            return push_negations(inner.body)
        if isinstance(inner, QAnd):
            return QOr(push_negations(QNot(inner.left)), push_negations(QNot(inner.right)))
        if isinstance(inner, QOr):
            return QAnd(push_negations(QNot(inner.left)), push_negations(QNot(inner.right)))
    raise TypeError(f"not a QMLC formula: {phi!r}")
