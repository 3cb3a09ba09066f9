"""
logic_core.py

Signatures and abstract syntax for the three logics the pipeline moves through:

  C²    → E x^k ( body ), &, |, ~, x=y, P(x), R(x,y), true, false
  MLC   → P, ~, &, |, <>_R^k body, true, false
  QMLC  → E^k [ mlc ], ~, &, |

Header block declaring the signature:
  unary: P,Q; binary: R/Rbar, S/Sbar;

All nodes are frozen dataclasses, so structural equality and hashing come for
free. The only identification beyond syntax is ¬¬φ = φ, applied by neg().
"""

import re
import structlog
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from c2spectra.errors import FormulaSyntaxError, SignatureError, UnknownSymbolError

logger = structlog.get_logger(__name__)

VARIABLES = ("x", "y")


#  Signature

@dataclass(frozen=True)
class Signature:
    """
    Unary predicates 𝒫 and binary relations ℛ.

    inverse_pairs lists declared (R, R̄) pairs. C² input may leave some relations
    unpaired; signatures produced by completize pair every relation.
    """
    unary:  tuple = ()
    binary: tuple = ()
    inverse_pairs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "unary", tuple(self.unary))
        object.__setattr__(self, "binary", tuple(self.binary))
        object.__setattr__(self, "inverse_pairs", tuple(tuple(p) for p in self.inverse_pairs))

        names = list(self.unary) + list(self.binary)
        seen = set()
        for name in names:
            if name in seen:
                raise SignatureError(f"duplicate symbol '{name}'")
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in ("true", "false"):
                raise SignatureError(f"illegal symbol name '{name}'")
            seen.add(name)

        paired = set()
        for pair in self.inverse_pairs:
            if len(pair) != 2:
                raise SignatureError(f"inverse pair must have two names: {pair}")
            r, rbar = pair
            if r == rbar:
                raise SignatureError(f"relation '{r}' cannot be its own inverse")
            for name in pair:
                if name not in self.binary:
                    raise SignatureError(f"inverse pair names undeclared relation '{name}'")
                if name in paired:
                    raise SignatureError(f"relation '{name}' appears in two inverse pairs")
                paired.add(name)

    @property
    def inverse(self) -> dict:
        table = {}
        for r, rbar in self.inverse_pairs:
            table[r] = rbar
            table[rbar] = r
        return table

    @property
    def has_inverse_pairing(self) -> bool:
        return bool(self.binary) and len(self.inverse) == len(self.binary)

    def inverse_of(self, name: str) -> str:
        try:
            return self.inverse[name]
        except KeyError:
            raise SignatureError(f"relation '{name}' has no declared inverse") from None

    @property
    def is_unary_only(self) -> bool:
        return not self.binary

    def header(self) -> str:
        """Render back into the `unary: ...; binary: ...;` header form."""
        done, parts = set(), []
        inverse = self.inverse
        for name in self.binary:
            if name in done:
                continue
            if name in inverse:
                parts.append(f"{name}/{inverse[name]}")
                done.update((name, inverse[name]))
            else:
                parts.append(name)
                done.add(name)
        return f"unary: {','.join(self.unary)}; binary: {', '.join(parts)};"

    @classmethod
    def parse_header(cls, text: str) -> "Signature":
        unary, binary, pairs = [], [], []
        for clause in text.split(";"):
            clause = clause.strip()
            if not clause:
                continue
            if ":" not in clause:
                raise FormulaSyntaxError(f"malformed signature clause '{clause}'")
            key, _, body = clause.partition(":")
            key = key.strip().lower()
            items = [item.strip() for item in body.split(",") if item.strip()]
            if key == "unary":
                unary.extend(items)
            elif key == "binary":
                for item in items:
                    if "/" in item:
                        r, _, rbar = item.partition("/")
                        binary.extend([r.strip(), rbar.strip()])
                        pairs.append((r.strip(), rbar.strip()))
                    else:
                        binary.append(item)
            else:
                raise FormulaSyntaxError(f"unknown signature section '{key}'")
        return cls(tuple(unary), tuple(binary), tuple(pairs))


#  C² syntax

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Eq:
    left:  str
    right: str


@dataclass(frozen=True)
class Pred:
    name: str
    var:  str


@dataclass(frozen=True)
class Rel:
    name:  str
    left:  str
    right: str


@dataclass(frozen=True)
class Not:
    body: "C2Formula"


@dataclass(frozen=True)
class And:
    left:  "C2Formula"
    right: "C2Formula"


@dataclass(frozen=True)
class Or:
    left:  "C2Formula"
    right: "C2Formula"


@dataclass(frozen=True)
class Exists:
    """∃^count var body: at least `count` values of var satisfy body."""
    var:   str
    count: int
    body:  "C2Formula"


C2Formula = Union[Top, Bottom, Eq, Pred, Rel, Not, And, Or, Exists]


#  MLC syntax

@dataclass(frozen=True)
class MTop:
    pass


@dataclass(frozen=True)
class MAtom:
    name: str


@dataclass(frozen=True)
class MNot:
    body: "MLCFormula"


@dataclass(frozen=True)
class MAnd:
    left:  "MLCFormula"
    right: "MLCFormula"


@dataclass(frozen=True)
class Diamond:
    """◇_rel^count body: at least `count` rel-successors satisfy body."""
    rel:   str
    count: int
    body:  "MLCFormula"


MLCFormula = Union[MTop, MAtom, MNot, MAnd, Diamond]


#  QMLC syntax

@dataclass(frozen=True)
class QExists:
    count: int
    body:  MLCFormula

    @property
    def is_basic(self) -> bool:
        return True


@dataclass(frozen=True)
class QNot:
    body: "QMLCFormula"

    @property
    def is_basic(self) -> bool:
        return False


@dataclass(frozen=True)
class QAnd:
    left:  "QMLCFormula"
    right: "QMLCFormula"

    @property
    def is_basic(self) -> bool:
        return False


@dataclass(frozen=True)
class QOr:
    left:  "QMLCFormula"
    right: "QMLCFormula"

    @property
    def is_basic(self) -> bool:
        return False


QMLCFormula = Union[QExists, QNot, QAnd, QOr]

Q_TRUE  = QExists(0, MTop())
Q_FALSE = QNot(Q_TRUE)


#  Constructors

def neg(phi):
    """Negate, collapsing a double negation."""
    if isinstance(phi, Not):
        return phi.body
    if isinstance(phi, MNot):
        return phi.body
    if isinstance(phi, QNot):
        return phi.body
    if isinstance(phi, (MTop, MAtom, MAnd, Diamond)):
        return MNot(phi)
    if isinstance(phi, (QExists, QAnd, QOr)):
        return QNot(phi)
    return Not(phi)


def conj(*items):
    """Left-associated conjunction of C² formulas; empty → true."""
    items = list(items)
    if not items:
        return Top()
    out = items[0]
    for item in items[1:]:
        out = And(out, item)
    return out


def disj(*items):
    items = list(items)
    if not items:
        return Bottom()
    out = items[0]
    for item in items[1:]:
        out = Or(out, item)
    return out


def forall(var: str, body: C2Formula) -> C2Formula:
    return Not(Exists(var, 1, neg(body)))


def mconj(*items):
    items = list(items)
    if not items:
        return MTop()
    out = items[0]
    for item in items[1:]:
        out = MAnd(out, item)
    return out


def mdisj(*items):
    items = list(items)
    if not items:
        return MNot(MTop())
    out = items[0]
    for item in items[1:]:
        out = neg(MAnd(neg(out), neg(item)))
    return out


def qconj(*items):
    items = list(items)
    if not items:
        return Q_TRUE
    out = items[0]
    for item in items[1:]:
        out = QAnd(out, item)
    return out


def qdisj(*items):
    items = list(items)
    if not items:
        return Q_FALSE
    out = items[0]
    for item in items[1:]:
        out = QOr(out, item)
    return out


#  Structural queries

def free_vars(phi: C2Formula) -> frozenset:
    if isinstance(phi, (Top, Bottom)):
        return frozenset()
    if isinstance(phi, Eq):
        return frozenset((phi.left, phi.right))
    if isinstance(phi, Pred):
        return frozenset((phi.var,))
    if isinstance(phi, Rel):
        return frozenset((phi.left, phi.right))
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, Exists):
        return free_vars(phi.body) - {phi.var}
    raise TypeError(f"not a C2 formula: {phi!r}")


def is_sentence(phi: C2Formula) -> bool:
    return not free_vars(phi)


def mlc_subformulas(mu: MLCFormula) -> list:
    """Pre-order list of MLC subformulas (with repeats removed)."""
    out, seen = [], set()

    def walk(node):
        if node in seen:
            return
        seen.add(node)
        out.append(node)
        if isinstance(node, MNot):
            walk(node.body)
        elif isinstance(node, MAnd):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Diamond):
            walk(node.body)

    walk(mu)
    return out


def qmlc_bodies(phi: QMLCFormula) -> list:
    """MLC bodies of every basic subformula, left to right."""
    if isinstance(phi, QExists):
        return [phi.body]
    if isinstance(phi, QNot):
        return qmlc_bodies(phi.body)
    if isinstance(phi, (QAnd, QOr)):
        return qmlc_bodies(phi.left) + qmlc_bodies(phi.right)
    raise TypeError(f"not a QMLC formula: {phi!r}")


def _positive(mu: MLCFormula) -> MLCFormula:
    return mu.body if isinstance(mu, MNot) else mu


def subformula_closure(phi: QMLCFormula, extra: Iterable[MLCFormula] = ()) -> tuple:
    """
    𝓜_φ: every MLC subformula of φ together with its negation.

    Ordered by first appearance of the positive form; each positive form is
    immediately followed by its negation, so index 2i is positive and 2i+1
    negative.
    """
    positives, seen = [], set()
    bodies = qmlc_bodies(phi) + list(extra)
    for body in bodies:
        for sub in mlc_subformulas(body):
            pos = _positive(sub)
            if pos not in seen:
                seen.add(pos)
                positives.append(pos)
    closure = []
    for pos in positives:
        closure.append(pos)
        closure.append(MNot(pos))
    return tuple(closure)


def max_count(phi) -> int:
    """Largest modal count in φ (QMLC or MLC); 0 without modalities."""
    if isinstance(phi, (QExists,)):
        return max_count(phi.body)
    if isinstance(phi, (QNot, MNot)):
        return max_count(phi.body)
    if isinstance(phi, (QAnd, QOr, MAnd)):
        return max(max_count(phi.left), max_count(phi.right))
    if isinstance(phi, Diamond):
        return max(phi.count, max_count(phi.body))
    return 0


def qmlc_relations(phi) -> set:
    """Binary relation names used by modalities in a QMLC/MLC formula."""
    if isinstance(phi, QExists):
        return qmlc_relations(phi.body)
    if isinstance(phi, (QNot, MNot)):
        return qmlc_relations(phi.body)
    if isinstance(phi, (QAnd, QOr, MAnd)):
        return qmlc_relations(phi.left) | qmlc_relations(phi.right)
    if isinstance(phi, Diamond):
        return {phi.rel} | qmlc_relations(phi.body)
    return set()


#  Grammar

_GRAMMAR = r"""
?c2: c2_disj
?c2_disj: c2_conj
        | c2_disj "|" c2_conj        -> c2_or
?c2_conj: c2_unary
        | c2_conj "&" c2_unary       -> c2_and
?c2_unary: "~" c2_unary              -> c2_not
         | EXISTS NAME "^" INT "(" c2_disj ")" -> c2_exists
         | "(" c2_disj ")"
         | "true"                    -> c2_top
         | "false"                   -> c2_bottom
         | NAME "=" NAME             -> c2_eq
         | NAME "(" NAME ")"         -> c2_pred
         | NAME "(" NAME "," NAME ")" -> c2_rel

?mlc: mlc_disj
?mlc_disj: mlc_conj
         | mlc_disj "|" mlc_conj     -> mlc_or
?mlc_conj: mlc_unary
         | mlc_conj "&" mlc_unary    -> mlc_and
?mlc_unary: "~" mlc_unary            -> mlc_not
          | "<>_" NAME "^" INT mlc_unary -> mlc_diamond
          | "(" mlc_disj ")"
          | "true"                   -> mlc_top
          | "false"                  -> mlc_bottom
          | NAME                     -> mlc_atom

?qmlc: q_disj
?q_disj: q_conj
       | q_disj "|" q_conj           -> q_or
?q_conj: q_unary
       | q_conj "&" q_unary          -> q_and
?q_unary: "~" q_unary                -> q_not
        | QEXISTS "^" INT "[" mlc_disj "]" -> q_exists
        | "(" q_disj ")"

EXISTS.2: /E(?=\s*[A-Za-z_][A-Za-z0-9_]*\s*\^)/
QEXISTS.2: /E(?=\s*\^)/
NAME: /[A-Za-z_][A-Za-z0-9_]*/
INT: /[0-9]+/

%import common.WS
%ignore WS
"""


@v_args(inline=True)
class _AstBuilder(Transformer):
    """Turns the lark tree into AST nodes, resolving symbols against sig."""

    def __init__(self, sig: Signature):
        super().__init__()
        self.sig = sig

    #  helpers
    def _var(self, token) -> str:
        name = str(token)
        if name not in VARIABLES:
            raise UnknownSymbolError(f"variable '{name}' is not x or y (line {token.line}, column {token.column})")
        return name

    def _unary(self, token) -> str:
        name = str(token)
        if name not in self.sig.unary:
            raise UnknownSymbolError(f"unknown unary predicate '{name}' (line {token.line}, column {token.column})")
        return name

    def _binary(self, token) -> str:
        name = str(token)
        if name not in self.sig.binary:
            raise UnknownSymbolError(f"unknown binary relation '{name}' (line {token.line}, column {token.column})")
        return name

    #  C²
    def c2_or(self, a, b):
        return Or(a, b)

    def c2_and(self, a, b):
        return And(a, b)

    def c2_not(self, a):
        return neg(a)

    def c2_exists(self, _e, var, k, body):
        return Exists(self._var(var), int(k), body)

    def c2_top(self):
        return Top()

    def c2_bottom(self):
        return Bottom()

    def c2_eq(self, a, b):
        return Eq(self._var(a), self._var(b))

    def c2_pred(self, name, var):
        return Pred(self._unary(name), self._var(var))

    def c2_rel(self, name, a, b):
        return Rel(self._binary(name), self._var(a), self._var(b))

    #  MLC
    def mlc_or(self, a, b):
        return neg(MAnd(neg(a), neg(b)))

    def mlc_and(self, a, b):
        return MAnd(a, b)

    def mlc_not(self, a):
        return neg(a)

    def mlc_diamond(self, rel, k, body):
        return Diamond(self._binary(rel), int(k), body)

    def mlc_top(self):
        return MTop()

    def mlc_bottom(self):
        return MNot(MTop())

    def mlc_atom(self, name):
        return MAtom(self._unary(name))

    #  QMLC
    def q_or(self, a, b):
        return QOr(a, b)

    def q_and(self, a, b):
        return QAnd(a, b)

    def q_not(self, a):
        return neg(a)

    def q_exists(self, _e, k, body):
        return QExists(int(k), body)


@lru_cache(maxsize=None)
def _parser() -> Lark:
    return Lark(_GRAMMAR, start=["c2", "mlc", "qmlc"], parser="lalr", propagate_positions=True)


def _parse(text: str, sig: Signature, start: str):
    try:
        tree = _parser().parse(text, start=start)
    except UnexpectedInput as exc:
        raise FormulaSyntaxError(f"cannot parse {start} formula", exc.line, exc.column) from None
    try:
        return _AstBuilder(sig).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None


def parse_c2(text: str, sig: Signature) -> C2Formula:
    """Parse a C² formula; ∃^0 subformulas are kept as written."""
    return _parse(text, sig, "c2")


def parse_mlc(text: str, sig: Signature) -> MLCFormula:
    return _parse(text, sig, "mlc")


def parse_qmlc(text: str, sig: Signature) -> QMLCFormula:
    return _parse(text, sig, "qmlc")


@dataclass(frozen=True)
class Document:
    """A parsed formula file: header signature plus one sentence."""
    sig:     Signature
    formula: object
    kind:    str  # "c2" | "qmlc"


_HEADER_RE = re.compile(r"^\s*((?:\s*(?:unary|binary)\s*:[^;]*;)+)", re.IGNORECASE)


def parse_document(text: str) -> Document:
    lines = [line for line in text.splitlines() if not line.lstrip().startswith("#")]
    text = "\n".join(lines)
    match = _HEADER_RE.match(text)
    if not match:
        raise FormulaSyntaxError("missing signature header 'unary: ...; binary: ...;'")
    sig = Signature.parse_header(match.group(1))
    body = text[match.end():].strip()
    if re.match(r"^[~(\s]*E\s*\^", body):
        return Document(sig, parse_qmlc(body, sig), "qmlc")
    return Document(sig, parse_c2(body, sig), "c2")


#  Printers

def print_c2(phi: C2Formula) -> str:
    def child(node):
        text = print_c2(node)
        return f"({text})" if isinstance(node, (And, Or)) else text

    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bottom):
        return "false"
    if isinstance(phi, Eq):
        return f"{phi.left}={phi.right}"
    if isinstance(phi, Pred):
        return f"{phi.name}({phi.var})"
    if isinstance(phi, Rel):
        return f"{phi.name}({phi.left},{phi.right})"
    if isinstance(phi, Not):
        return "~" + child(phi.body)
    if isinstance(phi, And):
        return f"{child(phi.left)} & {child(phi.right)}"
    if isinstance(phi, Or):
        return f"{child(phi.left)} | {child(phi.right)}"
    if isinstance(phi, Exists):
        return f"E {phi.var}^{phi.count} ({print_c2(phi.body)})"
    raise TypeError(f"not a C2 formula: {phi!r}")


def print_mlc(mu: MLCFormula) -> str:
    def child(node):
        text = print_mlc(node)
        return f"({text})" if isinstance(node, MAnd) else text

    if isinstance(mu, MTop):
        return "true"
    if isinstance(mu, MAtom):
        return mu.name
    if isinstance(mu, MNot):
        return "~" + child(mu.body)
    if isinstance(mu, MAnd):
        return f"{child(mu.left)} & {child(mu.right)}"
    if isinstance(mu, Diamond):
        return f"<>_{mu.rel}^{mu.count} {child(mu.body)}"
    raise TypeError(f"not an MLC formula: {mu!r}")


def print_qmlc(phi: QMLCFormula) -> str:
    def child(node):
        text = print_qmlc(node)
        return f"({text})" if isinstance(node, (QAnd, QOr)) else text

    if isinstance(phi, QExists):
        return f"E^{phi.count} [{print_mlc(phi.body)}]"
    if isinstance(phi, QNot):
        return "~" + child(phi.body)
    if isinstance(phi, QAnd):
        return f"{child(phi.left)} & {child(phi.right)}"
    if isinstance(phi, QOr):
        return f"{child(phi.left)} | {child(phi.right)}"
    raise TypeError(f"not a QMLC formula: {phi!r}")
