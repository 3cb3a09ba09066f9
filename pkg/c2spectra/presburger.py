"""
presburger.py

Positive-existential Presburger formulas over ℕ.

  Atom(left, op, right)   → linear atom, op ∈ {=, <=, >=}, coefficients ≥ 0
  Conj / Disj / Exists    → the only connectives (no negation node)
  PointSet                → finite disjunction of points in a box, listed by a membership callable
  Family                  → ⋁ over values v̄ of pinned variables of (pins = v̄ ∧ build(v̄));
                            with no pinned variables it is one lazily built subformula

Both lazy nodes stand for literal formulas: to_text/to_smtlib expand them
within the expansion budget and never emit an uninterpreted symbol.

solve() explores disjunctions depth first and runs an exact integer
branch and bound on each conjunctive branch. Every node of the bound is a
HiGHS MILP (scipy.optimize.milp); every integral candidate is re-checked in
integer arithmetic before the lazy atoms are consulted.

Variable bounds: assigned variables are substituted as constants first.
A feasible system of m constraints over n unknowns with coefficients and
constants of magnitude ≤ a has a solution with every unknown ≤ n·(m·a)^(2m+1).
Each unknown is boxed by that bound (capped at SOLUTION_BOUND_CAP) and the
box is then narrowed by interval propagation over the atoms.
"""

import math
import itertools
from collections import deque
import structlog
import numpy as np
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from c2spectra.config import Settings, get_settings
from c2spectra.errors import BudgetExceeded, PreconditionError, UnassignedVariableError

logger = structlog.get_logger(__name__)

SOLUTION_BOUND_CAP = 10 ** 12
INTEGRALITY_TOL    = 1e-6
OPS                = ("=", "<=", ">=")


#  Linear terms

@dataclass(frozen=True)
class LinearTerm:
    const:  int = 0
    coeffs: tuple = ()          # sorted ((var, coeff), ...), coeff > 0

    @classmethod
    def of(cls, item: Union["LinearTerm", int, str]) -> "LinearTerm":
        if isinstance(item, LinearTerm):
            return item
        if isinstance(item, str):
            return cls(0, ((item, 1),))
        return cls(int(item), ())

    @classmethod
    def build(cls, const: int = 0, coeffs: Optional[Mapping] = None) -> "LinearTerm":
        merged = {}
        for var, c in (coeffs or {}).items():
            merged[var] = merged.get(var, 0) + int(c)
        for var, c in merged.items():
            if c < 0:
                raise PreconditionError(f"negative coefficient {c} on {var}")
        if const < 0:
            raise PreconditionError(f"negative constant {const}")
        return cls(int(const), tuple(sorted((v, c) for v, c in merged.items() if c)))

    def __add__(self, other) -> "LinearTerm":
        other = LinearTerm.of(other)
        merged = dict(self.coeffs)
        for var, c in other.coeffs:
            merged[var] = merged.get(var, 0) + c
        return LinearTerm.build(self.const + other.const, merged)

    __radd__ = __add__

    def __mul__(self, k: int) -> "LinearTerm":
        return LinearTerm.build(self.const * k, {v: c * k for v, c in self.coeffs})

    __rmul__ = __mul__

    def variables(self) -> list:
        return [v for v, _ in self.coeffs]

    def value(self, valuation: Mapping) -> int:
        return self.const + sum(c * valuation[v] for v, c in self.coeffs)

    def rename(self, mapping: Mapping) -> "LinearTerm":
        return LinearTerm.build(self.const, {mapping.get(v, v): c for v, c in self.coeffs})

    def text(self) -> str:
        parts = [v if c == 1 else f"{c}*{v}" for v, c in self.coeffs]
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts)

    def smtlib(self) -> str:
        parts = [v if c == 1 else f"(* {c} {v})" for v, c in self.coeffs]
        if self.const or not parts:
            parts.append(str(self.const))
        return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def lsum(items: Sequence, const: int = 0) -> LinearTerm:
    """Σ of variables/terms/ints."""
    total = LinearTerm.of(const)
    for item in items:
        total = total + LinearTerm.of(item)
    return total


#  Formula nodes

@dataclass(frozen=True)
class Atom:
    left:  LinearTerm
    op:    str
    right: LinearTerm

    def __post_init__(self):
        if self.op not in OPS:
            raise PreconditionError(f"unknown comparison '{self.op}'")

    def holds(self, valuation: Mapping) -> bool:
        a, b = self.left.value(valuation), self.right.value(valuation)
        return a == b if self.op == "=" else (a <= b if self.op == "<=" else a >= b)

    def variables(self) -> list:
        return self.left.variables() + [v for v in self.right.variables() if v not in dict(self.left.coeffs)]


@dataclass(frozen=True)
class Conj:
    items: tuple = ()


@dataclass(frozen=True)
class Disj:
    items: tuple = ()


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: object


@dataclass(frozen=True, eq=False)
class PointSet:
    vars:   tuple
    member: Callable = field(repr=False)
    bound:  int = 0
    label:  str = "pointset"

    def implied(self) -> list:
        return [le(v, self.bound) for v in self.vars]

    def holds(self, values: tuple) -> bool:
        return all(v <= self.bound for v in values) and bool(self.member(values))


@dataclass(frozen=True, eq=False)
class Family:
    pinned: tuple
    ranges: tuple                   # ((lo, hi), ...) inclusive, one per pinned variable
    build:  Callable = field(repr=False)
    label:  str = "family"

    def values(self) -> Iterator[tuple]:
        return itertools.product(*[range(lo, hi + 1) for lo, hi in self.ranges])

    def member(self, values: tuple):
        pins = [eq(v, a) for v, a in zip(self.pinned, values)]
        return Conj(tuple(pins) + (self.build(values),))


TRUE  = Conj(())
FALSE = Disj(())
LAZY  = (PointSet, Family)


def lazy(build: Callable[[], object], label: str = "lazy") -> Family:
    """A subformula built on first use; its literal form is build()."""
    return Family((), (), lambda _: build(), label)


def _atom(op, left, right) -> Atom:
    return Atom(LinearTerm.of(left), op, LinearTerm.of(right))


def eq(left, right) -> Atom:
    return _atom("=", left, right)


def le(left, right) -> Atom:
    return _atom("<=", left, right)


def ge(left, right) -> Atom:
    return _atom(">=", left, right)


def pconj(*items):
    flat = []
    for item in items:
        if isinstance(item, Conj):
            flat.extend(item.items)
        elif item is FALSE or (isinstance(item, Disj) and not item.items):
            return FALSE
        else:
            flat.append(item)
    return flat[0] if len(flat) == 1 else Conj(tuple(flat))


def pdisj(*items):
    flat = []
    for item in items:
        if isinstance(item, Disj):
            flat.extend(item.items)
        elif isinstance(item, Conj) and not item.items:
            return TRUE
        else:
            flat.append(item)
    return flat[0] if len(flat) == 1 else Disj(tuple(flat))


#  Variables and renaming

def free_variables(psi) -> list:
    """Free variables in order of first occurrence."""
    out, seen = [], set()

    def visit(node, bound):
        if isinstance(node, Atom):
            names = node.variables()
        elif isinstance(node, PointSet):
            names = list(node.vars)
        elif isinstance(node, Family):
            names = list(node.pinned)
        elif isinstance(node, (Conj, Disj)):
            for item in node.items:
                visit(item, bound)
            return
        elif isinstance(node, Exists):
            visit(node.body, bound | set(node.vars))
            return
        else:
            raise TypeError(f"not a Presburger formula: {node!r}")
        for name in names:
            if name not in bound and name not in seen:
                seen.add(name)
                out.append(name)

    visit(psi, set())
    return out


def rename(psi, mapping: Mapping):
    """Rename free occurrences; lazy atoms are wrapped so their callables see positional values."""
    if not mapping:
        return psi
    if isinstance(psi, Atom):
        return Atom(psi.left.rename(mapping), psi.op, psi.right.rename(mapping))
    if isinstance(psi, Conj):
        return Conj(tuple(rename(i, mapping) for i in psi.items))
    if isinstance(psi, Disj):
        return Disj(tuple(rename(i, mapping) for i in psi.items))
    if isinstance(psi, Exists):
        inner = {k: v for k, v in mapping.items() if k not in psi.vars}
        return Exists(psi.vars, rename(psi.body, inner))
    if isinstance(psi, PointSet):
        return PointSet(tuple(mapping.get(v, v) for v in psi.vars), psi.member, psi.bound, psi.label)
    if isinstance(psi, Family):
        build = psi.build
        return Family(tuple(mapping.get(v, v) for v in psi.pinned), psi.ranges,
                      lambda values: rename(build(values), mapping), psi.label)
    raise TypeError(f"not a Presburger formula: {psi!r}")


#  Branch and bound on one conjunctive system

def _signed(atom: Atom) -> tuple:
    """left - right as ({var: coeff}, rhs): the atom reads Σ coeff·var  op  rhs."""
    coeffs = dict(atom.left.coeffs)
    for v, c in atom.right.coeffs:
        coeffs[v] = coeffs.get(v, 0) - c
    return {v: c for v, c in coeffs.items() if c}, atom.right.const - atom.left.const


def _substitute(atom: Atom, fixed: Mapping) -> Atom:
    """Move assigned variables into the constants."""
    if not any(v in fixed for v in atom.variables()):
        return atom

    def part(term):
        const = term.const + sum(c * fixed[v] for v, c in term.coeffs if v in fixed)
        return LinearTerm.build(const, {v: c for v, c in term.coeffs if v not in fixed})

    return Atom(part(atom.left), atom.op, part(atom.right))


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _tighten(atoms: list, lo: dict, hi: dict, rounds: int = 16):
    """Interval propagation over the atoms; None when some interval empties."""
    lo, hi = dict(lo), dict(hi)
    systems = []
    for atom in atoms:
        coeffs, rhs = _signed(atom)
        if atom.op in ("=", "<="):
            systems.append((coeffs, rhs))
        if atom.op in ("=", ">="):
            systems.append(({v: -c for v, c in coeffs.items()}, -rhs))

    for _ in range(rounds):
        changed = False
        for coeffs, rhs in systems:
            least = sum(c * (lo[v] if c > 0 else hi[v]) for v, c in coeffs.items())
            for v, c in coeffs.items():
                rest = least - c * (lo[v] if c > 0 else hi[v])
                slack = rhs - rest
                if c > 0:
                    top = slack // c
                    if top < hi[v]:
                        hi[v], changed = top, True
                else:
                    bottom = _ceil_div(slack, c)
                    if bottom > lo[v]:
                        lo[v], changed = bottom, True
                if lo[v] > hi[v]:
                    return None
                least = rest + c * (lo[v] if c > 0 else hi[v])
        if not changed:
            break
    return lo, hi


class _Search:

    def __init__(self, settings: Settings):
        self.settings = settings
        self.nodes = 0
        self.cache = {}

    def tick(self):
        self.nodes += 1
        if self.nodes > self.settings.solver_node_budget:
            raise BudgetExceeded("solver_node_budget", self.settings.solver_node_budget, self.nodes,
                                 detail="integer search did not finish")

    def lazy_holds(self, lazy, values: tuple) -> bool:
        key = (id(lazy), values)
        if key not in self.cache:
            self.cache[key] = lazy.holds(values)
        return self.cache[key]

    def relaxation(self, atoms: list, names: list, lo: dict, hi: dict):
        """LP relaxation; returns the point or None when infeasible."""
        if not names:
            return {}
        index = {v: k for k, v in enumerate(names)}
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for atom in atoms:
            row = np.zeros(len(names))
            for v, c in atom.left.coeffs:
                row[index[v]] += c
            for v, c in atom.right.coeffs:
                row[index[v]] -= c
            rhs = atom.right.const - atom.left.const
            if atom.op == "=":
                a_eq.append(row)
                b_eq.append(rhs)
            elif atom.op == "<=":
                a_ub.append(row)
                b_ub.append(rhs)
            else:
                a_ub.append(-row)
                b_ub.append(-rhs)
        res = linprog(np.ones(len(names)),
                      A_ub=np.array(a_ub) if a_ub else None, b_ub=np.array(b_ub, dtype=float) if b_ub else None,
                      A_eq=np.array(a_eq) if a_eq else None, b_eq=np.array(b_eq, dtype=float) if b_eq else None,
                      bounds=[(lo[v], hi[v]) for v in names], method="highs")
        if res.status != 0:
            return None
        return dict(zip(names, res.x))

    def integral(self, atoms: list, names: list, lo: dict, hi: dict):
        """HiGHS MILP minimising Σ names inside the box; falls back to the relaxation when it gives up."""
        if not names:
            return {}
        index = {v: k for k, v in enumerate(names)}
        matrix = np.zeros((len(atoms), len(names)))
        lower = np.full(len(atoms), -np.inf)
        upper = np.full(len(atoms), np.inf)
        for k, atom in enumerate(atoms):
            coeffs, rhs = _signed(atom)
            for v, c in coeffs.items():
                matrix[k, index[v]] = c
            if atom.op in ("=", ">="):
                lower[k] = rhs
            if atom.op in ("=", "<="):
                upper[k] = rhs
        constraints = [LinearConstraint(matrix, lower, upper)] if atoms else None
        res = milp(np.ones(len(names)), constraints=constraints, integrality=np.ones(len(names)),
                   bounds=Bounds([lo[v] for v in names], [hi[v] for v in names]))
        if res.status == 2:
            return None
        if res.status != 0 or res.x is None:
            logger.debug("[PRESBURGER] MILP gave up, using the relaxation", status=int(res.status))
            return self.relaxation(atoms, names, lo, hi)
        return dict(zip(names, res.x))

    def integer_point(self, atoms: list, lazies: list, fixed: Mapping) -> Optional[dict]:
        reduced = []
        for atom in atoms:
            atom = _substitute(atom, fixed)
            if not atom.variables():
                if not atom.holds({}):
                    return None
                continue
            reduced.append(atom)
        names = sorted({v for a in reduced for v in a.variables()} |
                       {v for lz in lazies for v in lz.vars if v not in fixed})
        bound = _small_solution_bound(reduced, len(names))
        stack = [({v: 0 for v in names}, {v: bound for v in names})]
        while stack:
            lo, hi = stack.pop()
            self.tick()
            box = _tighten(reduced, lo, hi)
            if box is None:
                continue
            lo, hi = box
            point = self.integral(reduced, names, lo, hi)
            if point is None:
                continue

            fractional = [(min(x - math.floor(x), math.ceil(x) - x), v) for v, x in point.items()]
            worst = max(fractional, default=(0.0, None))
            if worst[0] > INTEGRALITY_TOL:
                v, x = worst[1], point[worst[1]]
                stack.append(({**lo, v: math.ceil(x)}, hi))
                stack.append((lo, {**hi, v: math.floor(x)}))
                continue

            rounded = {v: int(round(x)) for v, x in point.items()}
            if not all(a.holds(rounded) for a in reduced):
                # numerically integral yet not exact: split the first open variable at its value
                open_vars = [v for v in names if lo[v] < hi[v]]
                if not open_vars:
                    continue
                v = open_vars[0]
                stack.append(({**lo, v: rounded[v] + 1}, hi))
                stack.append((lo, {**hi, v: rounded[v]}))
                continue

            candidate = {**rounded, **fixed}
            failed = None
            for lazy in lazies:
                values = tuple(candidate[v] for v in lazy.vars)
                if not self.lazy_holds(lazy, values):
                    failed = lazy
                    break
            if failed is None:
                return candidate

            # exclude the point on the failing atom's open variables, disjointly
            prefix_lo, prefix_hi = dict(lo), dict(hi)
            for v in failed.vars:
                if v in fixed:
                    continue
                a = candidate[v]
                if a - 1 >= prefix_lo[v]:
                    stack.append((dict(prefix_lo), {**prefix_hi, v: a - 1}))
                if a + 1 <= prefix_hi[v]:
                    stack.append(({**prefix_lo, v: a + 1}, dict(prefix_hi)))
                prefix_lo[v] = prefix_hi[v] = a
        return None


def _small_solution_bound(atoms: list, n: int) -> int:
    """Box for the unknowns of a system whose assigned variables are already constants."""
    m = max(len(atoms), 1)
    a = max([1] + [abs(c) for at in atoms for c in _signed(at)[0].values()] +
            [abs(_signed(at)[1]) for at in atoms])
    n = max(n + sum(at.op != "=" for at in atoms), 1)      # slack columns for inequalities
    exponent = 2 * m + 1
    # compare in logs first so the power is never materialised when it exceeds the cap
    if math.log(n) + exponent * math.log(m * a) >= math.log(SOLUTION_BOUND_CAP):
        return SOLUTION_BOUND_CAP
    return min(n * (m * a) ** exponent, SOLUTION_BOUND_CAP)


#  Disjunctive exploration

def _fresh(name: str, taken: set) -> str:
    k = 1
    while f"{name}'{k}" in taken:
        k += 1
    return f"{name}'{k}"


def solve(psi, assignment: Optional[Mapping] = None, settings: Optional[Settings] = None) -> Optional[dict]:
    """
    A valuation (free and existential variables) making ψ true with the given
    free-variable values, or None. Raises UnassignedVariableError when a free
    variable has no value.
    """
    settings = settings or get_settings()
    assignment = {k: int(v) for k, v in (assignment or {}).items()}
    for v in free_variables(psi):
        if v not in assignment:
            raise UnassignedVariableError(f"variable '{v}' is unassigned")
    for v, a in assignment.items():
        if a < 0:
            raise PreconditionError(f"variable '{v}' must be a natural number, got {a}")

    search = _Search(settings)
    names = set(assignment) | set(free_variables(psi))

    def feasible(atoms):
        search.tick()
        vars_ = sorted({v for a in atoms for v in a.variables()} | set(assignment))
        lo = {v: assignment.get(v, 0) for v in vars_}
        hi = {v: assignment.get(v, SOLUTION_BOUND_CAP) for v in vars_}
        return search.relaxation(atoms, vars_, lo, hi) is not None

    def options(head, atoms) -> Iterator:
        if isinstance(head, Disj):
            yield from head.items
        elif all(v in assignment for v in head.pinned):
            values = tuple(assignment[v] for v in head.pinned)
            if all(lo <= a <= hi for a, (lo, hi) in zip(values, head.ranges)):
                yield head.member(values)
        else:
            # pinned values outside the propagated intervals cannot satisfy the collected atoms
            vars_ = {v for a in atoms for v in a.variables()} | set(head.pinned)
            box = _tighten(atoms, {v: assignment.get(v, 0) for v in vars_},
                           {v: assignment.get(v, SOLUTION_BOUND_CAP) for v in vars_})
            if box is None:
                return
            lo, hi = box
            ranges = [range(max(a, lo[v]), min(b, hi[v]) + 1) for v, (a, b) in zip(head.pinned, head.ranges)]
            for values in itertools.product(*ranges):
                search.tick()
                yield head.member(values)

    def explore(pending: list, atoms: list, lazies: list, taken: set, dirty: bool):
        # conjunction commutes: every linear atom is collected before the first branch
        pending, atoms, lazies, branches = deque(pending), list(atoms), list(lazies), []
        while pending:
            head = pending.popleft()
            if isinstance(head, Atom):
                atoms.append(head)
                dirty = True
            elif isinstance(head, Conj):
                pending.extendleft(reversed(head.items))
            elif isinstance(head, Exists):
                mapping = {}
                for v in head.vars:
                    if v in taken:
                        mapping[v] = _fresh(v, taken | set(mapping.values()))
                taken = taken | {mapping.get(v, v) for v in head.vars}
                pending.appendleft(rename(head.body, mapping))
            elif isinstance(head, PointSet):
                atoms.extend(head.implied())
                lazies.append(head)
                dirty = True
            elif isinstance(head, (Disj, Family)):
                branches.append(head)
            else:
                raise TypeError(f"not a Presburger formula: {head!r}")

        if not branches:
            return search.integer_point(atoms, lazies, assignment)
        if dirty and not feasible(atoms):
            return None
        head, rest = branches[0], branches[1:]
        for option in options(head, atoms):
            found = explore([option] + rest, atoms, lazies, taken, False)
            if found is not None:
                return found
        return None

    result = explore([psi], [], [], names, False)
    logger.debug("[PRESBURGER] Solve finished", nodes=search.nodes, satisfiable=result is not None)
    if result is None:
        return None
    return {**result, **assignment}


def evaluate(psi, assignment: Optional[Mapping] = None, settings: Optional[Settings] = None) -> bool:
    return solve(psi, assignment, settings) is not None


#  Emission

class _Expander:
    """Expands lazy atoms into plain nodes while counting against the expansion budget."""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.count = 0

    def tick(self, k: int = 1):
        self.count += k
        if self.count > self.settings.expansion_budget:
            raise BudgetExceeded("expansion_budget", self.settings.expansion_budget, self.count,
                                 detail="formula too large to print")

    def expand(self, node):
        self.tick()
        if isinstance(node, Atom):
            return node
        if isinstance(node, Conj):
            return Conj(tuple(self.expand(i) for i in node.items))
        if isinstance(node, Disj):
            return Disj(tuple(self.expand(i) for i in node.items))
        if isinstance(node, Exists):
            return Exists(node.vars, self.expand(node.body))
        if isinstance(node, PointSet):
            points = []
            for values in itertools.product(range(node.bound + 1), repeat=len(node.vars)):
                self.tick()
                if node.member(values):
                    points.append(Conj(tuple(eq(v, a) for v, a in zip(node.vars, values))))
            return Disj(tuple(points))
        if isinstance(node, Family):
            members = []
            for values in node.values():
                self.tick()
                members.append(self.expand(node.member(values)))
            return Disj(tuple(members))
        raise TypeError(f"not a Presburger formula: {node!r}")


def _text(node) -> str:
    if isinstance(node, Atom):
        return f"{node.left.text()} {node.op} {node.right.text()}"
    if isinstance(node, Conj):
        if not node.items:
            return "true"
        return "(" + " & ".join(_text(i) for i in node.items) + ")"
    if isinstance(node, Disj):
        if not node.items:
            return "false"
        return "(" + " | ".join(_text(i) for i in node.items) + ")"
    if isinstance(node, Exists):
        return f"E {','.join(node.vars)}. {_text(node.body)}"
    raise TypeError(f"not a Presburger formula: {node!r}")


def to_text(psi, settings: Optional[Settings] = None) -> str:
    """Compact native form; lazy atoms are expanded within the expansion budget."""
    expanded = _Expander(settings or get_settings()).expand(psi)
    return _text(expanded)


def _smt(node) -> str:
    if isinstance(node, Atom):
        op = {"=": "=", "<=": "<=", ">=": ">="}[node.op]
        return f"({op} {node.left.smtlib()} {node.right.smtlib()})"
    if isinstance(node, Conj):
        if not node.items:
            return "true"
        return "(and " + " ".join(_smt(i) for i in node.items) + ")"
    if isinstance(node, Disj):
        if not node.items:
            return "false"
        return "(or " + " ".join(_smt(i) for i in node.items) + ")"
    if isinstance(node, Exists):
        decls = " ".join(f"({v} Int)" for v in node.vars)
        ranges = " ".join(f"(>= {v} 0)" for v in node.vars)
        return f"(exists ({decls}) (and {ranges} {_smt(node.body)}))"
    raise TypeError(f"not a Presburger formula: {node!r}")


def to_smtlib(psi, settings: Optional[Settings] = None) -> str:
    """SMT-LIB script asserting ψ over naturals, with every lazy node expanded to its literal form."""
    expanded = _Expander(settings or get_settings()).expand(psi)
    lines = ["(set-logic ALL)"]
    for v in free_variables(psi):
        lines.append(f"(declare-fun {v} () Int)")
        lines.append(f"(assert (>= {v} 0))")
    lines.append(f"(assert {_smt(expanded)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def formula_size(psi, settings: Optional[Settings] = None) -> int:
    """Node count of the expanded formula."""
    expanded = _Expander(settings or get_settings()).expand(psi)

    def size(node):
        if isinstance(node, (Conj, Disj)):
            return 1 + sum(size(i) for i in node.items)
        if isinstance(node, Exists):
            return 1 + size(node.body)
        return 1

    return size(expanded)


#  Semilinear sets in one dimension

@dataclass(frozen=True)
class SemilinearSet1D:
    """Union of {b + p·k : k ∈ ℕ}; period 0 is the singleton {b}."""
    pairs: tuple = ()

    @classmethod
    def of(cls, pairs) -> "SemilinearSet1D":
        clean = set()
        for b, p in pairs:
            if b < 0 or p < 0:
                raise PreconditionError(f"invalid pair ({b},{p})")
            clean.add((int(b), int(p)))
        return cls(tuple(sorted(clean)))

    def __contains__(self, n: int) -> bool:
        return any(n == b if p == 0 else (n >= b and (n - b) % p == 0) for b, p in self.pairs)

    def threshold(self) -> int:
        return max([b + 1 for b, p in self.pairs if p == 0] + [b for b, p in self.pairs if p], default=0)

    def period(self) -> int:
        periods = [p for _, p in self.pairs if p]
        return math.lcm(*periods) if periods else 1

    def members(self, upto: int) -> list:
        return [n for n in range(upto + 1) if n in self]

    def same_as(self, other: "SemilinearSet1D") -> bool:
        horizon = max(self.threshold(), other.threshold()) + 2 * math.lcm(self.period(), other.period())
        return all((n in self) == (n in other) for n in range(horizon + 1))

    def text(self) -> str:
        return "{" + ", ".join(f"({b},{p})" for b, p in self.pairs) + "}"


class Inconclusive:
    """No eventually periodic hypothesis fits the scanned window."""

    def __repr__(self):
        return "INCONCLUSIVE"

    def __bool__(self):
        return False


INCONCLUSIVE = Inconclusive()


def semilinear_from_bits(bits: Sequence[bool], verify_window: int):
    """
    Least period p, then least threshold t, with bits[i] == bits[i+p] for all
    i ≥ t inside the window, accepted only when at least verify_window
    positions were compared.
    """
    bits = [bool(b) for b in bits]
    length = len(bits)
    for p in range(1, length):
        t = 0
        for i in range(length - p - 1, -1, -1):
            if bits[i] != bits[i + p]:
                t = i + 1
                break
        if length - p - t < verify_window:
            continue
        pairs = [(i, 0) for i in range(t) if bits[i]]
        pairs += [(r, p) for r in range(t, t + p) if r < length and bits[r]]
        return SemilinearSet1D.of(pairs)
    return INCONCLUSIVE


def extract_semilinear_1d(psi, scan_bound: int, verify_window: int, var: Optional[str] = None,
                          member: Optional[Callable] = None, settings: Optional[Settings] = None):
    """Evaluate n = 0..scan_bound and fit an eventually periodic set, or INCONCLUSIVE."""
    if not scan_bound >= verify_window >= 1:
        raise PreconditionError("need scan_bound >= verify_window >= 1")
    if member is None:
        names = free_variables(psi)
        if var is None:
            if len(names) != 1:
                raise PreconditionError(f"expected one free variable, got {names}")
            var = names[0]
        member = lambda n: evaluate(psi, {var: n}, settings)
    bits = [member(n) for n in range(scan_bound + 1)]
    result = semilinear_from_bits(bits, verify_window)
    logger.info("[PRESBURGER] Semilinear extraction", scan_bound=scan_bound,
                members=sum(bits), result=repr(result) if result is INCONCLUSIVE else result.text())
    return result


def complement_1d(s: SemilinearSet1D, bound: Optional[int] = None) -> SemilinearSet1D:
    """Exact complement: explicit gaps below the threshold, missing residues above it."""
    t, p = s.threshold(), s.period()
    pairs = [(i, 0) for i in range(t) if i not in s]
    pairs += [(r, p) for r in range(t, t + p) if r not in s]
    out = SemilinearSet1D.of(pairs)
    if bound is not None:
        for n in range(bound + 1):
            if (n in s) == (n in out):
                raise PreconditionError(f"complement check failed at {n}")
    return out
