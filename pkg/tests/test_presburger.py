import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from c2spectra.config import Settings
from c2spectra.errors import BudgetExceeded, PreconditionError, UnassignedVariableError
from c2spectra.oracle import oracle_presburger
from c2spectra.presburger import (
    FALSE, INCONCLUSIVE, OPS, TRUE, Atom, Conj, Disj, Exists, Family, LinearTerm, PointSet, SemilinearSet1D,
    complement_1d, eq, evaluate, extract_semilinear_1d, formula_size, free_variables, ge, lazy, le, lsum, pconj,
    pdisj, rename, semilinear_from_bits, solve, to_smtlib, to_text,
)


#  Terms and builders

def test_linear_term_rejects_negative_coefficients():
    with pytest.raises(PreconditionError):
        LinearTerm.build(0, {"x": -1})
    with pytest.raises(PreconditionError):
        LinearTerm.build(-2)


def test_linear_term_accepts_numpy_integers():
    term = LinearTerm.build(np.int64(2), {"x": np.int64(3)})
    assert term.value({"x": 1}) == 5
    assert isinstance(term.const, int)


def test_lsum_merges_repeated_variables():
    term = lsum(["x", "x", "y"], 4)
    assert term.text() == "2*x + y + 4"


def test_pconj_and_pdisj_absorb_constants():
    assert pconj(TRUE, le("x", 2)) == le("x", 2)
    assert pconj(le("x", 2), FALSE) is FALSE
    assert pdisj(FALSE, ge("x", 1)) == ge("x", 1)
    assert pdisj(ge("x", 1), TRUE) is TRUE


def test_unknown_operator():
    with pytest.raises(PreconditionError):
        Atom(LinearTerm.of("x"), "<", LinearTerm.of(1))


#  Solving

def test_solve_returns_full_valuation():
    psi = Exists(("y",), pconj(eq("x", lsum(["y", "y"], 1)), le("x", 10)))
    assert solve(psi, {"x": 7})["y"] == 3
    assert solve(psi, {"x": 8}) is None


def test_existential_variables_do_not_capture():
    psi = pconj(ge("y", 3), Exists(("y",), eq("x", lsum(["y", "y"]))))
    assert evaluate(psi, {"x": 4, "y": 3})
    assert not evaluate(psi, {"x": 5, "y": 3})


def test_disjunction_tries_every_branch():
    psi = pdisj(eq("x", 1), eq("x", 4), Exists(("k",), eq("x", lsum(["k", "k", "k"]))))
    assert [n for n in range(8) if evaluate(psi, {"x": n})] == [0, 1, 3, 4, 6]


def test_assigned_values_enter_the_search_box():
    doubled = Exists(("z",), eq("x", lsum(["z", "z"])))
    assert [n for n in (34, 40, 100, 1000) if evaluate(doubled, {"x": n})] == [34, 40, 100, 1000]
    assert not evaluate(doubled, {"x": 35})
    assert solve(doubled, {"x": 100})["z"] == 50


@pytest.mark.parametrize("k,b", [(2, 0), (3, 1), (7, 5)])
def test_large_assigned_values_against_exhaustive_search(k, b):
    psi = Exists(("z",), eq("x", lsum(["z"] * k, b)))
    for n in range(0, 121):
        assert evaluate(psi, {"x": n}) == oracle_presburger(psi, {"x": n}, var_cap=n)


def test_coefficients_larger_than_the_assigned_value():
    psi = Exists(("a", "b"), eq(lsum(["a"] * 1000, 3), lsum(["x", "b"])))
    assert solve(psi, {"x": 2})["b"] == 1
    assert solve(psi, {"x": 1003})["a"] == 1


def test_unassigned_and_negative_values():
    psi = le("x", "y")
    with pytest.raises(UnassignedVariableError):
        solve(psi, {"x": 1})
    with pytest.raises(PreconditionError):
        solve(psi, {"x": -1, "y": 0})


def test_point_sets_are_excluded_point_by_point():
    lucky = PointSet(("y",), lambda v: v[0] == 7, bound=10, label="lucky")
    psi = Exists(("y",), pconj(le("y", 10), ge("y", "x"), lucky))
    assert solve(psi, {"x": 2})["y"] == 7
    assert solve(psi, {"x": 8}) is None


def test_point_sets():
    points = PointSet(("x", "y"), lambda v: v[0] + v[1] == 3 and v[0] > v[1], bound=5, label="pts")
    psi = Exists(("y",), points)
    assert evaluate(psi, {"x": 2})
    assert not evaluate(psi, {"x": 1})
    assert not evaluate(psi, {"x": 6})


def test_families_pin_their_variables():
    family = Family(("z",), ((0, 4),), lambda v: eq("x", 2 * v[0]), label="double")
    assert evaluate(Exists(("z",), family), {"x": 6})
    assert not evaluate(Exists(("z",), family), {"x": 10})
    assert not evaluate(family, {"x": 2, "z": 5})


def test_node_budget():
    hopeless = Family(("z",), ((0, 10_000),), lambda v: FALSE, label="hopeless")
    with pytest.raises(BudgetExceeded) as info:
        solve(Exists(("z",), hopeless), {}, Settings(solver_node_budget=50))
    assert info.value.budget == "solver_node_budget"


def test_rename_reaches_lazy_atoms():
    family = Family(("z",), ((0, 3),), lambda v: eq("x", v[0]))
    renamed = rename(Exists(("z",), family), {"x": "w"})
    assert evaluate(renamed, {"w": 3})
    assert not evaluate(renamed, {"w": 4})
    built = rename(lazy(lambda: pconj(le("x", 3), ge("x", 1))), {"x": "w"})
    assert evaluate(built, {"w": 1}) and not evaluate(built, {"w": 4})


#  Emission

def test_text_and_smtlib():
    psi = Exists(("k",), pconj(eq("x", lsum(["k", "k"], 2)), le("k", 3)))
    assert to_text(psi) == "E k. (x = 2*k + 2 & k <= 3)"
    script = to_smtlib(psi)
    assert "(declare-fun x () Int)" in script
    assert "(exists ((k Int))" in script
    assert script.rstrip().endswith("(check-sat)")


def test_smtlib_spells_out_lazy_nodes():
    psi = pconj(PointSet(("x",), lambda v: v[0] in (1, 3), bound=3), lazy(lambda: ge("x", 1)))
    script = to_smtlib(psi)
    assert "(or (and (= x 1)) (and (= x 3)))" in script
    assert "(>= x 1)" in script
    assert [line for line in script.splitlines() if "declare-fun" in line] == ["(declare-fun x () Int)"]


def test_emission_rejects_foreign_nodes():
    with pytest.raises(TypeError):
        to_smtlib(pconj(le("x", 1), object()))
    with pytest.raises(TypeError):
        to_text(object())


def test_lazy_atoms_expand_within_budget():
    points = PointSet(("x",), lambda v: v[0] % 2 == 0, bound=4)
    assert to_text(points) == "((x = 0) | (x = 2) | (x = 4))"
    assert formula_size(points) == 7
    big = PointSet(("x", "y"), lambda v: True, bound=1000)
    with pytest.raises(BudgetExceeded):
        to_text(big, Settings(expansion_budget=100))


#  Differential check against exhaustive search

def terms():
    return st.builds(lambda c, ca, cb, cx: LinearTerm.build(c, {"a": ca, "b": cb, "x": cx}),
                     st.integers(0, 4), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))


def bounded_formulas():
    atoms = st.builds(Atom, terms(), st.sampled_from(OPS), terms())

    def grow(children):
        items = st.lists(children, min_size=1, max_size=3).map(tuple)
        return st.one_of(items.map(Conj), items.map(Disj))

    bodies = st.recursive(atoms, grow, max_leaves=6)
    return bodies.map(lambda body: Exists(("a", "b"), Conj((body, le("a", 6), le("b", 6)))))


@given(bounded_formulas(), st.integers(0, 40))
@hsettings(max_examples=100, deadline=None)
def test_solver_agrees_with_exhaustive_search(psi, x):
    assert evaluate(psi, {"x": x}) == oracle_presburger(psi, {"x": x}, var_cap=6)


def wide_terms():
    names = ("a", "b", "c", "d", "x")
    return st.builds(lambda const, coeffs: LinearTerm.build(const, dict(zip(names, coeffs))),
                     st.integers(0, 5), st.lists(st.integers(0, 5), min_size=5, max_size=5))


def wide_formulas():
    atoms = st.builds(Atom, wide_terms(), st.sampled_from(OPS), wide_terms())

    def grow(children):
        items = st.lists(children, min_size=1, max_size=3).map(tuple)
        return st.one_of(items.map(Conj), items.map(Disj))

    bodies = st.recursive(atoms, grow, max_leaves=5)
    box = tuple(le(v, 4) for v in ("a", "b", "c", "d"))
    return bodies.map(lambda body: Exists(("a", "b", "c", "d"), Conj((body,) + box)))


@pytest.mark.slow
@given(wide_formulas(), st.integers(0, 200))
@hsettings(max_examples=500, deadline=None)
def test_solver_agrees_with_exhaustive_search_on_four_variables(psi, x):
    assert evaluate(psi, {"x": x}) == oracle_presburger(psi, {"x": x}, var_cap=4)


@given(wide_formulas(), st.integers(0, 200))
@hsettings(max_examples=60, deadline=None)
def test_four_variable_formulas_on_a_sample(psi, x):
    assert evaluate(psi, {"x": x}) == oracle_presburger(psi, {"x": x}, var_cap=4)


#  Semilinear sets

def test_semilinear_membership():
    s = SemilinearSet1D.of([(2, 3), (0, 0)])
    assert s.members(10) == [0, 2, 5, 8]
    assert s.threshold() == 2 and s.period() == 3
    with pytest.raises(PreconditionError):
        SemilinearSet1D.of([(-1, 2)])


def test_same_as_compares_sets_not_pairs():
    assert SemilinearSet1D.of([(0, 2)]).same_as(SemilinearSet1D.of([(0, 4), (2, 4)]))
    assert not SemilinearSet1D.of([(0, 2)]).same_as(SemilinearSet1D.of([(0, 4)]))


def test_fit_from_bits():
    bits = [n in SemilinearSet1D.of([(2, 3)]) for n in range(31)]
    fitted = semilinear_from_bits(bits, 10)
    assert fitted.text() == "{(2,3)}"
    finite = semilinear_from_bits([True] + [False] * 20, 10)
    assert finite.text() == "{(0,0)}"


def test_fit_needs_a_long_enough_window():
    assert semilinear_from_bits([True, False, True, True, False], 10) is INCONCLUSIVE
    assert not INCONCLUSIVE


def test_extract_from_formula():
    psi = Exists(("k",), eq("x", lsum(["k", "k", "k"], 2)))
    result = extract_semilinear_1d(psi, 30, 10)
    assert result.same_as(SemilinearSet1D.of([(2, 3)]))
    with pytest.raises(PreconditionError):
        extract_semilinear_1d(psi, 5, 10)


def test_complement():
    s = SemilinearSet1D.of([(2, 3)])
    comp = complement_1d(s, bound=40)
    assert comp.same_as(SemilinearSet1D.of([(0, 0), (1, 0), (3, 3), (4, 3)]))
    assert all((n in s) != (n in comp) for n in range(40))
