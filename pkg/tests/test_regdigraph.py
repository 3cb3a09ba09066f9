import itertools

import pytest

from c2spectra import presburger as pb
from c2spectra.biregular import ColoredBipartiteGraph, audit_bipartite
from c2spectra.config import Settings
from c2spectra.errors import BudgetExceeded, PreconditionError
from c2spectra.oracle import oracle_digraph
from c2spectra.regdigraph import (
    ColoredDigraph, audit_digraph, build_comp_reg_formula, build_reg_formula, construct_regular_digraph,
    decide_regular, merge_to_digraph, regular_threshold, search_regular_digraph, split_to_bipartite,
)
from c2spectra.typesys import DegreeMatrix


def M(text):
    return DegreeMatrix.parse(text)


#  Decisions

def test_single_in_single_out():
    assert decide_regular(M("1"), M("1"), [3])
    assert not decide_regular(M("1"), M("1"), [2])
    assert decide_regular(M("1"), M("1"), [0])


def test_unbalanced_degrees_never_realise():
    for n in range(1, 8):
        assert not decide_regular(M("1"), M("2"), [n])


def test_complete_tournaments_always_exist():
    for n in range(7):
        assert decide_regular(M(">0"), M(">0"), [n], complete=True)


def test_complete_regular_tournament_sizes():
    answers = [decide_regular(M("1"), M("1"), [n], complete=True) for n in range(6)]
    assert answers == [True, False, False, True, False, False]


def test_decide_beyond_the_oracle_cap():
    assert decide_regular(M("2"), M("2"), [30])
    assert not decide_regular(M("2"), M("3"), [30])


def test_two_parts_match_the_oracle():
    C, D = M("1,1"), M("1,1")
    for a in range(4):
        for b in range(4):
            assert decide_regular(C, D, [a, b]) == oracle_digraph(C, D, [a, b]).answer, (a, b)


def test_shapes_must_agree():
    with pytest.raises(PreconditionError):
        decide_regular(M("1"), M("1,1"), [2])


#  Formulas

def test_threshold():
    assert regular_threshold(M("1"), M("2")) == 7
    assert regular_threshold(M("3"), M("0"), complete=True) == 4


@pytest.mark.parametrize("c,d", [("1", "1"), ("1", "2"), (">1", "1")])
def test_reg_formula_matches_oracle(c, d):
    formula = build_reg_formula(M(c), M(d))
    for n in range(9):
        assert pb.evaluate(formula, {"X1": n}) == oracle_digraph(M(c), M(d), [n]).answer, (c, d, n)


@pytest.mark.parametrize("c,d", [(">0", ">0"), ("1", "1"), ("1;>0", "1;>0")])
def test_comp_reg_formula_matches_oracle(c, d):
    formula = build_comp_reg_formula(M(c), M(d))
    for n in range(8):
        expected = oracle_digraph(M(c), M(d), [n], complete=True).answer
        assert pb.evaluate(formula, {"X1": n}) == expected, (c, d, n)


#  Construction

def test_construct_cycle_cover():
    graph = construct_regular_digraph(M("1"), M("1"), [20])
    assert audit_digraph(graph) == []
    assert graph.size == 20
    structure = graph.to_structure()
    assert len(structure.rel("E1")) == 20
    assert structure.pred("P1") == frozenset(range(20))


def test_construct_complete_tournament():
    graph = construct_regular_digraph(M(">0"), M(">0"), [7], complete=True)
    assert graph.complete
    assert audit_digraph(graph) == []
    assert sum(len(c) for c in graph.edges) == 21


def test_construct_two_colors():
    graph = construct_regular_digraph(M("1;2"), M("1;2"), [15])
    assert audit_digraph(graph) == []


def test_construct_reports_missing_digraphs():
    with pytest.raises(PreconditionError):
        construct_regular_digraph(M("1"), M("1"), [2])


def test_empty_digraph():
    graph = construct_regular_digraph(M("3"), M("3"), [0])
    assert graph.size == 0 and audit_digraph(graph) == []


def test_split_and_merge():
    graph = construct_regular_digraph(M("2"), M("2"), [9])
    bipartite = split_to_bipartite(graph)
    assert audit_bipartite(bipartite) == []
    merged = merge_to_digraph(bipartite)
    assert audit_digraph(merged) == []
    assert merged.edges == graph.edges


def test_merge_repairs_loops():
    # a perfect matching u_a - w_a fuses into loops, repaired into a cycle cover
    loops = ColoredBipartiteGraph(((0, 1, 2, 3),), ((0, 1, 2, 3),), (((0, 0), (1, 1), (2, 2), (3, 3)),), M("1"), M("1"))
    merged = merge_to_digraph(loops)
    assert audit_digraph(merged) == []


def test_merge_needs_equal_sides():
    lopsided = ColoredBipartiteGraph(((0, 1),), ((0,),), ((),), M("0"), M("0"))
    with pytest.raises(PreconditionError):
        merge_to_digraph(lopsided)


def test_audit_flags_two_cycles():
    graph = ColoredDigraph(((0, 1),), (((0, 1), (1, 0)),), M("1"), M("1"))
    problems = audit_digraph(graph)
    assert any("more than one arc" in p for p in problems)


#  Exhaustive search

@pytest.mark.parametrize("c,d,complete", [
    ("1", "1", False),
    ("1,1", "1,1", False),
    ("1;1", "1;1", False),
    ("2;>0", ">0;2", False),
    (">0", ">0", True),
    ("1;>0", "1;>0", True),
    ("1,>0", ">0,1", True),
])
def test_search_matches_oracle(c, d, complete):
    C, D = M(c), M(d)
    for sizes in itertools.product(range(6 if C.cols == 1 else 4), repeat=C.cols):
        expected = oracle_digraph(C, D, list(sizes), complete=complete).answer
        graph = search_regular_digraph(C, D, list(sizes), complete)
        assert (graph is not None) == expected, (c, d, sizes)
        if graph is not None:
            assert audit_digraph(graph) == []


def test_search_has_a_size_cap(small_settings):
    with pytest.raises(BudgetExceeded) as info:
        search_regular_digraph(M("1"), M("1"), [13], settings=small_settings)
    assert info.value.budget == "construction_search_cap"


def test_search_node_budget():
    with pytest.raises(BudgetExceeded) as info:
        search_regular_digraph(M("2"), M("2"), [9], settings=Settings(solver_node_budget=3))
    assert info.value.budget == "solver_node_budget"


#  Reductions

def test_reg_formula_drops_unrequired_colors():
    formula = build_reg_formula(M("1;>0"), M("1;0"))
    for n in range(9):
        assert pb.evaluate(formula, {"X1": n}) == oracle_digraph(M("1"), M("1"), [n]).answer, n
    assert pb.evaluate(formula, {"X1": 60})


def test_reg_formula_merges_equal_parts():
    C, D = M("1,1"), M("1,1")
    formula = build_reg_formula(C, D)
    for a, b in itertools.product(range(4), repeat=2):
        assert pb.evaluate(formula, {"X1": a, "X2": b}) == oracle_digraph(C, D, [a, b]).answer, (a, b)
    assert pb.evaluate(formula, {"X1": 31, "X2": 40})


def test_complete_formula_with_zero_degrees_admits_one_vertex():
    formula = build_comp_reg_formula(M("0"), M("0"))
    assert [pb.evaluate(formula, {"X1": n}) for n in range(4)] == [True, True, False, False]


#  Acceptance window

ENTRIES = ["0", "1", "2", ">0", ">1", ">2"]


def _window_agrees(c, d, complete):
    C, D = M(c), M(d)
    formula = build_comp_reg_formula(C, D) if complete else build_reg_formula(C, D)
    for n in range(8):
        expected = oracle_digraph(C, D, [n], complete=complete).answer
        assert pb.evaluate(formula, {"X1": n}) == expected, (c, d, n, complete)
        assert decide_regular(C, D, [n], complete) == expected, (c, d, n, complete)


@pytest.mark.parametrize("c,d", [("2", "2"), ("1", ">1"), (">0", "2"), ("2", "1")])
@pytest.mark.parametrize("complete", [False, True])
def test_one_color_formulas_match_oracle(c, d, complete):
    _window_agrees(c, d, complete)


@pytest.mark.slow
@pytest.mark.parametrize("complete", [False, True])
def test_one_color_formulas_on_every_entry_pair(complete):
    for c, d in itertools.product(ENTRIES, repeat=2):
        _window_agrees(c, d, complete)


def test_unequal_exact_in_and_out_degrees_have_no_model():
    for c, d in [("1", "2"), ("2", "1"), ("0", "1"), ("2", "0")]:
        formula = build_reg_formula(M(c), M(d))
        assert pb.evaluate(formula, {"X1": 0})
        assert not any(pb.evaluate(formula, {"X1": n}) for n in range(1, 40)), (c, d)
