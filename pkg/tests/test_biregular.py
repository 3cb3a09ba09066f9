import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from c2spectra import presburger as pb
from c2spectra.biregular import (
    ColoredBipartiteGraph, PartialGraph, _combine_layers, _realize_color, _swap_parallel, audit_bipartite,
    augment_for_bnat, biregular_threshold, build_bireg_formula_bnat, build_bireg_formula_full,
    build_bireg_formula_nat, build_comp_bireg_formula, build_partial_formula, compute_H_set, construct_biregular,
    construct_vector_biregular, decide_biregular, edge_balance_violation, exists_simple_biregular, is_big_enough,
    is_easy_pair, realize, search_biregular, simple_biregular_formula, xi_matrix,
)
from c2spectra.config import Settings
from c2spectra.errors import BudgetExceeded, PreconditionError
from c2spectra.oracle import oracle_biregular
from c2spectra.typesys import EN, DegreeMatrix


def M(text):
    return DegreeMatrix.parse(text)


ENTRIES = ["0", "1", "2", ">0", ">1", ">2"]
WIDE_ENTRIES = [str(v) for v in range(5)] + [f">{v}" for v in range(5)]


#  Closed forms

@pytest.mark.parametrize("c,d", [("1", "1"), ("2", "1"), (">1", "2"), ("0", ">1"), (">2", ">1")])
def test_closed_form_matches_oracle(c, d):
    for m, n in itertools.product(range(5), repeat=2):
        expected = oracle_biregular(M(c), M(d), [m], [n]).answer
        assert exists_simple_biregular(EN.parse(c), EN.parse(d), m, n) == expected, (c, d, m, n)


@pytest.mark.parametrize("c,d", [("2", "3"), (">1", "4"), ("4", ">0"), ("3", "3")])
def test_closed_form_up_to_twelve(c, d):
    for m, n in itertools.product(range(13), repeat=2):
        expected = oracle_biregular(M(c), M(d), [m], [n], cap=24).answer
        assert exists_simple_biregular(EN.parse(c), EN.parse(d), m, n) == expected, (c, d, m, n)


@pytest.mark.slow
def test_closed_form_matches_oracle_on_every_entry_pair():
    for c, d in itertools.product(WIDE_ENTRIES, repeat=2):
        for m, n in itertools.product(range(13), repeat=2):
            expected = oracle_biregular(M(c), M(d), [m], [n], cap=24).answer
            assert exists_simple_biregular(EN.parse(c), EN.parse(d), m, n) == expected, (c, d, m, n)


def test_closed_form_vacuous_sides():
    assert exists_simple_biregular(EN(3), EN(1), 0, 0)
    assert exists_simple_biregular(EN(0), EN(2), 4, 0)
    assert not exists_simple_biregular(EN(1), EN(0), 1, 0)


def test_closed_form_over_variables():
    for c, d in itertools.product(WIDE_ENTRIES, repeat=2):
        formula = simple_biregular_formula(EN.parse(c), EN.parse(d), "X", "Y")
        for m, n in itertools.product(range(13), repeat=2):
            expected = exists_simple_biregular(EN.parse(c), EN.parse(d), m, n)
            assert pb.evaluate(formula, {"X": m, "Y": n}) == expected, (c, d, m, n)


#  Thresholds and small sets

def test_threshold():
    assert biregular_threshold(M("1,2;>0,1"), M("1;2")) == 2 * 4 * 3 + 3


def test_h_set_of_a_matching():
    h = compute_H_set(M("1"), M("1"), bound=4)
    assert h == frozenset({((0,), (0,)), ((1,), (1,)), ((2,), (2,))})


def test_big_enough():
    assert is_big_enough([3], [3], M("1"), M("1"))
    assert not is_big_enough([2], [2], M("1"), M("1"))
    assert not is_big_enough([10], [0], M(">1"), M(">0"))


def test_edge_balance():
    assert edge_balance_violation(M("2"), M("3"), [3], [2]) is None
    assert "color 1" in edge_balance_violation(M("2"), M("3"), [3], [3])
    assert edge_balance_violation(M(">1"), M("2"), [3], [2]) is None
    assert edge_balance_violation(M(">1"), M("2"), [5], [2]) is not None


#  Formulas

def _formula_agrees(formula, C, D, limit):
    xs = [f"X{j + 1}" for j in range(C.cols)]
    ys = [f"Y{k + 1}" for k in range(D.cols)]
    for sizes in itertools.product(range(limit + 1), repeat=C.cols + D.cols):
        m, n = list(sizes[:C.cols]), list(sizes[C.cols:])
        expected = oracle_biregular(C, D, m, n).answer
        got = pb.evaluate(formula, {**dict(zip(xs, m)), **dict(zip(ys, n))})
        assert got == expected, (C.text(), D.text(), m, n)


def test_nat_formula_one_color():
    C, D = M("1"), M("2")
    _formula_agrees(build_bireg_formula_nat(C, D), C, D, 6)


def test_nat_formula_large_sizes_follow_edge_count():
    formula = build_bireg_formula_nat(M("2"), M("3"))
    assert pb.evaluate(formula, {"X1": 30, "Y1": 20})
    assert not pb.evaluate(formula, {"X1": 31, "Y1": 20})


def test_nat_formula_two_colors():
    C, D = M("1;1"), M("1;1")
    _formula_agrees(build_bireg_formula_nat(C, D), C, D, 4)


def test_nat_formula_rejects_at_least_entries():
    with pytest.raises(PreconditionError):
        build_bireg_formula_nat(M(">1"), M("1"))


def test_bnat_formula_for_big_sizes():
    formula = build_bireg_formula_bnat(M(">1"), M("2"))
    assert pb.evaluate(formula, {"X1": 20, "Y1": 12})
    assert not pb.evaluate(formula, {"X1": 20, "Y1": 9})


def test_augmentation_adds_absorbing_columns():
    aug = augment_for_bnat(M(">1"), M("2"))
    assert aug.C.shape == (1, 2)
    assert aug.D.shape == (1, 1)
    assert len(aug.k_terms) == 1 and not aug.l_terms
    with pytest.raises(PreconditionError):
        augment_for_bnat(M(">1"), M(">2"))


def test_xi_matrix():
    assert xi_matrix(M("2;>1")).text() == "2,1,2;>1,>1,>0"
    assert xi_matrix(M("0;1")).text() == "0,0,0;1,1,0"


def test_partial_formula_depth_budget():
    P = PartialGraph(M("1"), M("1"), S=((EN(1),),) * 9)
    with pytest.raises(BudgetExceeded) as info:
        build_partial_formula(P)
    assert info.value.budget == "partial_depth_budget"


def test_full_formula_small_sizes():
    for text_c, text_d in [(">1", "2"), ("1", ">0")]:
        C, D = M(text_c), M(text_d)
        _formula_agrees(build_bireg_formula_full(C, D), C, D, 3)


def test_full_formula_with_pinned_right_part():
    formula = build_bireg_formula_full(M("1"), M(">0"))
    assert pb.evaluate(formula, {"X1": 10, "Y1": 1})
    assert not pb.evaluate(formula, {"X1": 10, "Y1": 0})


def test_easy_pairs():
    assert is_easy_pair(M("1;>0"), M("1;>0"))
    assert not is_easy_pair(M("1;0"), M("1;>0"))


def test_complete_formula():
    formula = build_comp_bireg_formula(M("2"), M("2"))
    assert pb.evaluate(formula, {"X1": 2, "Y1": 2})
    assert not pb.evaluate(formula, {"X1": 3, "Y1": 2})


#  Decision and construction

def test_decide_beyond_the_oracle_cap():
    assert decide_biregular(M("2"), M("3"), [30], [20])
    assert not decide_biregular(M("2"), M("3"), [31], [20])
    assert decide_biregular(M(">1"), M("2"), [10], [8])
    assert decide_biregular(M("1;1"), M("1;1"), [10], [10])


def test_decide_checks_shapes():
    with pytest.raises(PreconditionError):
        decide_biregular(M("1"), M("1"), [1, 1], [1])


def test_realize_audits_clean():
    graph = realize(M("2;>0"), M("3;1"), [9], [6])
    assert graph is not None
    assert audit_bipartite(graph) == []


def test_audit_reports_broken_graphs():
    graph = ColoredBipartiteGraph(((0, 1),), ((0,),), (((0, 0),),), M("1"), M("2"))
    problems = audit_bipartite(graph)
    assert any("left 1" in p for p in problems)
    assert any("right 0" in p for p in problems)


def test_construct_complete_graph():
    graph = construct_biregular(M("1;>0"), M("1;>0"), [5], [5], complete=True)
    assert graph.complete
    assert sum(len(c) for c in graph.edges) == 25
    assert audit_bipartite(graph) == []


def test_construct_reports_missing_graphs():
    with pytest.raises(PreconditionError):
        construct_biregular(M("1"), M("1"), [2], [3])


def test_construct_small_matching():
    graph = construct_biregular(M("1"), M("1"), [3], [3])
    assert audit_bipartite(graph) == []


def test_structure_view():
    graph = construct_biregular(M("2"), M("1"), [2], [4])
    structure = graph.to_structure()
    assert structure.size == 6
    assert structure.pred("U1") == frozenset({0, 1})
    assert structure.pred("V1") == frozenset({2, 3, 4, 5})
    assert len(structure.rel("E1")) == 4


def test_vector_construction():
    graph = construct_vector_biregular([1, 2], [3], [10, 10], [10])
    assert audit_bipartite(graph) == []
    with pytest.raises(PreconditionError):
        construct_vector_biregular([0], [1], [10], [10])
    with pytest.raises(PreconditionError):
        construct_vector_biregular([1], [2], [10], [10])
    with pytest.raises(PreconditionError):
        construct_vector_biregular([1], [1], [2], [2])


#  Reductions

def test_unrequired_colors_drop_out():
    formula = build_bireg_formula_full(M("1;>0"), M("1;0"))
    assert pb.formula_size(formula) < 10
    assert pb.evaluate(formula, {"X1": 7, "Y1": 7})
    assert not pb.evaluate(formula, {"X1": 7, "Y1": 6})


def test_a_color_nobody_carries_empties_the_parts_that_need_it():
    C, D = M("0"), M("1")
    formula = build_bireg_formula_full(C, D)
    assert pb.evaluate(formula, {"X1": 9, "Y1": 0})
    assert not pb.evaluate(formula, {"X1": 9, "Y1": 1})
    _formula_agrees(formula, C, D, 3)


def test_equal_columns_merge():
    C, D = M("1,1"), M("2")
    formula = build_bireg_formula_full(C, D)
    _formula_agrees(formula, C, D, 3)
    assert pb.evaluate(formula, {"X1": 13, "X2": 7, "Y1": 10})
    assert not pb.evaluate(formula, {"X1": 13, "X2": 8, "Y1": 10})


def test_undemanding_right_side_uses_hall():
    C, D = M("2,1;0,1"), M(">0;>0")
    formula = build_bireg_formula_full(C, D)
    _formula_agrees(formula, C, D, 3)
    assert pb.evaluate(formula, {"X1": 40, "X2": 40, "Y1": 2})
    assert not pb.evaluate(formula, {"X1": 0, "X2": 40, "Y1": 1})


def test_complete_easy_pair_needs_only_a_simple_graph():
    C, D = M("1;>0"), M("1;>0")
    formula = build_comp_bireg_formula(C, D)
    assert pb.evaluate(formula, {"X1": 25, "Y1": 25})
    assert not pb.evaluate(formula, {"X1": 25, "Y1": 24})
    assert not pb.evaluate(formula, {"X1": 25, "Y1": 0})


#  Acceptance windows

@st.composite
def degree_matrices(draw, rows: int, cols: int):
    entries = draw(st.lists(st.sampled_from(ENTRIES), min_size=rows * cols, max_size=rows * cols))
    return M(";".join(",".join(entries[i * cols:(i + 1) * cols]) for i in range(rows)))


@st.composite
def bireg_instances(draw, max_total: int = 10):
    ell, m, n = draw(st.integers(1, 2)), draw(st.integers(1, 2)), draw(st.integers(1, 2))
    C, D = draw(degree_matrices(ell, m)), draw(degree_matrices(ell, n))
    sizes, room = [], max_total
    for _ in range(m + n):
        size = draw(st.integers(0, room))
        sizes.append(size)
        room -= size
    return C, D, sizes[:m], sizes[m:], draw(st.booleans())


def _check_instance(C, D, m, n, complete):
    xs, ys = [f"X{j + 1}" for j in range(C.cols)], [f"Y{k + 1}" for k in range(D.cols)]
    formula = build_bireg_formula_full(C, D, xs, ys, complete)
    expected = oracle_biregular(C, D, m, n, complete=complete).answer
    assert pb.evaluate(formula, {**dict(zip(xs, m)), **dict(zip(ys, n))}) == expected, \
        (C.text(), D.text(), m, n, complete)


@given(bireg_instances())
@hsettings(max_examples=40, deadline=None)
def test_full_formula_matches_oracle_on_samples(instance):
    _check_instance(*instance)


@pytest.mark.slow
@given(bireg_instances())
@hsettings(max_examples=1500, deadline=None)
def test_full_formula_matches_oracle_across_the_window(instance):
    _check_instance(*instance)


@pytest.mark.slow
@pytest.mark.parametrize("complete", [False, True])
def test_full_formula_one_color_every_entry_pair(complete):
    for c, d in itertools.product(ENTRIES, repeat=2):
        for m in range(11):
            for n in range(11 - m):
                _check_instance(M(c), M(d), [m], [n], complete)


#  Exhaustive search

@pytest.mark.parametrize("c,d,complete", [
    ("1;1", "1;1", False),
    ("2,1;0,1", "1;1", False),
    (">0;1", "1;>0", False),
    ("1;>0", ">0;1", True),
    ("2", "1,>0", True),
])
def test_search_matches_oracle(c, d, complete):
    C, D = M(c), M(d)
    for sizes in itertools.product(range(4), repeat=C.cols + D.cols):
        m, n = list(sizes[:C.cols]), list(sizes[C.cols:])
        expected = oracle_biregular(C, D, m, n, complete=complete).answer
        graph = search_biregular(C, D, m, n, complete)
        assert (graph is not None) == expected, (c, d, m, n)
        if graph is not None:
            assert audit_bipartite(graph) == []


def test_search_splits_a_square_into_two_matchings():
    graph = search_biregular(M("1;1"), M("1;1"), [2], [2])
    assert graph is not None and audit_bipartite(graph) == []


def test_search_has_a_size_cap(small_settings):
    with pytest.raises(BudgetExceeded) as info:
        search_biregular(M("1"), M("1"), [7], [7], settings=small_settings)
    assert info.value.budget == "construction_search_cap"


def test_search_node_budget():
    tight = Settings(solver_node_budget=5)
    with pytest.raises(BudgetExceeded) as info:
        search_biregular(M("2;1"), M("2;1"), [6], [6], settings=tight)
    assert info.value.budget == "solver_node_budget"


#  Swap repair

def test_stride_merge_without_repairs():
    edges = _realize_color([3, 3, 3, 3], [3, 3, 3, 3])
    assert len(edges) == len(set(edges)) == 12
    assert Counter(u for u, _ in edges) == Counter({u: 3 for u in range(4)})
    assert Counter(v for _, v in edges) == Counter({v: 3 for v in range(4)})


def test_parallel_edges_are_swapped_with_the_least_edge():
    assert _realize_color([2, 2], [1, 1, 2]) == [(0, 1), (0, 2), (1, 0), (1, 2)]
    assert _swap_parallel(Counter({(0, 0): 2, (1, 1): 2})) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_swap_repair_gives_up_without_room():
    assert _swap_parallel(Counter({(0, 0): 2})) is None
    assert _realize_color([2, 0], [2]) is None
    assert _realize_color([1], [2]) is None


def test_layers_are_made_disjoint():
    layers = _combine_layers([{(0, 0), (1, 1)}, {(0, 0), (1, 1)}])
    assert layers == [{(0, 0), (1, 1)}, {(0, 1), (1, 0)}]
    assert _combine_layers([{(0, 0)}, {(0, 0)}]) is None


#  Construction audits

def _entry(degrees, rng) -> str:
    if not degrees:
        return "0"
    low = min(degrees)
    if low == max(degrees) and rng.integers(0, 2):
        return str(low)
    return f">{max(low - int(rng.integers(0, 2)), 0)}"


def _matrix(deg, members, rng) -> DegreeMatrix:
    rows = [",".join(_entry([int(deg[i, u]) for u in part], rng) for part in members) for i in range(deg.shape[0])]
    return M(";".join(rows))


def _witnessed_instance(rng):
    """Sizes and degree matrices read off a random colored graph, so the instance is always realisable."""
    ell, m, n = (int(rng.integers(1, 3)) for _ in range(3))
    sizes_m = [int(rng.integers(0, 5)) for _ in range(m)]
    sizes_n = [int(rng.integers(0, 5)) for _ in range(n)]
    complete = bool(rng.integers(0, 2))
    n_left, n_right = sum(sizes_m), sum(sizes_n)
    deg_l, deg_r = np.zeros((ell, n_left), dtype=int), np.zeros((ell, n_right), dtype=int)
    for u in range(n_left):
        for v in range(n_right):
            color = int(rng.integers(0, ell + (0 if complete else 1)))
            if color < ell:
                deg_l[color, u] += 1
                deg_r[color, v] += 1
    left_parts = [list(p) for p in np.split(np.arange(n_left), np.cumsum(sizes_m)[:-1])]
    right_parts = [list(p) for p in np.split(np.arange(n_right), np.cumsum(sizes_n)[:-1])]
    return _matrix(deg_l, left_parts, rng), _matrix(deg_r, right_parts, rng), sizes_m, sizes_n, complete


def test_two_hundred_random_constructions_pass_the_audit():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        C, D, m, n, complete = _witnessed_instance(rng)
        assert decide_biregular(C, D, m, n, complete), (C.text(), D.text(), m, n, complete)
        graph = construct_biregular(C, D, m, n, complete)
        assert graph.complete == complete
        assert audit_bipartite(graph) == [], (C.text(), D.text(), m, n, complete)


@pytest.mark.slow
def test_random_instances_are_accepted_by_the_formulas():
    rng = np.random.default_rng(7)
    for _ in range(200):
        C, D, m, n, complete = _witnessed_instance(rng)
        xs, ys = [f"X{j + 1}" for j in range(C.cols)], [f"Y{k + 1}" for k in range(D.cols)]
        formula = build_bireg_formula_full(C, D, xs, ys, complete)
        assert pb.evaluate(formula, {**dict(zip(xs, m)), **dict(zip(ys, n))}), (C.text(), D.text(), m, n)
        assert audit_bipartite(construct_biregular(C, D, m, n, complete)) == []
