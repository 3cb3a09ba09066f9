import pytest

from c2spectra.errors import PreconditionError, UnassignedVariableError
from c2spectra.logic_core import Diamond, MAtom, MTop, QExists, QNot, Signature, parse_c2
from c2spectra.structures import (
    FiniteStructure, dump_structure, eval_c2, eval_mlc, eval_qmlc, extension, is_complete, load_structure, rename,
)

SIG = Signature(("P",), ("R",), ())
COMPLETE_SIG = Signature((), ("R", "Rbar"), (("R", "Rbar"),))


def triangle() -> FiniteStructure:
    return FiniteStructure.build(3, {"P": [0]}, {"R": [(0, 1), (1, 2), (2, 0)]})


def test_build_rejects_out_of_range():
    with pytest.raises(PreconditionError):
        FiniteStructure.build(2, {"P": [2]})


def test_equal_structures_compare_equal():
    a = FiniteStructure.build(2, {"P": [1, 0], "Q": []}, {"R": [(0, 1)]})
    b = FiniteStructure.build(2, {"P": [0, 1]}, {"R": [(0, 1), (0, 1)]})
    assert a == b


def test_dump_load_round_trip():
    g = triangle()
    assert load_structure(dump_structure(g, ["a triangle"])) == g


def test_load_needs_size():
    with pytest.raises(PreconditionError):
        load_structure("P: 0\n")


def test_rename_moves_elements():
    g = rename(triangle(), [2, 0, 1])
    assert g.pred("P") == frozenset({2})
    assert (2, 0) in g.rel("R")


def test_counting_quantifiers():
    g = triangle()
    assert eval_c2(g, parse_c2("E x^3 (E y^1 (R(x,y)))", SIG))
    assert not eval_c2(g, parse_c2("E x^1 (E y^2 (R(x,y)))", SIG))
    assert eval_c2(g, parse_c2("E x^0 (P(x) & ~P(x))", SIG))


def test_free_variable_needs_assignment():
    g = triangle()
    assert eval_c2(g, parse_c2("P(x)", SIG), {"x": 0})
    with pytest.raises(UnassignedVariableError):
        eval_c2(g, parse_c2("P(x)", SIG))


def test_modal_extension():
    g = triangle()
    assert extension(g, Diamond("R", 1, MAtom("P"))) == frozenset({2})
    assert eval_mlc(g, 0, MAtom("P"))
    assert eval_qmlc(g, QExists(3, Diamond("R", 1, MTop())))
    assert eval_qmlc(g, QNot(QExists(2, MAtom("P"))))


def test_completeness_clauses():
    ok = FiniteStructure.build(2, {}, {"R": [(0, 1)], "Rbar": [(1, 0)]})
    assert is_complete(ok, COMPLETE_SIG)

    loop = FiniteStructure.build(2, {}, {"R": [(0, 0), (0, 1)], "Rbar": [(0, 0), (1, 0)]})
    assert is_complete(loop, COMPLETE_SIG).clause == "N2"

    missing_inverse = FiniteStructure.build(2, {}, {"R": [(0, 1)]})
    assert is_complete(missing_inverse, COMPLETE_SIG).clause == "N3"

    overlap = FiniteStructure.build(2, {}, {"R": [(0, 1), (1, 0)], "Rbar": [(1, 0), (0, 1)]})
    assert is_complete(overlap, COMPLETE_SIG).clause == "N4"

    gap = FiniteStructure.build(3, {}, {"R": [(0, 1)], "Rbar": [(1, 0)]})
    report = is_complete(gap, COMPLETE_SIG)
    assert not report and report.clause == "N1"


def test_completeness_needs_pairing():
    with pytest.raises(PreconditionError):
        is_complete(triangle(), SIG)
