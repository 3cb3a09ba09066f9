import pytest

from c2spectra.config import Settings
from c2spectra.errors import OracleCapExceeded, PreconditionError
from c2spectra.logic_core import Signature, parse_c2, parse_qmlc
from c2spectra.oracle import (
    oracle_biregular, oracle_complete_biregular, oracle_complete_digraph, oracle_complete_spectrum,
    oracle_digraph, oracle_presburger, oracle_spectrum,
)
from c2spectra.presburger import Exists, eq, le, lsum, pconj
from c2spectra.structures import eval_c2, eval_qmlc, is_complete
from c2spectra.typesys import DegreeMatrix


def M(text):
    return DegreeMatrix.parse(text)


#  Spectrum

def test_exactly_one_p(sig_p):
    phi = parse_c2("E x^1 (P(x)) & ~E x^2 (P(x))", sig_p)
    assert not oracle_spectrum(phi, sig_p, 0)
    result = oracle_spectrum(phi, sig_p, 3)
    assert result.answer
    assert eval_c2(result.witness, phi)


def test_empty_structure_is_decided_directly(sig_p):
    assert oracle_spectrum(parse_c2("~E x^1 (P(x))", sig_p), sig_p, 0)


def test_cycle_cover_needs_two_elements(sentence):
    doc = sentence("in_out.c2")
    answers = [oracle_spectrum(doc.formula, doc.sig, n).answer for n in range(5)]
    assert answers == [True, False, True, True, True]


def test_one_in_two_out_only_empty(sentence):
    doc = sentence("one_in_two_out.c2")
    assert [oracle_spectrum(doc.formula, doc.sig, n).answer for n in range(4)] == [True, False, False, False]


def test_structure_caps(sig_p, sig_pqr):
    phi = parse_c2("E x^1 (P(x))", sig_p)
    with pytest.raises(OracleCapExceeded) as info:
        oracle_spectrum(phi, sig_p, 9)
    assert info.value.budget == "oracle_unary_cap"
    with pytest.raises(OracleCapExceeded):
        oracle_spectrum(parse_c2("E x^1 (P(x))", sig_pqr), sig_pqr, 7)
    assert oracle_spectrum(parse_c2("E x^1 (P(x))", sig_pqr), sig_pqr, 7,
                           Settings(oracle_structure_cap=7)).answer


def test_complete_spectrum_every_element_has_a_successor():
    sig = Signature((), ("R", "Rbar"), (("R", "Rbar"),))
    phi = parse_qmlc("~E^1 [~<>_R^1 true]", sig)
    answers = [oracle_complete_spectrum(phi, sig, n).answer for n in range(5)]
    assert answers == [True, False, False, True, True]
    witness = oracle_complete_spectrum(phi, sig, 3).witness
    assert is_complete(witness, sig) and eval_qmlc(witness, phi)


def test_complete_spectrum_needs_pairing(sig_pqr):
    with pytest.raises(PreconditionError):
        oracle_complete_spectrum(parse_qmlc("E^1 [P]", sig_pqr), sig_pqr, 2)


#  Graphs

def test_biregular_matching():
    result = oracle_biregular(M("1"), M("1"), [2], [2])
    assert result.answer and len(result.witness[0]) == 2
    assert not oracle_biregular(M("1"), M("1"), [2], [3])


def test_complete_biregular():
    assert oracle_complete_biregular(M("2"), M("2"), [2], [2])
    assert not oracle_complete_biregular(M("1"), M("1"), [2], [2])
    assert oracle_complete_biregular(M("1;>0"), M("1;>0"), [2], [2])


def test_biregular_at_least_entries():
    assert oracle_biregular(M(">1"), M("2"), [3], [2])
    assert not oracle_biregular(M(">2"), M("1"), [3], [2])


def test_regular_digraph():
    assert oracle_digraph(M("1"), M("1"), [3])
    assert not oracle_digraph(M("1"), M("1"), [2])
    assert not oracle_digraph(M("1"), M("2"), [3])


def test_complete_digraph_is_a_tournament():
    result = oracle_complete_digraph(M(">0"), M(">0"), [4])
    assert result.answer
    assert len(result.witness[0]) == 6
    assert not oracle_complete_digraph(M("0"), M("0"), [2])


def test_graph_caps_and_shapes():
    with pytest.raises(OracleCapExceeded):
        oracle_digraph(M("1"), M("1"), [13])
    assert oracle_digraph(M("1"), M("1"), [13], cap=13)
    with pytest.raises(PreconditionError):
        oracle_biregular(M("1,1"), M("1"), [1], [1])


#  Presburger

def test_presburger_sweep():
    psi = Exists(("k",), pconj(eq("x", lsum(["k", "k"])), le("k", 3)))
    assert oracle_presburger(psi, {"x": 6})
    assert not oracle_presburger(psi, {"x": 7})
    assert not oracle_presburger(psi, {"x": 8})
    with pytest.raises(PreconditionError):
        oracle_presburger(psi, {})
