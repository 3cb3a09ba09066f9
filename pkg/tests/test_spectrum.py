import itertools

import pytest

from c2spectra import presburger as pb
from c2spectra.biregular import search_biregular
from c2spectra.config import Settings
from c2spectra.errors import PreconditionError
from c2spectra.logic_core import MAtom, Signature, conj, parse_c2
from c2spectra.oracle import oracle_spectrum
from c2spectra.spectrum import (
    SIZE_VAR, _exactly, build_preb, compile_sentence, image_member, residue_sentence, sentence_from_semilinear,
    spectrum_enumerate, spectrum_member, witness_model,
)
from c2spectra.structures import eval_c2


STRICT = Settings(oracle_fallback=False)

SUITE_NAMES = ["contradiction", "exactly-one-P", "exactly-two-P", "no-P", "out-one", "tournament", "two-relations"]


#  Membership against the oracle

@pytest.mark.parametrize("name", SUITE_NAMES)
def test_membership_matches_oracle(suite, name):
    doc = suite[name]
    for n in range(7):
        expected = oracle_spectrum(doc.formula, doc.sig, n).answer
        assert spectrum_member(doc.formula, doc.sig, n, STRICT) == expected, (name, n)


@pytest.mark.parametrize("name", ["exactly-one-P", "exactly-two-P", "no-P", "contradiction"])
def test_unary_sentences_stay_on_the_pipeline(suite, name):
    doc = suite[name]
    for n in range(9):
        expected = oracle_spectrum(doc.formula, doc.sig, n).answer
        assert spectrum_member(doc.formula, doc.sig, n, STRICT) == expected, (name, n)


def test_membership_beyond_the_oracle(suite):
    doc = suite["exactly-two-P"]
    assert spectrum_member(doc.formula, doc.sig, 40, STRICT)
    assert not spectrum_member(suite["contradiction"].formula, doc.sig, 40, STRICT)


def test_negative_size_is_rejected(suite):
    doc = suite["no-P"]
    with pytest.raises(PreconditionError):
        spectrum_member(doc.formula, doc.sig, -1)


def test_cycle_cover_spectrum(sentence):
    doc = sentence("in_out.c2")
    assert [spectrum_member(doc.formula, doc.sig, n) for n in range(5)] == [True, False, True, True, True]


def test_one_in_two_out_has_only_the_empty_model(sentence):
    doc = sentence("one_in_two_out.c2")
    assert [spectrum_member(doc.formula, doc.sig, n) for n in range(5)] == [True, False, False, False, False]


def test_bijection_chain_spectrum(sentence):
    doc = sentence("gamma23.c2")
    answers = [spectrum_member(doc.formula, doc.sig, n, STRICT) for n in range(7)]
    assert answers == [False, False, True, False, False, True, False]


def test_biregular_sentence_spectrum(sentence):
    doc = sentence("bireg23.c2")
    answers = [spectrum_member(doc.formula, doc.sig, n, STRICT) for n in range(7)]
    assert answers == [True, False, False, False, False, True, False]


#  Compilation

def test_compiled_sentence_is_cached(suite):
    doc = suite["exactly-one-P"]
    assert compile_sentence(doc.formula, doc.sig) is compile_sentence(doc.formula, doc.sig)


def test_preb_counts_every_kind(suite):
    doc = suite["exactly-one-P"]
    compiled = compile_sentence(doc.formula, doc.sig)
    names = [v for vs in compiled.variables.values() for v in vs]
    assert names and all(v.startswith("X_") for v in names)
    assert pb.free_variables(compiled.preb) == [SIZE_VAR]
    term = compiled.count_term(MAtom("P"))
    assert set(term.variables()) <= set(names)


def test_preb_with_extra_atoms(suite):
    doc = suite["exactly-one-P"]
    compiled = compile_sentence(doc.formula, doc.sig)
    preb, _ = build_preb(compiled.qmlc, compiled.completed.sig, compiled.table,
                         extra=[pb.ge(compiled.count_term(MAtom("P")), 2)])
    assert not pb.evaluate(preb, {SIZE_VAR: 3})


def test_extra_unary_must_belong_to_the_signature(suite):
    doc = suite["exactly-one-P"]
    with pytest.raises(PreconditionError):
        compile_sentence(doc.formula, doc.sig, extra_unary=["Q"])


#  Enumeration

def test_enumerate_fits_a_semilinear_set(suite):
    doc = suite["exactly-one-P"]
    bits, result = spectrum_enumerate(doc.formula, doc.sig, 8)
    assert bits == [False] + [True] * 8
    assert result.same_as(pb.SemilinearSet1D.of([(1, 1)]))


def test_enumerate_empty_spectrum(suite):
    doc = suite["contradiction"]
    bits, result = spectrum_enumerate(doc.formula, doc.sig, 6)
    assert not any(bits)
    assert result is not pb.INCONCLUSIVE and result.pairs == ()


def test_enumerate_needs_a_range(suite):
    doc = suite["no-P"]
    with pytest.raises(PreconditionError):
        spectrum_enumerate(doc.formula, doc.sig, 0)


#  Witnesses

@pytest.mark.parametrize("name,n", [("exactly-one-P", 3), ("no-P", 2), ("out-one", 4), ("tournament", 4)])
def test_witness_models_satisfy_the_sentence(suite, name, n):
    doc = suite[name]
    model = witness_model(doc.formula, doc.sig, n)
    assert model.size == n
    assert eval_c2(model, doc.formula)


def test_witness_for_a_large_size(suite):
    doc = suite["exactly-two-P"]
    model = witness_model(doc.formula, doc.sig, 25, STRICT)
    assert model.size == 25
    assert len(model.pred("P")) == 2


def test_no_witness_outside_the_spectrum(suite):
    doc = suite["contradiction"]
    with pytest.raises(PreconditionError):
        witness_model(doc.formula, doc.sig, 3)


def test_cycle_cover_witness(sentence):
    doc = sentence("in_out.c2")
    model = witness_model(doc.formula, doc.sig, 4)
    assert eval_c2(model, doc.formula)
    assert len(model.rel("R")) == 4


#  Images

def test_image_of_the_pinned_predicate(suite):
    doc = suite["exactly-one-P"]
    assert image_member(doc.formula, doc.sig, ["P"], [1])
    assert not image_member(doc.formula, doc.sig, ["P"], [2], STRICT)


def test_image_of_a_predicate_the_sentence_ignores():
    sig = Signature(("P", "Q"), (), ())
    phi = parse_c2("E x^1 (P(x)) & ~E x^2 (P(x))", sig)
    assert image_member(phi, sig, ["P", "Q"], [1, 5], STRICT)
    assert image_member(phi, sig, ["Q"], [0], STRICT)


def test_image_argument_checks(suite):
    doc = suite["exactly-one-P"]
    with pytest.raises(PreconditionError):
        image_member(doc.formula, doc.sig, ["P"], [1, 2])
    with pytest.raises(PreconditionError):
        image_member(doc.formula, doc.sig, ["P"], [-1])


#  Sentences for semilinear sets

def test_residue_sentence_spectrum():
    phi, sig = residue_sentence(1, 2)
    answers = [oracle_spectrum(phi, sig, n).answer for n in range(6)]
    assert answers == [False, True, False, True, False, True]


def test_residue_sentence_without_period():
    phi, sig = residue_sentence(2, 0)
    assert sig.binary == ()
    assert [oracle_spectrum(phi, sig, n).answer for n in range(5)] == [False, False, True, False, False]


def test_sentence_from_finite_set():
    phi, sig = sentence_from_semilinear(pb.SemilinearSet1D.of([(0, 0), (3, 0)]))
    assert sig.unary == ("A1", "A2")
    assert [oracle_spectrum(phi, sig, n).answer for n in range(5)] == [True, False, False, True, False]


def test_sentence_from_empty_set():
    phi, sig = sentence_from_semilinear(pb.SemilinearSet1D.of([]))
    assert not any(oracle_spectrum(phi, sig, n).answer for n in range(4))


#  Headline sentences without the oracle

@pytest.mark.parametrize("base,period", [(0, 1), (1, 2), (2, 3)])
def test_residue_sentences_match_oracle(base, period):
    phi, sig = residue_sentence(base, period)
    for n in range(7):
        expected = oracle_spectrum(phi, sig, n).answer
        assert spectrum_member(phi, sig, n, STRICT) == expected, (base, period, n)


@pytest.mark.parametrize("name", ["gamma23.c2", "bireg23.c2", "in_out.c2", "one_in_two_out.c2"])
def test_sample_sentences_match_oracle(sentence, name):
    doc = sentence(name)
    for n in range(7):
        expected = oracle_spectrum(doc.formula, doc.sig, n).answer
        assert spectrum_member(doc.formula, doc.sig, n, STRICT) == expected, (name, n)


def test_bijection_chain_beyond_the_oracle(sentence):
    doc = sentence("gamma23.c2")
    assert spectrum_member(doc.formula, doc.sig, 8, STRICT)
    assert spectrum_member(doc.formula, doc.sig, 20, STRICT)
    assert not spectrum_member(doc.formula, doc.sig, 21, STRICT)


def test_biregular_sentence_beyond_the_oracle(sentence):
    doc = sentence("bireg23.c2")
    assert spectrum_member(doc.formula, doc.sig, 10, STRICT)
    assert not spectrum_member(doc.formula, doc.sig, 12, STRICT)


def test_only_the_small_set_consults_the_solver_oracle(sentence, monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("solver oracle reached outside the small biregular sets")

    def small_set_by_search(C, D, M, N, complete, cap):
        return search_biregular(C, D, M, N, complete, Settings(construction_search_cap=cap)) is not None

    monkeypatch.setattr("c2spectra.spectrum.oracle_spectrum", refuse)
    monkeypatch.setattr("c2spectra.biregular.oracle_biregular", refuse)
    monkeypatch.setattr("c2spectra.biregular._oracle_answer", small_set_by_search)
    gamma = sentence("gamma23.c2")
    assert [spectrum_member(gamma.formula, gamma.sig, n, STRICT) for n in range(9)] == \
        [False, False, True, False, False, True, False, False, True]
    bireg = sentence("bireg23.c2")
    assert [spectrum_member(bireg.formula, bireg.sig, n, STRICT) for n in range(11)] == \
        [True, False, False, False, False, True, False, False, False, False, True]
    cycles = sentence("in_out.c2")
    assert [spectrum_member(cycles.formula, cycles.sig, n, STRICT) for n in range(8)] == \
        [True, False, True, True, True, True, True, True]


#  Semilinear round trip

ROUND_TRIP_SETS = [[(2, 3)], [(0, 2)], [(1, 1)], [(3, 0)]]


def _spectrum_window(s, window):
    phi, sig = sentence_from_semilinear(s)
    return [spectrum_member(phi, sig, n, STRICT) for n in range(window + 1)]


@pytest.mark.parametrize("pairs", ROUND_TRIP_SETS)
def test_semilinear_sentences_have_the_requested_spectrum(pairs):
    s = pb.SemilinearSet1D.of(pairs)
    assert _spectrum_window(s, 12) == [n in s for n in range(13)]


@pytest.mark.slow
@pytest.mark.parametrize("pairs", ROUND_TRIP_SETS)
def test_semilinear_round_trip_up_to_thirty(pairs):
    s = pb.SemilinearSet1D.of(pairs)
    assert _spectrum_window(s, 30) == [n in s for n in range(31)]
    complement = pb.complement_1d(s)
    assert _spectrum_window(complement, 30) == [n not in s for n in range(31)]


def test_complement_round_trip_on_a_short_window():
    s = pb.SemilinearSet1D.of([(0, 2)])
    assert _spectrum_window(pb.complement_1d(s), 9) == [n % 2 == 1 for n in range(10)]


#  Images of the bijection chain

def _pinned(doc, predicates, values):
    return conj(doc.formula, *[_exactly(p, v) for p, v in zip(predicates, values)])


def _chain_image(values) -> bool:
    a, b0, b1 = values
    return a == 2 and b0 == b1


def _check_chain_image(doc, bound):
    for values in itertools.product(range(bound + 1), repeat=3):
        expected = _chain_image(values)
        assert image_member(doc.formula, doc.sig, ["A", "B0", "B1"], list(values), STRICT) == expected, values
        size = 2 + 3 * values[1]
        if expected and size <= 6:
            pinned = _pinned(doc, ["A", "B0", "B1"], values)
            assert oracle_spectrum(pinned, doc.sig, size).answer



def test_bijection_chain_images(sentence):
    _check_chain_image(sentence("gamma23.c2"), 2)


@pytest.mark.slow
def test_bijection_chain_images_up_to_five(sentence):
    _check_chain_image(sentence("gamma23.c2"), 5)


def test_exactly_one_p_images_match_oracle(suite):
    doc = suite["exactly-one-P"]
    for v in range(6):
        expected = any(oracle_spectrum(_pinned(doc, ["P"], [v]), doc.sig, n).answer for n in range(v, 7))
        assert image_member(doc.formula, doc.sig, ["P"], [v], STRICT) == expected, v

