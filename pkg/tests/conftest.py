"""Shared fixtures: signatures, the sentence suite and small budgets."""

import os

import pytest

from c2spectra.config import Settings
from c2spectra.logic_core import Signature, parse_document

SENTENCE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "sentences")


def load_sentence(name: str):
    with open(os.path.join(SENTENCE_DIR, name), encoding="utf-8") as fh:
        return parse_document(fh.read())


# Sentences small enough for the PREB path at default budgets; n ≤ 6 against the oracle
SUITE = {
    "exactly-one-P": "unary: P; binary: ; E x^1 (P(x)) & ~E x^2 (P(x))",
    "exactly-two-P": "unary: P; binary: ; E x^2 (P(x)) & ~E x^3 (P(x))",
    "no-P":          "unary: P; binary: ; ~E x^1 (P(x)) & E x^1 (~P(x))",
    "contradiction": "unary: P; binary: ; E x^1 (P(x) & ~P(x))",
    "out-one":       "unary: ; binary: R; ~E x^1 (~(E y^1 (R(x,y)) & ~E y^2 (R(x,y))))",
    "tournament":    "unary: ; binary: R; ~E x^1 (E y^1 (R(x,y) & R(y,x)))",
    "two-relations": "unary: ; binary: R, S; ~E x^1 (~E y^1 (R(x,y))) & ~E x^1 (E y^1 (R(x,y) & S(x,y)))",
}


@pytest.fixture
def settings() -> Settings:
    return Settings()


@pytest.fixture
def small_settings() -> Settings:
    """Tight budgets so tests hit the budget paths quickly."""
    return Settings(max_types=8, max_free_atoms=6, solver_node_budget=2_000, expansion_budget=500,
                    oracle_structure_cap=4, oracle_graph_cap=8, construction_search_cap=12)


@pytest.fixture
def sig_p() -> Signature:
    return Signature(("P",), (), ())


@pytest.fixture
def sig_pqr() -> Signature:
    return Signature(("P", "Q"), ("R",), ())


@pytest.fixture
def suite():
    return {name: parse_document(text) for name, text in SUITE.items()}


@pytest.fixture
def sentence():
    """Loader for the sample documents under sentences/."""
    return load_sentence
