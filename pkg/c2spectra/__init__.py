"""
c2spectra

Decision toolkit for finite-model spectra of two-variable logic with counting.

Pipeline:
  C² sentence → completize → normal form → QMLC → types / consistent rows
              → PREB (existential Presburger) → membership / semilinear set
              → witness model via biregular graphs and regular digraphs

Everything is cross-checked against the z3-backed oracles in c2spectra.oracle.
"""

import os
import sys

#  Path setup: allow `import logger_setup` from the repo root
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

import logger_setup  # noqa: E402,F401  (configures structlog on import)

__version__ = "0.3.0"
