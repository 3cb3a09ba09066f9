import io
import json

import structlog

import logger_setup
from c2spectra.typesys import DegreeMatrix


def test_matrices_are_logged_as_text():
    event = logger_setup.compact_matrices(None, "info", {
        "event": "[TEST] Matrices", "C": DegreeMatrix.parse("2,>1;0,1"), "sizes": tuple(range(20)), "n": 3,
    })
    assert event["C"] == "2,>1;0,1"
    assert event["sizes"].endswith("(20 entries)")
    assert event["n"] == 3


def test_json_lines_on_request(monkeypatch):
    monkeypatch.setenv("C2SPECTRA_LOG_FORMAT", "json")
    stream = io.StringIO()
    try:
        logger_setup.setup_logger(stream)
        structlog.get_logger("c2spectra.logtest").warning("[TEST] Budget", C=DegreeMatrix.parse("1;>0"))
        record = json.loads(stream.getvalue().strip().splitlines()[-1])
        assert record["event"] == "[TEST] Budget"
        assert record["C"] == "1;>0"
        assert record["level"] == "warning"
    finally:
        monkeypatch.delenv("C2SPECTRA_LOG_FORMAT")
        logger_setup.setup_logger()


def test_level_filter():
    stream = io.StringIO()
    try:
        logger_setup.setup_logger(stream)
        logger_setup.set_level("WARNING")
        log = structlog.get_logger("c2spectra.leveltest")
        log.info("[TEST] Hidden")
        log.warning("[TEST] Shown")
        text = stream.getvalue()
        assert "[TEST] Shown" in text and "[TEST] Hidden" not in text
    finally:
        logger_setup.setup_logger()
