import os

import pytest

from c2spectra import config
from c2spectra.config import Settings, get_settings, load_settings, set_settings


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    for name in list(os.environ):
        if name.startswith(config.ENV_PREFIX):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(config, "_DEFAULT", None)


def test_defaults_without_any_file():
    assert load_settings() == Settings()


def test_budget_file(tmp_path):
    path = tmp_path / "budgets.env"
    path.write_text("MAX_TYPES=12\nORACLE_FALLBACK=false\n# comment\nSOLVER_NODE_BUDGET=500\n", encoding="utf-8")
    settings = load_settings(str(path))
    assert settings.max_types == 12
    assert settings.solver_node_budget == 500
    assert settings.oracle_fallback is False
    assert settings.max_rows == Settings().max_rows


def test_default_file_in_working_directory(tmp_path):
    (tmp_path / config.DEFAULT_CONFIG_FILE).write_text("ORACLE_GRAPH_CAP=9\n", encoding="utf-8")
    assert load_settings().oracle_graph_cap == 9


def test_config_path_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "elsewhere.env"
    path.write_text("PARTIAL_DEPTH_BUDGET=3\n", encoding="utf-8")
    monkeypatch.setenv("SPECTRA_CONFIG", str(path))
    assert load_settings().partial_depth_budget == 3


def test_environment_overrides_the_file(tmp_path, monkeypatch):
    path = tmp_path / "budgets.env"
    path.write_text("MAX_TYPES=12\n", encoding="utf-8")
    monkeypatch.setenv("SPECTRA_MAX_TYPES", "30")
    monkeypatch.setenv("SPECTRA_ORACLE_FALLBACK", "no")
    settings = load_settings(str(path))
    assert settings.max_types == 30
    assert settings.oracle_fallback is False


def test_malformed_values_are_ignored(monkeypatch):
    monkeypatch.setenv("SPECTRA_MAX_VERTICES", "lots")
    assert load_settings().max_vertices == Settings().max_vertices


def test_replace_keeps_the_rest():
    settings = Settings().replace(oracle_unary_cap=3)
    assert settings.oracle_unary_cap == 3
    assert settings.oracle_structure_cap == Settings().oracle_structure_cap


def test_process_wide_settings():
    first = get_settings()
    assert get_settings() is first
    tight = Settings(max_types=2)
    set_settings(tight)
    assert get_settings() is tight
