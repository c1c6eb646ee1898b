from __future__ import annotations

from importlib.resources import files

import pytest

import riskweaver as rw

CORPUS_NAME = "cybership.rsk"


@pytest.fixture(scope="session")
def corpus_text() -> str:
    return (files("riskweaver") / "data" / CORPUS_NAME).read_text("utf-8")


@pytest.fixture(scope="session")
def corpus_model(corpus_text: str) -> rw.SystemModel:
    result = rw.parse_model(corpus_text, CORPUS_NAME)
    assert result.ok, [d.render() for d in result.diagnostics]
    assert result.model is not None
    return result.model


@pytest.fixture()
def corpus_file(tmp_path, corpus_text: str):
    """The shipped model written to a real file, for CLI-level tests."""
    path = tmp_path / CORPUS_NAME
    path.write_text(corpus_text, encoding="utf-8")
    return path
