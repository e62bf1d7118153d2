from __future__ import annotations

from pathlib import Path

import pytest

from sltl import parse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus_spec(name: str):
    return parse((CORPUS / name).read_text())


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS
