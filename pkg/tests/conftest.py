from __future__ import annotations

import json
from pathlib import Path

import pytest

from medreader.document import parse_document
from medreader.lexicon import load_lexicon

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

FIXTURE_PAPERS = ("sle_peptides", "lumbar_discectomy")


def fixture_document_bytes(name: str) -> bytes:
    return (FIXTURES / "papers" / f"{name}.json").read_bytes()


def fixture_lexicon_bytes(name: str) -> bytes:
    return (FIXTURES / "lexicons" / f"{name}.tsv").read_bytes()


@pytest.fixture(params=FIXTURE_PAPERS)
def fixture_name(request):
    return request.param


@pytest.fixture
def fixture_paper(fixture_name):
    return parse_document(fixture_document_bytes(fixture_name))


@pytest.fixture
def fixture_lexicon(fixture_name):
    return load_lexicon(fixture_lexicon_bytes(fixture_name))


@pytest.fixture
def sle_paper():
    return parse_document(fixture_document_bytes("sle_peptides"))


@pytest.fixture
def sle_lexicon():
    return load_lexicon(fixture_lexicon_bytes("sle_peptides"))


def make_document(sections, title="Test paper") -> bytes:
    """Compact builder: sections is a list of (path, title, [paragraph
    texts], [children])."""

    def build(spec):
        path, sec_title, paragraphs, children = spec
        return {
            "path": path,
            "title": sec_title,
            "paragraphs": list(paragraphs),
            "children": [build(c) for c in children],
        }

    return json.dumps({"title": title, "sections": [build(s) for s in sections]}).encode()


def simple_paper(paragraphs: list[str], title="Test paper"):
    """Single-section paper, one paragraph per entry."""
    return parse_document(make_document([("1", "Only", paragraphs, [])], title=title))
