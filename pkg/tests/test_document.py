from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medreader.document import (
    EmptyDocumentError,
    Paper,
    ParseError,
    canonical_json,
    leaf_sections,
    parse_document,
    serialize_document,
    split_sentences,
    to_document,
)

from .conftest import fixture_document_bytes, make_document, simple_paper


# --- sentence splitting ------------------------------------------------------


def oracle_split(text: str) -> list[tuple[int, int]]:
    """Independent character-scan splitter (no shared helpers).

    Walks the string tracking sentence starts by hand; used to check the
    production splitter on synthetic input.
    """
    abbreviations = ["e.g.", "i.e.", "et al.", "Fig.", "vs.", "Dr.", "No."]
    boundaries = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            j = i + 1
            if j < n and text[j].isspace():
                k = j
                while k < n and text[k].isspace():
                    k += 1
                if k < n and (text[k].isupper() or text[k].isdigit()):
                    abbrev = False
                    if ch == ".":
                        for a in abbreviations:
                            s = i + 1 - len(a)
                            if s >= 0 and text[s : i + 1].lower() == a.lower():
                                if s == 0 or not text[s - 1].isalnum():
                                    abbrev = True
                                    break
                    if not abbrev:
                        boundaries.append(i + 1)
        i += 1
    spans = []
    prev = 0
    for b in boundaries + [n]:
        seg = text[prev:b]
        if seg.strip():
            lead = len(seg) - len(seg.lstrip())
            spans.append((prev + lead, prev + lead + len(seg.strip())))
        prev = b
    return spans


def test_basic_split():
    spans = split_sentences("SLE is chronic. It affects joints.")
    assert len(spans) == 2
    assert (spans[0].start, spans[0].end) == (0, 15)
    assert (spans[1].start, spans[1].end) == (16, 34)


def test_abbreviation_not_split():
    spans = split_sentences("Results (e.g. Pain scores) improved.")
    assert len(spans) == 1


@pytest.mark.parametrize(
    "text,count",
    [
        ("Dr. Smith agreed.", 1),
        ("See Fig. 2 for details.", 1),
        ("Costs fell vs. Controls stayed.", 1),
        ("Smith et al. Reported this.", 1),
        ("It worked! We checked. Twice.", 3),
        ("Is it safe? Yes.", 2),
        ("Ends without punctuation", 1),
        ("", 0),
        ("   ", 0),
        ("The piano. Sounded fine.", 2),  # 'piano.' must not match abbreviation 'No.'
        ("Score was 0.05 overall.", 1),
        ("What?! Then more.", 2),
    ],
)
def test_split_cases(text, count):
    assert len(split_sentences(text)) == count


def test_fifty_sentence_synthetic_paragraph_matches_oracle():
    parts = []
    for i in range(50):
        if i % 7 == 0:
            parts.append(f"Sample {i} uses e.g. numbers and vs. others here.")
        elif i % 5 == 0:
            parts.append(f"Does trial {i} work? ")
        else:
            parts.append(f"Sentence number {i} is plain.")
    text = " ".join(parts)
    got = [(s.start, s.end) for s in split_sentences(text)]
    assert len(got) == 50
    assert got == oracle_split(text)


@settings(max_examples=200)
@given(
    st.lists(
        st.sampled_from(list("abcDE .!?\n\t0") + ["e.g.", "No.", "vs."]),
        max_size=40,
    ).map("".join)
)
def test_split_spans_tile_text(text):
    spans = split_sentences(text)
    oracle = oracle_split(text)
    assert [(s.start, s.end) for s in spans] == oracle
    # non-overlapping, ordered, and covering all non-whitespace
    prev_end = 0
    for s in spans:
        assert s.start >= prev_end
        assert s.start < s.end
        prev_end = s.end
    covered = set()
    for s in spans:
        covered.update(range(s.start, s.end))
    for i, ch in enumerate(text):
        if not ch.isspace():
            assert i in covered


# --- parsing -----------------------------------------------------------------


def test_single_section_two_sentences():
    paper = simple_paper(["A. B."])
    assert len(paper.sections) == 1
    section = paper.sections[0]
    assert section.is_leaf
    para = section.paragraphs[0]
    assert paper.full_text == "A. B."
    assert [(s.start, s.end) for s in para.sentences] == [(0, 2), (3, 5)]


def test_empty_document_error():
    with pytest.raises(EmptyDocumentError):
        parse_document(json.dumps({"title": "x", "sections": []}).encode())


def test_leaf_set_with_nested_sections():
    doc = make_document(
        [
            ("1", "A", ["One."], [("1.1", "A1", ["Two."], [])]),
            ("2", "B", ["Three."], []),
        ]
    )
    paper = parse_document(doc)
    assert leaf_sections(paper) == ["1.1", "2"]


def test_malformed_inputs_name_offending_path():
    bad = json.dumps(
        {"title": "x", "sections": [{"path": "1", "title": "a", "children": [{"path": "7.7", "title": "b"}]}]}
    ).encode()
    with pytest.raises(ParseError) as exc:
        parse_document(bad)
    assert "$.sections[0].children[0]" in str(exc.value)

    with pytest.raises(ParseError):
        parse_document(b"not json")
    with pytest.raises(ParseError):
        parse_document(json.dumps({"title": "x"}).encode())
    with pytest.raises(ParseError):
        parse_document(
            json.dumps({"title": "x", "sections": [{"path": "1"}]}).encode()
        )


def test_duplicate_paths_rejected():
    doc = make_document([("1", "A", [], []), ("1", "B", [], [])])
    with pytest.raises(ParseError):
        parse_document(doc)


def test_sibling_numbering_must_increase():
    doc = make_document([("2", "A", ["x"], []), ("1", "B", ["y"], [])])
    with pytest.raises(ParseError):
        parse_document(doc)


def test_depth_matches_path_components():
    doc = make_document(
        [("1", "A", [], [("1.1", "B", [], [("1.1.1", "C", ["Deep text here."], [])])])]
    )
    paper = parse_document(doc)
    depths = {s.path: s.depth for s in paper.walk_sections()}
    assert depths == {"1": 1, "1.1": 2, "1.1.1": 3}


def test_span_tiling_reconstructs_full_text(fixture_paper):
    parts = [p.text for p in fixture_paper.paragraphs()]
    assert " ".join(parts) == fixture_paper.full_text
    for para in fixture_paper.paragraphs():
        assert fixture_paper.full_text[para.start : para.end] == para.text
        assert 0 <= para.start <= para.end <= fixture_paper.char_count


def test_sentences_tile_paragraphs(fixture_paper):
    for para in fixture_paper.paragraphs():
        if para.text.strip():
            assert para.sentences
        prev = para.start
        for s in para.sentences:
            assert para.start <= s.start < s.end <= para.end
            assert s.start >= prev
            prev = s.end
            # the gap between sentences is whitespace only
        joined = " ".join(
            fixture_paper.full_text[s.start : s.end] for s in para.sentences
        )
        assert joined.split() == para.text.split()


def test_round_trip_identity(fixture_name):
    original = parse_document(fixture_document_bytes(fixture_name))
    reparsed = parse_document(serialize_document(original))
    assert reparsed == original
    assert reparsed.id == original.id


def test_leaf_partition(fixture_paper):
    leaves = leaf_sections(fixture_paper)
    assert len(leaves) == len(set(leaves))
    seen = {}
    for para in fixture_paper.paragraphs():
        seen.setdefault(para.ref.section_path, 0)
        seen[para.ref.section_path] += 1
    for path in seen:
        assert fixture_paper.section_by_path(path) is not None


# --- leaf oracle on a deeper tree -------------------------------------------


def walk_leaves(obj) -> list[str]:
    """Brute-force recursive leaf collection over the raw document dict."""
    out = []
    for section in obj:
        children = section.get("children", [])
        if children:
            out.extend(walk_leaves(children))
        else:
            out.append(section["path"])
    return out


def test_depth_four_tree_leaves_match_walk():
    doc = make_document(
        [
            (
                "1",
                "A",
                ["a."],
                [
                    ("1.1", "B", ["b."], []),
                    (
                        "1.2",
                        "C",
                        ["c."],
                        [
                            ("1.2.1", "D", ["d."], [("1.2.1.1", "E", ["e."], [])]),
                            ("1.2.2", "F", ["f."], []),
                        ],
                    ),
                    ("1.3", "K", ["k."], []),
                ],
            ),
            ("2", "G", ["g."], [("2.1", "H", ["h."], []), ("2.2", "I", ["i."], [])]),
            ("3", "J", ["j."], []),
        ]
    )
    paper = parse_document(doc)
    expected = walk_leaves(json.loads(doc)["sections"])
    got = leaf_sections(paper)
    assert got == expected
    assert len(got) == 7


# --- property: random trees round-trip and tile ------------------------------


@st.composite
def section_tree(draw, prefix="", depth=1):
    n_paragraphs = draw(st.integers(0, 3))
    paragraphs = [
        draw(st.text(alphabet="abcDE .!?", min_size=0, max_size=30))
        for _ in range(n_paragraphs)
    ]
    children = []
    if depth < 3:
        n_children = draw(st.integers(0, 2))
        for i in range(n_children):
            child_path = f"{prefix}.{i + 1}" if prefix else str(i + 1)
            children.append(draw(section_tree(prefix=child_path, depth=depth + 1)))
    path = prefix or "1"
    return (path, "t", paragraphs, children)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=3).flatmap(
    lambda tops: st.tuples(*[section_tree(prefix=str(i + 1)) for i in range(len(tops))])
))
def test_random_documents_round_trip(sections):
    data = make_document(list(sections))
    paper = parse_document(data)
    assert parse_document(serialize_document(paper)) == paper
    assert " ".join(p.text for p in paper.paragraphs()) == paper.full_text


def test_canonical_json_is_stable():
    obj = {"b": 1, "a": [1.5, "x"]}
    assert canonical_json(obj) == canonical_json(json.loads(canonical_json(obj)))


def test_to_document_matches_source(fixture_name):
    raw = json.loads(fixture_document_bytes(fixture_name))

    def normalize(section):
        section.setdefault("paragraphs", [])
        section.setdefault("children", [])
        for child in section["children"]:
            normalize(child)

    for s in raw["sections"]:
        normalize(s)
    paper = parse_document(fixture_document_bytes(fixture_name))
    assert to_document(paper) == raw
