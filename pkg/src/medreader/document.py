"""Structured paper model and interchange-document ingestion.

A paper is a tree of sections holding paragraphs; every paragraph and
sentence carries a [start, end) span into one canonical ``full_text``
string built by joining paragraph texts with single spaces. That string
is the coordinate system every other module (term spans, answer spans,
the reader UI) anchors to.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import EmptyDocumentError, ParseError

# Periods ending these do not terminate a sentence. Extensible via the
# `extra_abbreviations` argument of split_sentences.
ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "Fig.", "vs.", "Dr.", "No.")

_TERMINALS = ".!?"


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int
    index: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"empty sentence span [{self.start}, {self.end})")


@dataclass(frozen=True)
class ParagraphRef:
    """Address of a paragraph: owning section path + index within it."""

    section_path: str
    index: int


@dataclass(frozen=True)
class Paragraph:
    ref: ParagraphRef
    text: str
    start: int
    end: int
    sentences: tuple[SentenceSpan, ...]


@dataclass(frozen=True)
class Section:
    path: str
    title: str
    depth: int
    paragraphs: tuple[Paragraph, ...]
    children: tuple["Section", ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Paper:
    """Immutable after construction; safe to share across threads."""

    id: str
    title: str
    sections: tuple[Section, ...]
    full_text: str

    @property
    def char_count(self) -> int:
        return len(self.full_text)

    def walk_sections(self):
        """Yield every section in document (pre-order) order."""
        stack = list(reversed(self.sections))
        while stack:
            section = stack.pop()
            yield section
            stack.extend(reversed(section.children))

    def paragraphs(self):
        """Yield every paragraph in document order."""
        for section in self.walk_sections():
            yield from section.paragraphs

    def section_by_path(self, path: str) -> Section | None:
        for section in self.walk_sections():
            if section.path == path:
                return section
        return None

    def paragraph_by_ref(self, ref: ParagraphRef) -> Paragraph | None:
        section = self.section_by_path(ref.section_path)
        if section is None or not 0 <= ref.index < len(section.paragraphs):
            return None
        return section.paragraphs[ref.index]

    def paragraph_at(self, offset: int) -> Paragraph | None:
        """Paragraph whose span contains the character offset."""
        for para in self.paragraphs():
            if para.start <= offset < para.end:
                return para
        return None


def _is_abbreviation(text: str, period_index: int, abbreviations) -> bool:
    end = period_index + 1
    for abbr in abbreviations:
        start = end - len(abbr)
        if start < 0:
            continue
        if text[start:end].lower() != abbr.lower():
            continue
        if start == 0 or not text[start - 1].isalnum():
            return True
    return False


def split_sentences(
    text: str, extra_abbreviations: tuple[str, ...] = ()
) -> list[SentenceSpan]:
    """Split text into sentence spans (offsets relative to ``text``).

    A sentence ends at '.', '!' or '?' followed by whitespace and an
    uppercase letter or digit, unless the period closes a known
    abbreviation. Spans exclude surrounding whitespace.
    """
    abbreviations = ABBREVIATIONS + tuple(extra_abbreviations)
    breaks: list[int] = []  # index one past each sentence-final mark
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        j = i + 1
        if j >= n or not text[j].isspace():
            continue
        while j < n and text[j].isspace():
            j += 1
        if j >= n:
            continue
        nxt = text[j]
        if not (nxt.isupper() or nxt.isdigit()):
            continue
        if ch == "." and _is_abbreviation(text, i, abbreviations):
            continue
        breaks.append(i + 1)

    spans: list[SentenceSpan] = []
    cursor = 0
    for brk in breaks + [n]:
        chunk = text[cursor:brk]
        stripped = chunk.strip()
        if stripped:
            start = cursor + (len(chunk) - len(chunk.lstrip()))
            spans.append(SentenceSpan(start, start + len(stripped), len(spans)))
        cursor = brk
    return spans


def leaf_sections(paper: Paper) -> list[str]:
    """Paths of sections with no children, in document order."""
    return [s.path for s in paper.walk_sections() if s.is_leaf]


def _require(condition: bool, message: str, path: str):
    if not condition:
        raise ParseError(message, path)


def _validate_section_obj(obj, parent_path: str, json_path: str):
    _require(isinstance(obj, dict), "section must be an object", json_path)
    _require("path" in obj, "missing required field 'path'", json_path)
    _require("title" in obj, "missing required field 'title'", json_path)
    for key in obj:
        _require(
            key in ("path", "title", "paragraphs", "children"),
            f"unknown field {key!r}",
            json_path,
        )
    path = obj["path"]
    _require(isinstance(path, str) and path, "'path' must be a non-empty string", json_path)
    components = path.split(".")
    _require(
        all(components), f"section path {path!r} has an empty component", json_path
    )
    if parent_path:
        _require(
            len(components) == len(parent_path.split(".")) + 1
            and path.startswith(parent_path + "."),
            f"child path {path!r} must extend parent path {parent_path!r} by one component",
            json_path,
        )
    else:
        _require(len(components) == 1, f"top-level path {path!r} must have one component", json_path)
    _require(isinstance(obj["title"], str), "'title' must be a string", json_path)
    paragraphs = obj.get("paragraphs", [])
    _require(isinstance(paragraphs, list), "'paragraphs' must be an array", json_path)
    for i, p in enumerate(paragraphs):
        _require(isinstance(p, str), "paragraph must be a string", f"{json_path}.paragraphs[{i}]")
    children = obj.get("children", [])
    _require(isinstance(children, list), "'children' must be an array", json_path)
    return path, paragraphs, children


def _check_sibling_order(paths: list[str], json_path: str):
    last_components = [p.rsplit(".", 1)[-1] for p in paths]
    if all(c.isdigit() for c in last_components):
        numbers = [int(c) for c in last_components]
        _require(
            all(a < b for a, b in zip(numbers, numbers[1:])),
            f"sibling section numbers not increasing: {paths}",
            json_path,
        )


class _Builder:
    """Accumulates paragraph texts, then assigns spans in a second pass."""

    def __init__(self):
        self.texts: list[str] = []
        self.refs: list[ParagraphRef] = []
        self.seen_paths: set[str] = set()

    def build_section(self, obj, parent_path: str, json_path: str):
        path, paragraphs, children = _validate_section_obj(obj, parent_path, json_path)
        _require(path not in self.seen_paths, f"duplicate section path {path!r}", json_path)
        self.seen_paths.add(path)
        para_slots = []
        for i, text in enumerate(paragraphs):
            self.texts.append(text)
            ref = ParagraphRef(path, i)
            self.refs.append(ref)
            para_slots.append((ref, text))
        _check_sibling_order(
            [c.get("path") for c in children if isinstance(c, dict) and isinstance(c.get("path"), str)],
            json_path,
        )
        built_children = tuple(
            self.build_section(child, path, f"{json_path}.children[{i}]")
            for i, child in enumerate(children)
        )
        return path, obj["title"], para_slots, built_children


def _assemble(path, title, para_slots, children, spans) -> Section:
    paragraphs = []
    for ref, text in para_slots:
        start, end = spans[ref]
        sentences = tuple(
            SentenceSpan(s.start + start, s.end + start, s.index)
            for s in split_sentences(text)
        )
        paragraphs.append(Paragraph(ref, text, start, end, sentences))
    return Section(
        path=path,
        title=title,
        depth=len(path.split(".")),
        paragraphs=tuple(paragraphs),
        children=tuple(_assemble(*c, spans) for c in children),
    )


def parse_document(data: bytes | str) -> Paper:
    """Parse an interchange document (JSON bytes) into a Paper.

    Raises ParseError naming the offending JSON path on malformed input
    and EmptyDocumentError when the document has no sections.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc.msg}") from None

    _require(isinstance(doc, dict), "document root must be an object", "$")
    for key in doc:
        _require(key in ("title", "sections"), f"unknown field {key!r}", "$")
    _require("title" in doc and isinstance(doc["title"], str), "'title' must be a string", "$")
    _require(
        "sections" in doc and isinstance(doc["sections"], list),
        "'sections' must be an array",
        "$",
    )
    if not doc["sections"]:
        raise EmptyDocumentError("document has no sections")

    builder = _Builder()
    _check_sibling_order(
        [s.get("path") for s in doc["sections"] if isinstance(s, dict) and isinstance(s.get("path"), str)],
        "$.sections",
    )
    skeletons = [
        builder.build_section(obj, "", f"$.sections[{i}]")
        for i, obj in enumerate(doc["sections"])
    ]

    full_text = " ".join(builder.texts)
    spans: dict[ParagraphRef, tuple[int, int]] = {}
    offset = 0
    for ref, text in zip(builder.refs, builder.texts):
        spans[ref] = (offset, offset + len(text))
        offset += len(text) + 1  # the joining space

    sections = tuple(_assemble(*sk, spans) for sk in skeletons)
    paper_id = _content_id(doc["title"], sections)
    return Paper(id=paper_id, title=doc["title"], sections=sections, full_text=full_text)


def _section_to_obj(section: Section) -> dict:
    obj: dict = {"path": section.path, "title": section.title}
    obj["paragraphs"] = [p.text for p in section.paragraphs]
    obj["children"] = [_section_to_obj(c) for c in section.children]
    return obj


def to_document(paper: Paper) -> dict:
    """Interchange form of a Paper (inverse of parse_document)."""
    return {
        "title": paper.title,
        "sections": [_section_to_obj(s) for s in paper.sections],
    }


def serialize_document(paper: Paper) -> bytes:
    return canonical_json(to_document(paper))


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def _content_id(title: str, sections: tuple[Section, ...]) -> str:
    payload = canonical_json(
        {"title": title, "sections": [_section_to_obj(s) for s in sections]}
    )
    return hashlib.sha256(payload).hexdigest()[:16]
