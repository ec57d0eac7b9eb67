"""Medical term recognition and definition linking.

Recognition is deterministic lexicon matching (greedy longest match over
whitespace tokens, case-insensitive). Recognized occurrences then pass
through three filters: keep only the rarest ``frequency_keep_fraction``
of distinct lexicon terms, drop surfaces at or above ``max_term_chars``
characters, and drop terms whose only definitions are Wiktionary-style
entries with no whitelisted tag.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace

from .document import Paper
from .errors import LexiconFormatError, MissingDefinitionError

SOURCE_UMLS = "umls"
SOURCE_WIKTIONARY = "wiktionary"

ATTRIBUTION = {SOURCE_UMLS: "UMLS", SOURCE_WIKTIONARY: "Wiktionary"}

# Wiktionary entries must carry at least one of these tags to survive
# filtering. Fourteen tags; treat as canonical, override via FilterConfig.
DEFAULT_ALLOWED_TAGS = frozenset(
    {
        "medicine",
        "organism",
        "pathology",
        "biochemistry",
        "autoantigen",
        "genetics",
        "cytology",
        "physics",
        "chemistry",
        "organic chemistry",
        "immunology",
        "pharmacology",
        "anatomy",
        "neuroanatomy",
    }
)


@dataclass(frozen=True)
class LexiconEntry:
    term: str  # case-normalized surface form
    definition: str
    source: str  # SOURCE_UMLS | SOURCE_WIKTIONARY
    tags: frozenset[str]
    corpus_frequency: float  # occurrences per million tokens

    def __post_init__(self):
        if not self.term:
            raise ValueError("lexicon entry term must be non-empty")
        if self.source not in (SOURCE_UMLS, SOURCE_WIKTIONARY):
            raise ValueError(f"unknown source {self.source!r}")
        if self.corpus_frequency < 0:
            raise ValueError("corpus_frequency must be non-negative")


@dataclass(frozen=True)
class Definition:
    text: str
    source: str
    attribution: str


@dataclass
class Lexicon:
    """Entries indexed by normalized term, plus the ascending-frequency rank."""

    entries: dict[str, list[LexiconEntry]]
    frequency_rank: list[str] = field(init=False)
    _rank_index: dict[str, int] = field(init=False, repr=False)
    _max_words: int = field(init=False, repr=False)

    def __post_init__(self):
        freqs = {
            term: min(e.corpus_frequency for e in entries)
            for term, entries in self.entries.items()
        }
        self.frequency_rank = sorted(freqs, key=lambda t: (freqs[t], t))
        self._rank_index = {t: i for i, t in enumerate(self.frequency_rank)}
        self._max_words = max((len(t.split(" ")) for t in self.entries), default=0)

    def rank_of(self, term: str) -> int:
        return self._rank_index[term]

    @property
    def max_term_words(self) -> int:
        return self._max_words


@dataclass(frozen=True)
class TermOccurrence:
    start: int
    end: int
    surface: str
    entry: LexiconEntry


@dataclass(frozen=True)
class FilterConfig:
    frequency_keep_fraction: float = 0.80
    max_term_chars: int = 30  # exclusive: keep surfaces strictly shorter
    allowed_tags: frozenset[str] = DEFAULT_ALLOWED_TAGS

    def __post_init__(self):
        if not 0 < self.frequency_keep_fraction <= 1:
            raise ValueError("frequency_keep_fraction must be in (0, 1]")


def normalize_term(text: str) -> str:
    return text.lower()


def load_lexicon(data: bytes | str) -> Lexicon:
    """Load a TSV lexicon: term, definition, source, tags, frequency.

    Tags are semicolon-separated (may be empty); blank lines are skipped;
    duplicate (term, source, definition) rows are dropped silently.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    entries: dict[str, list[LexiconEntry]] = {}
    seen: set[tuple[str, str, str]] = set()
    for lineno, line in enumerate(data.split("\n"), start=1):
        if not line.strip():
            continue
        columns = line.split("\t")
        if len(columns) != 5:
            raise LexiconFormatError(
                f"expected 5 tab-separated columns, got {len(columns)}", lineno
            )
        raw_term, definition, source, raw_tags, raw_freq = columns
        term = normalize_term(raw_term.strip())
        if not term:
            raise LexiconFormatError("empty term", lineno)
        source = source.strip().lower()
        if source not in (SOURCE_UMLS, SOURCE_WIKTIONARY):
            raise LexiconFormatError(f"unknown source {source!r}", lineno)
        try:
            frequency = float(raw_freq)
        except ValueError:
            raise LexiconFormatError(f"bad frequency {raw_freq!r}", lineno) from None
        if frequency < 0:
            raise LexiconFormatError(f"negative frequency {raw_freq!r}", lineno)
        key = (term, source, definition)
        if key in seen:
            continue
        seen.add(key)
        tags = frozenset(t.strip() for t in raw_tags.split(";") if t.strip())
        entries.setdefault(term, []).append(
            LexiconEntry(term, definition, source, tags, frequency)
        )
    return Lexicon(entries)


_SOURCE_PRECEDENCE = {SOURCE_UMLS: 0, SOURCE_WIKTIONARY: 1}


def _default_entry(entries: list[LexiconEntry]) -> LexiconEntry:
    return min(entries, key=lambda e: (_SOURCE_PRECEDENCE[e.source], e.definition))


def _token_cores(text: str):
    """(start, end, lowercased core) for each whitespace token, edge
    punctuation stripped; tokens with empty cores are skipped."""
    cores = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        token = text[i:j]
        core = token.strip(string.punctuation)
        if core:
            start = i + len(token) - len(token.lstrip(string.punctuation))
            cores.append((start, start + len(core), core.lower()))
        i = j
    return cores


def recognize_terms(paper: Paper, lexicon: Lexicon) -> list[TermOccurrence]:
    """Greedy longest-match scan of full_text against the lexicon.

    Matches are case-insensitive, never overlap, and multi-word terms
    match only across single spaces. Output is unfiltered and ordered by
    span start.
    """
    text = paper.full_text
    cores = _token_cores(text)
    max_words = lexicon.max_term_words
    occurrences: list[TermOccurrence] = []
    i = 0
    while i < len(cores):
        matched = None
        limit = min(max_words, len(cores) - i)
        for width in range(limit, 0, -1):
            window = cores[i : i + width]
            # multi-word terms must be separated by exactly one space
            if any(
                text[window[k][1] : window[k + 1][0]] != " "
                for k in range(width - 1)
            ):
                continue
            key = " ".join(c[2] for c in window)
            if key in lexicon.entries:
                matched = (window[0][0], window[-1][1], key, width)
                break
        if matched is None:
            i += 1
            continue
        start, end, key, width = matched
        occurrences.append(
            TermOccurrence(
                start=start,
                end=end,
                surface=text[start:end],
                entry=_default_entry(lexicon.entries[key]),
            )
        )
        i += width
    return occurrences


def filter_terms(
    occurrences: list[TermOccurrence],
    lexicon: Lexicon,
    config: FilterConfig | None = None,
) -> list[TermOccurrence]:
    """Apply the frequency, length, and tag filters; order preserved.

    A kept occurrence is re-linked to its best surviving entry: UMLS
    entries win outright; otherwise the first Wiktionary entry with an
    allowed tag.
    """
    config = config or FilterConfig()
    cutoff = int(config.frequency_keep_fraction * len(lexicon.frequency_rank))
    kept: list[TermOccurrence] = []
    for occ in occurrences:
        term = occ.entry.term
        if lexicon.rank_of(term) >= cutoff:
            continue
        if len(occ.surface) >= config.max_term_chars:
            continue
        entries = lexicon.entries[term]
        umls = [e for e in entries if e.source == SOURCE_UMLS]
        if umls:
            chosen = min(umls, key=lambda e: e.definition)
        else:
            tagged = [
                e
                for e in entries
                if e.source == SOURCE_WIKTIONARY and e.tags & config.allowed_tags
            ]
            if not tagged:
                continue
            chosen = min(tagged, key=lambda e: e.definition)
        kept.append(occ if occ.entry == chosen else replace(occ, entry=chosen))
    return kept


def link_definition(occurrence: TermOccurrence, lexicon: Lexicon) -> Definition:
    """Definition for an occurrence's term; UMLS wins when both sources
    define it. Raises MissingDefinitionError for stale occurrences."""
    term = occurrence.entry.term
    entries = lexicon.entries.get(term)
    if not entries:
        raise MissingDefinitionError(f"term {term!r} not in lexicon")
    umls = [e for e in entries if e.source == SOURCE_UMLS]
    if umls:
        entry = min(umls, key=lambda e: e.definition)
    elif occurrence.entry in entries:
        entry = occurrence.entry  # keep the tag-aware link made by filter_terms
    else:
        entry = _default_entry(entries)
    return Definition(entry.definition, entry.source, ATTRIBUTION[entry.source])
