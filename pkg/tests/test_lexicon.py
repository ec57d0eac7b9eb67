from __future__ import annotations

import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medreader.errors import LexiconFormatError, MissingDefinitionError
from medreader.lexicon import (
    DEFAULT_ALLOWED_TAGS,
    FilterConfig,
    Lexicon,
    LexiconEntry,
    TermOccurrence,
    filter_terms,
    link_definition,
    load_lexicon,
    recognize_terms,
)

from .conftest import simple_paper


def row(term, definition="def", source="umls", tags="", freq=1.0):
    return f"{term}\t{definition}\t{source}\t{tags}\t{freq}"


def make_lexicon(rows: list[str]) -> Lexicon:
    return load_lexicon("\n".join(rows) + "\n")


# --- loading -----------------------------------------------------------------


def test_three_row_file_rank_order():
    lex = make_lexicon([row("b", freq=5), row("a", freq=2), row("c", freq=9)])
    assert len(lex.entries) == 3
    assert lex.frequency_rank == ["a", "b", "c"]


def test_rank_ties_break_lexicographically():
    lex = make_lexicon([row("zeta", freq=1), row("alpha", freq=1)])
    assert lex.frequency_rank == ["alpha", "zeta"]


def test_empty_term_reports_line_number():
    with pytest.raises(LexiconFormatError) as exc:
        make_lexicon([row("ok"), row("  ")])
    assert exc.value.line == 2


def test_bad_column_count_reports_line_number():
    with pytest.raises(LexiconFormatError) as exc:
        load_lexicon("a\tb\tumls\t\t1\nbroken row\n")
    assert exc.value.line == 2


def test_duplicate_rows_dedupe_silently():
    lex = make_lexicon([row("a", "same"), row("a", "same")])
    assert len(lex.entries["a"]) == 1


def test_distinct_definitions_both_kept():
    lex = make_lexicon([row("a", "one"), row("a", "two")])
    assert len(lex.entries["a"]) == 2


def test_unknown_source_rejected():
    with pytest.raises(LexiconFormatError):
        make_lexicon([row("a", source="webster")])


def test_thousand_row_rank_matches_sort_oracle():
    rng = random.Random(7)
    rows = []
    pairs = []
    for i in range(1000):
        term = f"term{i:04d}"
        freq = rng.choice([0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0])
        rows.append(row(term, freq=freq))
        pairs.append((freq, term))
    lex = make_lexicon(rows)
    assert lex.frequency_rank == [t for _, t in sorted(pairs)]


# --- recognition -------------------------------------------------------------


def test_longest_match_wins():
    lex = make_lexicon([row("lupus erythematosus"), row("lupus")])
    paper = simple_paper(["chronic lupus erythematosus flare"])
    occs = recognize_terms(paper, lex)
    assert [o.surface for o in occs] == ["lupus erythematosus"]


def test_no_matches_gives_empty_list():
    lex = make_lexicon([row("nephritis")])
    paper = simple_paper(["Nothing medical here at all."])
    assert recognize_terms(paper, lex) == []


def test_case_insensitive_and_punctuation_edges():
    lex = make_lexicon([row("sciatica")])
    paper = simple_paper(["Severe Sciatica, then (sciatica)."])
    occs = recognize_terms(paper, lex)
    assert [o.surface for o in occs] == ["Sciatica", "sciatica"]
    for o in occs:
        assert paper.full_text[o.start : o.end] == o.surface


def test_multiword_requires_single_space():
    lex = make_lexicon([row("nerve root")])
    paper = simple_paper(["The nerve, root pair differs from the nerve root pair."])
    occs = recognize_terms(paper, lex)
    assert len(occs) == 1
    assert occs[0].surface == "nerve root"


def oracle_all_substring_matcher(text: str, terms: set[str]) -> list[tuple[int, int]]:
    """Exhaustive matcher: every token-aligned window is tested against
    the term set, then overlaps resolve leftmost-longest."""
    # token cores computed by scanning, independently of the library helper
    tokens = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace():
            j += 1
        raw = text[i:j]
        a, b = 0, len(raw)
        while a < b and raw[a] in string.punctuation:
            a += 1
        while b > a and raw[b - 1] in string.punctuation:
            b -= 1
        if b > a:
            tokens.append((i + a, i + b))
        i = j
    candidates = []
    for wi in range(len(tokens)):
        for wj in range(wi, len(tokens)):
            window = tokens[wi : wj + 1]
            ok = all(
                text[window[k][1] : window[k + 1][0]] == " "
                for k in range(len(window) - 1)
            )
            if not ok:
                continue
            key = " ".join(text[a:b].lower() for a, b in window)
            if key in terms:
                candidates.append((window[0][0], window[-1][1]))
    chosen = []
    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0])))
    cursor = -1
    for start, end in candidates:
        if start > cursor or (not chosen):
            if start >= cursor:
                chosen.append((start, end))
                cursor = end
    return chosen


def test_synthetic_text_matches_bruteforce_oracle():
    rng = random.Random(42)
    vocabulary = ["alpha", "beta", "gamma", "delta", "omega", "kappa", "sigma", "zeta"]
    words = []
    for _ in range(200):
        word = rng.choice(vocabulary)
        if rng.random() < 0.2:
            word += rng.choice([",", ".", ";"])
        words.append(word)
    text = " ".join(words)
    terms = {
        "alpha",
        "beta gamma",
        "gamma delta",
        "delta",
        "omega kappa sigma",
        "kappa",
        "sigma zeta",
        "zeta",
        "alpha beta",
        "beta",
        "gamma",
        "omega",
        "sigma",
        "kappa sigma",
        "delta omega",
        "zeta alpha",
        "beta gamma delta",
        "missing",
        "absent pair",
        "never here",
    }
    assert len(terms) == 20
    lex = make_lexicon([row(t) for t in sorted(terms)])
    paper = simple_paper([text])
    got = [(o.start, o.end) for o in recognize_terms(paper, lex)]
    assert got == oracle_all_substring_matcher(paper.full_text, terms)


def test_occurrences_never_overlap_and_are_ordered(fixture_paper, fixture_lexicon):
    occs = recognize_terms(fixture_paper, fixture_lexicon)
    cursor = 0
    for o in occs:
        assert o.start >= cursor
        cursor = o.end
        assert (
            fixture_paper.full_text[o.start : o.end].lower()
            == o.surface.lower()
        )


# --- filtering ---------------------------------------------------------------


def entry(term, source="umls", tags=(), freq=1.0, definition="def"):
    return LexiconEntry(term, definition, source, frozenset(tags), freq)


def occurrence_for(lex: Lexicon, term: str, start=0) -> TermOccurrence:
    return TermOccurrence(start, start + len(term), term, lex.entries[term][0])


def test_bottom_80_percent_by_frequency():
    rows = [row(f"t{i}", freq=float(i)) for i in range(10)]
    lex = make_lexicon(rows)
    occs = [occurrence_for(lex, f"t{i}", start=10 * i) for i in range(10)]
    kept = filter_terms(occs, lex, FilterConfig())
    kept_terms = {o.entry.term for o in kept}
    assert kept_terms == {f"t{i}" for i in range(8)}  # two most frequent removed


def test_thirty_char_surface_removed():
    long_term = "x" * 30
    short_term = "y" * 29
    lex = make_lexicon([row(long_term, freq=1), row(short_term, freq=2)])
    occs = [
        occurrence_for(lex, long_term),
        occurrence_for(lex, short_term, start=50),
    ]
    kept = filter_terms(occs, lex, FilterConfig(frequency_keep_fraction=1.0))
    assert [o.entry.term for o in kept] == [short_term]


def test_wiktionary_tag_whitelist():
    lex = make_lexicon(
        [
            row("slangy", source="wiktionary", tags="slang", freq=1),
            row("immuny", source="wiktionary", tags="immunology", freq=1),
        ]
    )
    occs = [occurrence_for(lex, "slangy"), occurrence_for(lex, "immuny", start=20)]
    kept = filter_terms(occs, lex, FilterConfig(frequency_keep_fraction=1.0))
    assert [o.entry.term for o in kept] == ["immuny"]


def test_umls_entry_bypasses_tag_rule():
    lex = make_lexicon(
        [
            row("dual", source="umls", freq=1),
            row("dual", source="wiktionary", tags="slang", freq=1),
        ]
    )
    occs = [occurrence_for(lex, "dual")]
    kept = filter_terms(occs, lex, FilterConfig(frequency_keep_fraction=1.0))
    assert len(kept) == 1
    assert kept[0].entry.source == "umls"


def test_wiktionary_relinks_to_tagged_definition():
    lex = make_lexicon(
        [
            row("multi", "slang def", source="wiktionary", tags="slang", freq=1),
            row("multi", "med def", source="wiktionary", tags="medicine", freq=1),
        ]
    )
    occs = [occurrence_for(lex, "multi")]
    kept = filter_terms(occs, lex, FilterConfig(frequency_keep_fraction=1.0))
    assert kept[0].entry.definition == "med def"


def test_default_tag_set_is_exactly_the_fourteen():
    assert DEFAULT_ALLOWED_TAGS == {
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
    assert len(DEFAULT_ALLOWED_TAGS) == 14


def test_filter_invariants_on_fixture(fixture_paper, fixture_lexicon):
    config = FilterConfig()
    occs = recognize_terms(fixture_paper, fixture_lexicon)
    kept = filter_terms(occs, fixture_lexicon, config)
    kept_spans = {(o.start, o.end) for o in kept}
    assert kept_spans <= {(o.start, o.end) for o in occs}
    cursor = 0
    for o in kept:
        assert o.start >= cursor
        cursor = o.end
        assert len(o.surface) < config.max_term_chars
        if o.entry.source == "wiktionary":
            assert o.entry.tags & config.allowed_tags

    cutoff = int(config.frequency_keep_fraction * len(fixture_lexicon.frequency_rank))
    removed_by_rank = {
        o.entry.term
        for o in occs
        if fixture_lexicon.rank_of(o.entry.term) >= cutoff
    }
    if kept and removed_by_rank:
        max_kept = max(o.entry.corpus_frequency for o in kept)
        min_removed = min(
            min(e.corpus_frequency for e in fixture_lexicon.entries[t])
            for t in removed_by_rank
        )
        assert max_kept <= min_removed


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.integers(0, 25),
            st.floats(0, 100, allow_nan=False),
            st.sampled_from(["umls", "wiktionary"]),
            st.booleans(),
        ),
        min_size=1,
        max_size=25,
        unique_by=lambda t: t[0],
    ),
    st.floats(0.05, 1.0),
)
def test_filter_frequency_property(entries, keep_fraction):
    rows = []
    for idx, freq, source, tagged in entries:
        tags = "medicine" if tagged else "slang"
        rows.append(row(f"w{idx}", source=source, tags=tags, freq=freq))
    lex = make_lexicon(rows)
    occs = [
        occurrence_for(lex, term, start=40 * i)
        for i, term in enumerate(sorted(lex.entries))
    ]
    config = FilterConfig(frequency_keep_fraction=keep_fraction)
    kept = filter_terms(occs, lex, config)
    cutoff = int(keep_fraction * len(lex.frequency_rank))
    allowed_ranks = set(lex.frequency_rank[:cutoff])
    for o in kept:
        assert o.entry.term in allowed_ranks
    # determinism
    again = filter_terms(occs, lex, config)
    assert again == kept


# --- linking -----------------------------------------------------------------


def test_link_only_wiktionary():
    lex = make_lexicon([row("solo", "only def", source="wiktionary", tags="medicine")])
    occ = occurrence_for(lex, "solo")
    d = link_definition(occ, lex)
    assert d.text == "only def"
    assert d.attribution == "Wiktionary"


@pytest.mark.parametrize("order", ["umls_first", "wiktionary_first"])
def test_link_precedence_both_orderings(order):
    rows = [
        row("both", "curated def", source="umls"),
        row("both", "community def", source="wiktionary", tags="medicine"),
    ]
    if order == "wiktionary_first":
        rows.reverse()
    lex = make_lexicon(rows)
    occ = occurrence_for(lex, "both")
    d = link_definition(occ, lex)
    assert d.text == "curated def"
    assert d.source == "umls"
    assert d.attribution == "UMLS"


def test_link_missing_term_errors():
    lex = make_lexicon([row("present")])
    ghost = TermOccurrence(0, 5, "ghost", entry("ghost"))
    with pytest.raises(MissingDefinitionError):
        link_definition(ghost, lex)
