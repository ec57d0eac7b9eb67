"""Augmentation bundle: one self-contained artifact per paper.

The bundle embeds the full paper plus every augmentation (linked term
occurrences, section gists, questions with answer passages and gists) so
the reader UI needs exactly one fetch. Serialization is canonical JSON:
identical inputs and providers yield byte-identical bundles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import __version__
from .document import (
    Paper,
    Paragraph,
    ParagraphRef,
    Section,
    SentenceSpan,
    canonical_json,
)
from .errors import BundleIntegrityError, EmptyInputError, GenerationError, RetrievalError
from .gist import (
    DISCLAIMER,
    AnswerGist,
    SectionGist,
    SkippedSection,
    make_answer_gist,
    make_section_gists,
)
from .lexicon import Definition, FilterConfig, Lexicon, LexiconEntry, TermOccurrence
from .lexicon import filter_terms, link_definition, recognize_terms
from .questions import DEFAULT_K, AnswerPassage, KeyQuestion, retrieve_answers

BUNDLE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LinkedOccurrence:
    occurrence: TermOccurrence
    definition: Definition


@dataclass(frozen=True)
class QuestionAnswers:
    question: KeyQuestion
    passages: tuple[AnswerPassage, ...]  # document order
    gists: tuple[AnswerGist | None, ...]  # aligned with passages
    sidebar_preview: str
    error: str | None = None


@dataclass(frozen=True)
class PipelineMeta:
    created_at: str
    answer_provider: str
    generation_provider: str
    section_skips: tuple[SkippedSection, ...]
    question_errors: tuple[dict, ...]
    feature_errors: tuple[dict, ...]
    disclaimer: str = DISCLAIMER
    version: str = __version__


@dataclass(frozen=True)
class AugmentationBundle:
    paper: Paper
    terms: tuple[LinkedOccurrence, ...]
    section_gists: tuple[SectionGist, ...]
    questions: tuple[QuestionAnswers, ...]
    meta: PipelineMeta

    @property
    def paper_id(self) -> str:
        return self.paper.id


@dataclass(frozen=True)
class AssembleConfig:
    filter_config: FilterConfig = field(default_factory=FilterConfig)
    passages_per_question: int = DEFAULT_K
    max_workers: int = 1
    seed_hint: int | None = None
    fallback_provider: object | None = None  # used when the answer provider fails
    created_at: str = ""  # injected so assembly stays a pure function


def assemble_bundle(
    paper: Paper,
    lexicon: Lexicon,
    questions: list[KeyQuestion],
    answer_provider,
    generation_provider,
    config: AssembleConfig | None = None,
) -> AugmentationBundle:
    """Run the full augmentation pipeline over one paper.

    Individual features degrade on failure and the failure is recorded
    in pipeline_meta; only an invalid paper aborts assembly.
    """
    config = config or AssembleConfig()
    feature_errors: list[dict] = []

    terms: tuple[LinkedOccurrence, ...] = ()
    try:
        occurrences = recognize_terms(paper, lexicon)
        kept = filter_terms(occurrences, lexicon, config.filter_config)
        terms = tuple(
            LinkedOccurrence(occ, link_definition(occ, lexicon)) for occ in kept
        )
    except Exception as exc:  # degrade, never abort
        feature_errors.append({"feature": "term_definitions", "error": str(exc)})

    gists: tuple[SectionGist, ...] = ()
    skips: tuple[SkippedSection, ...] = ()
    try:
        gist_list, skip_list = make_section_gists(
            paper,
            generation_provider,
            max_workers=config.max_workers,
            seed_hint=config.seed_hint,
        )
        gists, skips = tuple(gist_list), tuple(skip_list)
    except Exception as exc:
        feature_errors.append({"feature": "section_gists", "error": str(exc)})

    paragraph_order = {p.ref: i for i, p in enumerate(paper.paragraphs())}
    question_errors: list[dict] = []
    answered: list[QuestionAnswers] = []
    for question in sorted(questions, key=lambda q: q.order):
        passages, error = _retrieve_with_fallback(
            paper, question, answer_provider, config, question_errors
        )
        by_rank = sorted(passages, key=lambda p: p.rank)
        preview = ""
        gist_by_ref: dict[ParagraphRef, AnswerGist | None] = {}
        for passage in by_rank:
            gist: AnswerGist | None = None
            try:
                gist = make_answer_gist(
                    passage, paper, generation_provider, seed_hint=config.seed_hint
                )
            except (GenerationError, EmptyInputError) as exc:
                question_errors.append(
                    {
                        "question_id": question.id,
                        "error": f"answer gist failed: {exc}",
                    }
                )
            gist_by_ref[passage.paragraph] = gist
            if not preview and gist is not None:
                preview = gist.preview
        doc_order = sorted(passages, key=lambda p: paragraph_order[p.paragraph])
        answered.append(
            QuestionAnswers(
                question=question,
                passages=tuple(doc_order),
                gists=tuple(gist_by_ref[p.paragraph] for p in doc_order),
                sidebar_preview=preview,
                error=error,
            )
        )

    meta = PipelineMeta(
        created_at=config.created_at,
        answer_provider=getattr(answer_provider, "name", "unknown"),
        generation_provider=getattr(generation_provider, "name", "unknown"),
        section_skips=skips,
        question_errors=tuple(question_errors),
        feature_errors=tuple(feature_errors),
    )
    return AugmentationBundle(
        paper=paper,
        terms=terms,
        section_gists=gists,
        questions=tuple(answered),
        meta=meta,
    )


def _retrieve_with_fallback(paper, question, provider, config, question_errors):
    try:
        return retrieve_answers(paper, question, provider, config.passages_per_question), None
    except RetrievalError as exc:
        if config.fallback_provider is not None and config.fallback_provider is not provider:
            question_errors.append(
                {
                    "question_id": question.id,
                    "error": str(exc),
                    "fallback": getattr(config.fallback_provider, "name", "fallback"),
                }
            )
            try:
                passages = retrieve_answers(
                    paper, question, config.fallback_provider, config.passages_per_question
                )
                return passages, None
            except RetrievalError as exc2:
                exc = exc2
        question_errors.append({"question_id": question.id, "error": str(exc)})
        return [], str(exc)


# --- serialization ----------------------------------------------------------


def _section_dict(section: Section) -> dict:
    return {
        "path": section.path,
        "title": section.title,
        "depth": section.depth,
        "paragraphs": [
            {
                "index": p.ref.index,
                "text": p.text,
                "span": [p.start, p.end],
                "sentences": [[s.start, s.end] for s in p.sentences],
            }
            for p in section.paragraphs
        ],
        "children": [_section_dict(c) for c in section.children],
    }


def _gist_dict(gist: AnswerGist | None) -> dict | None:
    if gist is None:
        return None
    return {
        "text": gist.gist,
        "preview": gist.preview,
        "attempts_used": gist.attempts_used,
        "degraded": gist.degraded,
        "disclaimer": gist.disclaimer,
    }


def bundle_to_dict(bundle: AugmentationBundle) -> dict:
    paper = bundle.paper
    return {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "paper_id": paper.id,
        "paper": {
            "id": paper.id,
            "title": paper.title,
            "char_count": paper.char_count,
            "sections": [_section_dict(s) for s in paper.sections],
        },
        "term_occurrences": [
            {
                "span": [t.occurrence.start, t.occurrence.end],
                "surface": t.occurrence.surface,
                "term": t.occurrence.entry.term,
                "definition": {
                    "text": t.definition.text,
                    "source": t.definition.source,
                    "attribution": t.definition.attribution,
                },
            }
            for t in bundle.terms
        ],
        "section_gists": [
            {
                "section_path": g.section_path,
                "input_text": g.input_text,
                "gist": g.gist,
                "attempts_used": g.attempts_used,
                "degraded": g.degraded,
                "disclaimer": g.disclaimer,
            }
            for g in bundle.section_gists
        ],
        "questions": [
            {
                "id": qa.question.id,
                "text": qa.question.text,
                "source": qa.question.source,
                "order": qa.question.order,
                "paraphrases": list(qa.question.paraphrases),
                "sidebar_preview": qa.sidebar_preview,
                "error": qa.error,
                "passages": [
                    {
                        "paragraph": {
                            "section_path": p.paragraph.section_path,
                            "index": p.paragraph.index,
                        },
                        "score": p.score,
                        "rank": p.rank,
                        "answer_span": [p.answer_start, p.answer_end],
                        "gist": _gist_dict(g),
                    }
                    for p, g in zip(qa.passages, qa.gists)
                ],
            }
            for qa in bundle.questions
        ],
        "pipeline_meta": {
            "version": bundle.meta.version,
            "created_at": bundle.meta.created_at,
            "providers": {
                "answers": bundle.meta.answer_provider,
                "generation": bundle.meta.generation_provider,
            },
            "section_skips": [
                {"section_path": s.section_path, "reason": s.reason}
                for s in bundle.meta.section_skips
            ],
            "question_errors": list(bundle.meta.question_errors),
            "feature_errors": list(bundle.meta.feature_errors),
            "disclaimer": bundle.meta.disclaimer,
        },
    }


def serialize_bundle(bundle: AugmentationBundle) -> bytes:
    return canonical_json(bundle_to_dict(bundle))


def _paper_from_dict(obj: dict) -> Paper:
    def build_section(sdict: dict) -> tuple[Section, list[str]]:
        paragraphs = []
        texts = []
        for p in sdict["paragraphs"]:
            ref = ParagraphRef(sdict["path"], p["index"])
            sentences = tuple(
                SentenceSpan(s[0], s[1], i) for i, s in enumerate(p["sentences"])
            )
            paragraphs.append(
                Paragraph(ref, p["text"], p["span"][0], p["span"][1], sentences)
            )
            texts.append(p["text"])
        children = []
        for c in sdict["children"]:
            child, child_texts = build_section(c)
            children.append(child)
            texts.extend(child_texts)
        section = Section(
            path=sdict["path"],
            title=sdict["title"],
            depth=sdict["depth"],
            paragraphs=tuple(paragraphs),
            children=tuple(children),
        )
        return section, texts

    sections = []
    texts: list[str] = []
    for sdict in obj["sections"]:
        section, section_texts = build_section(sdict)
        sections.append(section)
        texts.extend(section_texts)
    full_text = " ".join(texts)
    if len(full_text) != obj["char_count"]:
        raise BundleIntegrityError(
            f"char_count {obj['char_count']} does not match "
            f"reconstructed text length {len(full_text)}"
        )
    return Paper(
        id=obj["id"], title=obj["title"], sections=tuple(sections), full_text=full_text
    )


def bundle_from_dict(data: dict) -> AugmentationBundle:
    """Rebuild the rich bundle from its stored dict form."""
    try:
        paper = _paper_from_dict(data["paper"])
        lookup = {p.ref: p for p in paper.paragraphs()}

        terms = []
        for t in data["term_occurrences"]:
            definition = Definition(
                t["definition"]["text"],
                t["definition"]["source"],
                t["definition"]["attribution"],
            )
            # the occurrence keeps only its chosen entry's term; rebuild a
            # minimal entry for span bookkeeping
            entry = LexiconEntry(
                term=t["term"],
                definition=definition.text,
                source=definition.source,
                tags=frozenset(),
                corpus_frequency=0.0,
            )
            terms.append(
                LinkedOccurrence(
                    TermOccurrence(t["span"][0], t["span"][1], t["surface"], entry),
                    definition,
                )
            )

        gists = tuple(
            SectionGist(
                section_path=g["section_path"],
                input_text=g["input_text"],
                gist=g["gist"],
                attempts_used=g["attempts_used"],
                degraded=g["degraded"],
                disclaimer=g["disclaimer"],
            )
            for g in data["section_gists"]
        )

        questions = []
        for q in data["questions"]:
            question = KeyQuestion(
                id=q["id"],
                text=q["text"],
                source=q["source"],
                paraphrases=tuple(q["paraphrases"]),
                order=q["order"],
            )
            passages = []
            answer_gists: list[AnswerGist | None] = []
            for p in q["passages"]:
                ref = ParagraphRef(p["paragraph"]["section_path"], p["paragraph"]["index"])
                if ref not in lookup:
                    raise BundleIntegrityError(f"passage paragraph {ref} not in paper")
                passages.append(
                    AnswerPassage(
                        question_id=q["id"],
                        paragraph=ref,
                        score=p["score"],
                        answer_start=p["answer_span"][0],
                        answer_end=p["answer_span"][1],
                        rank=p["rank"],
                    )
                )
                g = p["gist"]
                answer_gists.append(
                    None
                    if g is None
                    else AnswerGist(
                        question_id=q["id"],
                        section_path=ref.section_path,
                        paragraph_index=ref.index,
                        gist=g["text"],
                        preview=g["preview"],
                        attempts_used=g["attempts_used"],
                        degraded=g["degraded"],
                        disclaimer=g["disclaimer"],
                    )
                )
            questions.append(
                QuestionAnswers(
                    question=question,
                    passages=tuple(passages),
                    gists=tuple(answer_gists),
                    sidebar_preview=q["sidebar_preview"],
                    error=q.get("error"),
                )
            )

        meta_dict = data["pipeline_meta"]
        meta = PipelineMeta(
            created_at=meta_dict["created_at"],
            answer_provider=meta_dict["providers"]["answers"],
            generation_provider=meta_dict["providers"]["generation"],
            section_skips=tuple(
                SkippedSection(s["section_path"], s["reason"])
                for s in meta_dict["section_skips"]
            ),
            question_errors=tuple(meta_dict["question_errors"]),
            feature_errors=tuple(meta_dict["feature_errors"]),
            disclaimer=meta_dict["disclaimer"],
            version=meta_dict["version"],
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise BundleIntegrityError(f"bundle dict malformed: {exc!r}") from exc
    return AugmentationBundle(
        paper=paper,
        terms=tuple(terms),
        section_gists=gists,
        questions=tuple(questions),
        meta=meta,
    )
