"""Key question index: curated questions and answer-passage retrieval.

The default index is eight fixed questions drawn from the PICO clinical
framework and Cochrane plain-language-summary guidance. Retrieval asks a
provider to score answer spans for the question and each paraphrase,
expands every span to its containing paragraph, and keeps the best score
per paragraph.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass

from .document import Paper, Paragraph, ParagraphRef
from .errors import QuestionConfigError, RetrievalError

SOURCE_PICO = "PICO"
SOURCE_COCHRANE = "Cochrane"

DEFAULT_K = 3


@dataclass(frozen=True)
class KeyQuestion:
    id: str
    text: str
    source: str  # SOURCE_PICO | SOURCE_COCHRANE
    paraphrases: tuple[str, ...]
    order: int

    @property
    def phrasings(self) -> tuple[str, ...]:
        return (self.text,) + self.paraphrases


@dataclass(frozen=True)
class AnswerSpan:
    """Raw provider output: a scored [start, end) span in full_text."""

    start: int
    end: int
    score: float


@dataclass(frozen=True)
class AnswerPassage:
    question_id: str
    paragraph: ParagraphRef
    score: float
    answer_start: int
    answer_end: int
    rank: int


DEFAULT_QUESTIONS: tuple[KeyQuestion, ...] = (
    KeyQuestion(
        "condition-studied",
        "What condition does this paper study?",
        SOURCE_PICO,
        (
            "What disease or health problem is this paper about?",
            "Which medical condition do the authors investigate?",
        ),
        0,
    ),
    KeyQuestion(
        "usual-treatment",
        "How is the condition usually treated?",
        SOURCE_PICO,
        (
            "What is the standard treatment for this condition?",
            "How do doctors normally treat this condition?",
        ),
        1,
    ),
    KeyQuestion(
        "study-goal",
        "What did the paper want to find out?",
        SOURCE_COCHRANE,
        (
            "What question did the study try to answer?",
            "What was the aim of this study?",
        ),
        2,
    ),
    KeyQuestion(
        "study-method",
        "What did the paper do?",
        SOURCE_COCHRANE,
        (
            "What methods did the study use?",
            "How was the study carried out?",
        ),
        3,
    ),
    KeyQuestion(
        "new-treatments",
        "What were the new treatment(s), if any this paper looked into?",
        SOURCE_PICO,
        (
            "What new therapies did the paper investigate?",
            "Which experimental treatments were studied?",
        ),
        4,
    ),
    KeyQuestion(
        "findings",
        "What did the paper find?",
        SOURCE_COCHRANE,
        (
            "What were the results of the study?",
            "What outcomes did the study report?",
        ),
        5,
    ),
    KeyQuestion(
        "demographic-differences",
        "Are the findings different depending on a person's demographics?",
        SOURCE_PICO,
        (
            "Do the results vary by age, sex, or background?",
            "Do the findings differ across patient groups?",
        ),
        6,
    ),
    KeyQuestion(
        "limitations",
        "What are the limitations of the findings?",
        SOURCE_COCHRANE,
        (
            "What are the weaknesses of this study?",
            "What caveats apply to the results?",
        ),
        7,
    ),
)


def load_questions(config_data: bytes | str | None = None) -> list[KeyQuestion]:
    """Built-in default index, or a replacement set from a JSON config.

    Config shape: [{"id", "text", "source", "paraphrases", "order"}, ...].
    Duplicate ids or non-contiguous order values are config errors.
    """
    if config_data is None:
        return list(DEFAULT_QUESTIONS)
    if isinstance(config_data, bytes):
        config_data = config_data.decode("utf-8")
    try:
        raw = json.loads(config_data)
    except json.JSONDecodeError as exc:
        raise QuestionConfigError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, list) or not raw:
        raise QuestionConfigError("config must be a non-empty array of questions")

    questions = []
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise QuestionConfigError(f"question {i} must be an object")
        try:
            questions.append(
                KeyQuestion(
                    id=obj["id"],
                    text=obj["text"],
                    source=obj["source"],
                    paraphrases=tuple(obj.get("paraphrases", [])),
                    order=obj["order"],
                )
            )
        except KeyError as exc:
            raise QuestionConfigError(f"question {i} missing field {exc}") from None
        if questions[-1].source not in (SOURCE_PICO, SOURCE_COCHRANE):
            raise QuestionConfigError(
                f"question {obj['id']!r} has unknown source {obj['source']!r}"
            )
    ids = [q.id for q in questions]
    if len(set(ids)) != len(ids):
        raise QuestionConfigError("duplicate question ids")
    if sorted(q.order for q in questions) != list(range(len(questions))):
        raise QuestionConfigError("order values must be contiguous from 0")
    return sorted(questions, key=lambda q: q.order)


# Fixed stopword list for the lexical baseline. Deliberately small and
# frozen: changing it changes scores, so treat edits as contract changes.
STOPWORDS = frozenset(
    """
    a an the and or but if then else than too very so such only also both
    of in on at to for from by with without about as into like through
    after over between out against during before under around among up
    down off above below is am are was were be been being do does did
    doing have has had having will would shall should may might must can
    could not no nor this that these those it its it's they them their
    theirs we us our ours you your yours he him his she her hers i me my
    mine what which who whom whose when where why how any all each some
    there here
    """.split()
)

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def content_tokens(text: str) -> set[str]:
    """Lowercased, punctuation-stripped, stopword-filtered token set."""
    tokens = set()
    for raw in text.lower().split():
        token = raw.translate(_PUNCT_TABLE)
        if token and token not in STOPWORDS:
            tokens.add(token)
    return tokens


def document_frequencies(paper: Paper) -> dict[str, int]:
    """Per-token count of paragraphs containing the token."""
    df: dict[str, int] = {}
    for para in paper.paragraphs():
        for token in content_tokens(para.text):
            df[token] = df.get(token, 0) + 1
    return df


def baseline_score(
    question_phrasings: list[str] | tuple[str, ...],
    paragraph: Paragraph,
    paper: Paper,
    _df: dict[str, int] | None = None,
) -> float:
    """Max over phrasings of the idf sum over shared content tokens.

    idf(t) = ln(1 + N / df(t)) with N = paragraph count and df(t) = the
    number of paragraphs containing t.
    """
    df = _df if _df is not None else document_frequencies(paper)
    n_paragraphs = sum(1 for _ in paper.paragraphs())
    para_tokens = content_tokens(paragraph.text)
    best = 0.0
    for phrasing in question_phrasings:
        shared = content_tokens(phrasing) & para_tokens
        score = sum(math.log(1 + n_paragraphs / df[t]) for t in shared)
        best = max(best, score)
    return best


def retrieve_answers(
    paper: Paper,
    question: KeyQuestion,
    provider,
    k: int = DEFAULT_K,
) -> list[AnswerPassage]:
    """Top-k answer passages for a question.

    Queries the provider once per phrasing, expands each returned span to
    its containing paragraph, keeps the best score per paragraph, and
    ranks by descending score with document-position tie-breaks.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    paragraph_order = {p.ref: i for i, p in enumerate(paper.paragraphs())}

    # per paragraph: (score, doc position, answer span start/end)
    best: dict[ParagraphRef, tuple[float, int, int, int]] = {}
    for phrasing in question.phrasings:
        try:
            spans = provider.answer_spans(phrasing, paper)
        except Exception as exc:
            raise RetrievalError(question.id, str(exc)) from exc
        for span in spans:
            para = paper.paragraph_at(span.start)
            if para is None or span.end > para.end or span.end <= span.start:
                raise RetrievalError(
                    question.id,
                    f"provider span [{span.start}, {span.end}) does not fall "
                    "inside a single paragraph",
                )
            candidate = (span.score, paragraph_order[para.ref], span.start, span.end)
            current = best.get(para.ref)
            # higher score wins; on equal score keep the earliest span
            if (
                current is None
                or candidate[0] > current[0]
                or (candidate[0] == current[0] and candidate[2:] < current[2:])
            ):
                best[para.ref] = candidate
    ordered = sorted(best.items(), key=lambda kv: (-kv[1][0], kv[1][1]))
    return [
        AnswerPassage(
            question_id=question.id,
            paragraph=ref,
            score=score,
            answer_start=start,
            answer_end=end,
            rank=rank,
        )
        for rank, (ref, (score, _pos, start, end)) in enumerate(ordered[:k])
    ]
