"""Plain-language gist generation: prompts, quality gates, retry policy.

Section gists are generated from the concatenated first sentences of a
leaf section's paragraphs; answer gists from the full paragraph that
contains an answer. Both use the same prompt template. Candidates that
copy the source or degenerate into repetition are regenerated, up to
five attempts; after that the least-copying candidate ships flagged as
degraded rather than leaving a hole.
"""

from __future__ import annotations

import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .document import Paper, split_sentences
from .errors import EmptyInputError, GenerationError, InvalidSectionError
from .questions import AnswerPassage

PROMPT_TEMPLATE = (
    "My fifth grader asked me what this passage means:\n"
    '"""\n'
    "{source_text}\n"
    '"""\n'
    "I rephrased it for him, in plain language a fifth grader can understand:"
)

DEFAULT_MAX_LENGTH = 100  # characters of generated text
DEFAULT_TEMPERATURE = 0.4
TEMPERATURE_RANGE = (0.25, 0.5)

MAX_ATTEMPTS = 5
COPY_RATIO_LIMIT = 0.6
REPEAT_RUN_LIMIT = 4

SHORT_SENTENCE_CHARS = 40  # previews extend to two sentences below this

DISCLAIMER = (
    "Machine-generated plain-language summary; may contain errors. "
    "Check against the original text."
)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_length: int = DEFAULT_MAX_LENGTH
    temperature: float = DEFAULT_TEMPERATURE
    seed_hint: int | None = None

    def __post_init__(self):
        lo, hi = TEMPERATURE_RANGE
        if not lo <= self.temperature <= hi:
            raise ValueError(f"temperature must be in [{lo}, {hi}]")


@dataclass(frozen=True)
class QualityReport:
    copy_ratio: float
    max_repeat_run: int
    empty: bool

    def acceptable(
        self,
        copy_limit: float = COPY_RATIO_LIMIT,
        repeat_limit: int = REPEAT_RUN_LIMIT,
    ) -> bool:
        return (
            not self.empty
            and self.copy_ratio < copy_limit
            and self.max_repeat_run < repeat_limit
        )


@dataclass(frozen=True)
class GistCandidate:
    text: str
    attempt: int  # 1-based attempt that produced this text
    quality: QualityReport
    degraded: bool = False
    attempts_used: int = 1


@dataclass(frozen=True)
class SectionGist:
    section_path: str
    input_text: str
    gist: str
    attempts_used: int
    degraded: bool
    disclaimer: str = DISCLAIMER


@dataclass(frozen=True)
class AnswerGist:
    question_id: str
    section_path: str
    paragraph_index: int
    gist: str
    preview: str
    attempts_used: int
    degraded: bool
    disclaimer: str = DISCLAIMER


@dataclass(frozen=True)
class SkippedSection:
    section_path: str
    reason: str


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _tokens(text: str) -> list[str]:
    out = []
    for raw in text.lower().split():
        token = raw.translate(_PUNCT_TABLE)
        if token:
            out.append(token)
    return out


def _longest_common_run(a: list[str], b: list[str]) -> int:
    """Longest common contiguous token run (classic O(n*m) table)."""
    if not a or not b:
        return 0
    best = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        row = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                row[j] = prev[j - 1] + 1
                if row[j] > best:
                    best = row[j]
        prev = row
    return best


def assess_quality(source_text: str, candidate_text: str) -> QualityReport:
    """Copy and repetition measures of a candidate against its source."""
    cand = _tokens(candidate_text)
    if not cand:
        return QualityReport(copy_ratio=0.0, max_repeat_run=0, empty=True)
    src = _tokens(source_text)
    copy_ratio = _longest_common_run(src, cand) / len(cand)
    max_run = run = 1
    for prev_tok, tok in zip(cand, cand[1:]):
        run = run + 1 if tok == prev_tok else 1
        max_run = max(max_run, run)
    return QualityReport(
        copy_ratio=copy_ratio,
        max_repeat_run=max_run,
        empty=not candidate_text.strip(),
    )


def build_section_input(paper: Paper, section_path: str) -> str:
    """First sentence of each paragraph in a leaf section, space-joined."""
    section = paper.section_by_path(section_path)
    if section is None:
        raise InvalidSectionError(f"no section {section_path!r}")
    if not section.is_leaf:
        raise InvalidSectionError(f"section {section_path!r} is not a leaf")
    firsts = []
    for para in section.paragraphs:
        if para.sentences:
            first = para.sentences[0]
            firsts.append(paper.full_text[first.start : first.end])
    if not firsts:
        raise EmptyInputError(f"section {section_path!r} has no non-empty paragraphs")
    return " ".join(firsts)


def build_prompt(source_text: str) -> GenerationRequest:
    """Generation request with the standard template and defaults."""
    if not source_text:
        raise EmptyInputError("source text is empty")
    return GenerationRequest(prompt=PROMPT_TEMPLATE.format(source_text=source_text))


def generate_with_retry(
    request: GenerationRequest,
    source_text: str,
    provider,
    max_attempts: int = MAX_ATTEMPTS,
    copy_limit: float = COPY_RATIO_LIMIT,
    repeat_limit: int = REPEAT_RUN_LIMIT,
) -> GistCandidate:
    """Call the provider until a candidate passes the quality gates.

    Accepts the first candidate with copy_ratio < copy_limit,
    max_repeat_run < repeat_limit, and non-empty text. If none qualifies,
    returns the candidate with minimal copy_ratio, flagged degraded. A
    provider exception consumes an attempt; only all attempts failing
    raises GenerationError.
    """
    candidates: list[GistCandidate] = []
    failures: list[str] = []
    base_seed = request.seed_hint if request.seed_hint is not None else 0
    for attempt in range(1, max_attempts + 1):
        attempt_request = replace(request, seed_hint=base_seed + attempt - 1)
        try:
            text = provider.generate(attempt_request)
        except Exception as exc:
            failures.append(f"attempt {attempt}: {exc}")
            continue
        quality = assess_quality(source_text, text)
        candidate = GistCandidate(
            text=text.strip(), attempt=attempt, quality=quality, attempts_used=attempt
        )
        if quality.acceptable(copy_limit, repeat_limit):
            return candidate
        candidates.append(candidate)
    if not candidates:
        raise GenerationError(
            f"provider failed on all {max_attempts} attempts: {'; '.join(failures)}"
        )
    fallback = min(candidates, key=lambda c: (c.quality.copy_ratio, c.attempt))
    return replace(fallback, degraded=True, attempts_used=max_attempts)


def make_section_gists(
    paper: Paper,
    provider,
    max_workers: int = 1,
    seed_hint: int | None = None,
) -> tuple[list[SectionGist], list[SkippedSection]]:
    """One gist per leaf section with at least one non-empty paragraph.

    Per-section failures are recorded as skips; the batch never aborts.
    Output order matches leaf order regardless of worker count.
    """
    leaves = [s.path for s in paper.walk_sections() if s.is_leaf]

    def one(path: str) -> SectionGist | SkippedSection:
        try:
            source = build_section_input(paper, path)
            request = replace(build_prompt(source), seed_hint=seed_hint)
            candidate = generate_with_retry(request, source, provider)
            return SectionGist(
                section_path=path,
                input_text=source,
                gist=candidate.text,
                attempts_used=candidate.attempts_used,
                degraded=candidate.degraded,
            )
        except (EmptyInputError, GenerationError) as exc:
            return SkippedSection(section_path=path, reason=str(exc))

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, leaves))
    else:
        results = [one(path) for path in leaves]

    gists = [r for r in results if isinstance(r, SectionGist)]
    skipped = [r for r in results if isinstance(r, SkippedSection)]
    return gists, skipped


def _preview(gist: str) -> str:
    """Sentence-boundary prefix: first sentence, or two if the first is
    shorter than SHORT_SENTENCE_CHARS."""
    sentences = split_sentences(gist)
    if not sentences:
        return gist
    first = sentences[0]
    if first.end - first.start < SHORT_SENTENCE_CHARS and len(sentences) > 1:
        return gist[: sentences[1].end]
    return gist[: first.end]


def make_answer_gist(
    passage: AnswerPassage,
    paper: Paper,
    provider,
    seed_hint: int | None = None,
) -> AnswerGist:
    """Gist of the passage's full paragraph, with its sidebar preview."""
    paragraph = paper.paragraph_by_ref(passage.paragraph)
    if paragraph is None:
        raise InvalidSectionError(f"passage paragraph {passage.paragraph} not in paper")
    request = replace(build_prompt(paragraph.text), seed_hint=seed_hint)
    candidate = generate_with_retry(request, paragraph.text, provider)
    return AnswerGist(
        question_id=passage.question_id,
        section_path=passage.paragraph.section_path,
        paragraph_index=passage.paragraph.index,
        gist=candidate.text,
        preview=_preview(candidate.text),
        attempts_used=candidate.attempts_used,
        degraded=candidate.degraded,
    )
