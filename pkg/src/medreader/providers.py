"""Answer and generation providers.

Two provider contracts sit behind the engine:

* answer providers expose ``answer_spans(question_text, paper)`` and
  return scored [start, end) spans into the paper's full_text;
* generation providers expose ``generate(request)`` and return text.

Each contract has an HTTP client, a deterministic offline
implementation, and scripted variants for tests. Wire shapes are fixed
in docs/schemas.md.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .document import Paper
from .errors import ProviderError
from .gist import GenerationRequest
from .questions import AnswerSpan, baseline_score, document_frequencies


class BaselineAnswerProvider:
    """Offline lexical ranker: idf-overlap between question and paragraph.

    Emits one span per positively scoring paragraph (its first sentence,
    or the whole paragraph when it has no sentences), scored by the
    shared-token idf sum. Document frequencies are cached per paper id.
    """

    name = "baseline"

    def __init__(self):
        self._df_cache: dict[str, dict[str, int]] = {}
        self._lock = threading.Lock()

    def _frequencies(self, paper: Paper) -> dict[str, int]:
        with self._lock:
            if paper.id not in self._df_cache:
                self._df_cache[paper.id] = document_frequencies(paper)
            return self._df_cache[paper.id]

    def answer_spans(self, question_text: str, paper: Paper) -> list[AnswerSpan]:
        df = self._frequencies(paper)
        spans = []
        for para in paper.paragraphs():
            score = baseline_score([question_text], para, paper, _df=df)
            if score <= 0.0:
                continue
            if para.sentences:
                first = para.sentences[0]
                spans.append(AnswerSpan(first.start, first.end, score))
            elif para.end > para.start:
                spans.append(AnswerSpan(para.start, para.end, score))
        return spans


class ScriptedAnswerProvider:
    """Test double returning pre-scripted spans per phrasing."""

    name = "scripted"

    def __init__(self, script: dict[str, list[AnswerSpan]], default: list[AnswerSpan] | None = None):
        self.script = script
        self.default = default if default is not None else []
        self.calls: list[str] = []

    def answer_spans(self, question_text: str, paper: Paper) -> list[AnswerSpan]:
        self.calls.append(question_text)
        return list(self.script.get(question_text, self.default))


class FailingAnswerProvider:
    name = "failing"

    def answer_spans(self, question_text: str, paper: Paper) -> list[AnswerSpan]:
        raise ProviderError("scripted failure")


class HttpAnswerProvider:
    """Client for an external extractive-QA service.

    POSTs {"question": ..., "document": ...} and expects
    {"spans": [{"start": int, "end": int, "score": number}, ...]}.
    """

    name = "external"

    def __init__(self, url: str, client: httpx.Client | None = None, timeout: float = 30.0):
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def answer_spans(self, question_text: str, paper: Paper) -> list[AnswerSpan]:
        try:
            response = self._client.post(
                self.url, json={"question": question_text, "document": paper.full_text}
            )
            response.raise_for_status()
            body = response.json()
        except httpx.HTTPError as exc:
            raise ProviderError(f"QA provider request failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProviderError(f"QA provider returned invalid JSON: {exc}") from exc
        try:
            return [
                AnswerSpan(int(s["start"]), int(s["end"]), float(s["score"]))
                for s in body["spans"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"QA provider response malformed: {exc}") from exc


# Fixed vocabulary for synthesized stub text. Plain, common words so
# synthesized gists never trip the copy/repetition gates by accident.
_STUB_WORDS = (
    "people doctors study treatment results body cells health care new "
    "helps works tests found showed better small large group patients "
    "medicine safe early plan signs changes blood drug trial answer"
).split()


class StubGenerationProvider:
    """Deterministic offline generation.

    Scripted outputs (a per-prompt list consumed call by call) take
    priority; otherwise the stub synthesizes two short plain-word
    sentences keyed by (prompt hash, seed), capped at max_length. Every
    request is recorded for prompt-fidelity assertions.
    """

    name = "stub"

    def __init__(self, script: dict[str, list[str]] | None = None):
        self.script = {k: list(v) for k, v in (script or {}).items()}
        self.requests: list[GenerationRequest] = []
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> str:
        with self._lock:
            self.requests.append(request)
            if request.prompt in self.script:
                outputs = self.script[request.prompt]
                index = self._counts.get(request.prompt, 0)
                self._counts[request.prompt] = index + 1
                return outputs[min(index, len(outputs) - 1)]
        return _synthesize(request)


class ScriptedGenerationProvider:
    """Returns a fixed output sequence across calls, regardless of prompt.

    Entries may be exceptions, which are raised (simulates provider
    failures). The last entry repeats once the script is exhausted.
    """

    name = "scripted"

    def __init__(self, outputs: list):
        if not outputs:
            raise ValueError("script must not be empty")
        self.outputs = outputs
        self.requests: list[GenerationRequest] = []
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> str:
        with self._lock:
            self.requests.append(request)
            index = min(len(self.requests) - 1, len(self.outputs) - 1)
        result = self.outputs[index]
        if isinstance(result, Exception):
            raise result
        return result


class HttpGenerationProvider:
    """Client for an external generation service.

    POSTs {"prompt", "max_length", "temperature", "seed_hint"?} and
    expects {"text": ...}.
    """

    name = "external"

    def __init__(self, url: str, client: httpx.Client | None = None, timeout: float = 60.0):
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def generate(self, request: GenerationRequest) -> str:
        payload: dict = {
            "prompt": request.prompt,
            "max_length": request.max_length,
            "temperature": request.temperature,
        }
        if request.seed_hint is not None:
            payload["seed_hint"] = request.seed_hint
        try:
            response = self._client.post(self.url, json=payload)
            response.raise_for_status()
            body = response.json()
        except httpx.HTTPError as exc:
            raise ProviderError(f"generation provider request failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProviderError(f"generation provider returned invalid JSON: {exc}") from exc
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise ProviderError("generation provider response missing 'text'")
        return body["text"]


class CachingGenerationProvider:
    """On-disk cache around any generation provider.

    Keyed by the hash of the full request (prompt, parameters, seed).
    Writes are atomic (temp file + rename) so concurrent readers never
    observe partial entries.
    """

    def __init__(self, inner, cache_dir: str | Path):
        self.inner = inner
        self.name = getattr(inner, "name", "unknown")
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def cache_key(request: GenerationRequest) -> str:
        payload = json.dumps(
            {
                "prompt": request.prompt,
                "max_length": request.max_length,
                "temperature": request.temperature,
                "seed_hint": request.seed_hint,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def generate(self, request: GenerationRequest) -> str:
        path = self.cache_dir / f"{self.cache_key(request)}.json"
        if path.exists():
            try:
                return json.loads(path.read_text("utf-8"))["text"]
            except (json.JSONDecodeError, KeyError, OSError):
                pass  # treat damaged entries as misses
        text = self.inner.generate(request)
        tmp = path.with_suffix(".tmp-" + str(threading.get_ident()))
        tmp.write_text(json.dumps({"text": text}, ensure_ascii=False), "utf-8")
        tmp.replace(path)
        return text


def _synthesize(request: GenerationRequest) -> str:
    """Two deterministic plain-word sentences within max_length chars."""
    seed = request.seed_hint if request.seed_hint is not None else 0
    digest = hashlib.sha256(f"{request.prompt}\x00{seed}".encode("utf-8")).digest()
    words = [_STUB_WORDS[b % len(_STUB_WORDS)] for b in digest[:14]]
    text = "The " + " ".join(words[:7]) + ". It " + " ".join(words[7:]) + "."
    if len(text) <= request.max_length:
        return text
    clipped = text[: request.max_length].rsplit(" ", 1)[0].rstrip(",;:.") + "."
    return clipped[: request.max_length]
