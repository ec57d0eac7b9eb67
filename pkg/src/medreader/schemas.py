"""Published JSON Schemas for every wire and file format.

These are the contracts named in docs/schemas.md: the interchange
document accepted on ingest, the served bundle, telemetry event batches,
and question config files. Validation helpers raise
SchemaValidationError with the offending JSON path.
"""

from __future__ import annotations

import jsonschema

from .errors import SchemaValidationError

_SECTION_SCHEMA = {
    "type": "object",
    "properties": {
        "path": {"type": "string", "minLength": 1},
        "title": {"type": "string"},
        "paragraphs": {"type": "array", "items": {"type": "string"}},
        "children": {"type": "array", "items": {"$ref": "#/$defs/section"}},
    },
    "required": ["path", "title"],
    "additionalProperties": False,
}

DOCUMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Interchange document",
    "type": "object",
    "properties": {
        "title": {"type": "string"},
        "sections": {"type": "array", "items": {"$ref": "#/$defs/section"}},
    },
    "required": ["title", "sections"],
    "additionalProperties": False,
    "$defs": {"section": _SECTION_SCHEMA},
}

_SPAN = {
    "type": "array",
    "items": {"type": "integer", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
}

_PARAGRAPH_REF = {
    "type": "object",
    "properties": {
        "section_path": {"type": "string", "minLength": 1},
        "index": {"type": "integer", "minimum": 0},
    },
    "required": ["section_path", "index"],
    "additionalProperties": False,
}

_ANSWER_GIST = {
    "type": ["object", "null"],
    "properties": {
        "text": {"type": "string"},
        "preview": {"type": "string"},
        "attempts_used": {"type": "integer", "minimum": 1, "maximum": 5},
        "degraded": {"type": "boolean"},
        "disclaimer": {"type": "string"},
    },
    "required": ["text", "preview", "attempts_used", "degraded", "disclaimer"],
    "additionalProperties": False,
}

_BUNDLE_SECTION = {
    "type": "object",
    "properties": {
        "path": {"type": "string", "minLength": 1},
        "title": {"type": "string"},
        "depth": {"type": "integer", "minimum": 1},
        "paragraphs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "text": {"type": "string"},
                    "span": _SPAN,
                    "sentences": {"type": "array", "items": _SPAN},
                },
                "required": ["index", "text", "span", "sentences"],
                "additionalProperties": False,
            },
        },
        "children": {"type": "array", "items": {"$ref": "#/$defs/bundle_section"}},
    },
    "required": ["path", "title", "depth", "paragraphs", "children"],
    "additionalProperties": False,
}

BUNDLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Augmentation bundle",
    "type": "object",
    "properties": {
        "schema_version": {"const": 1},
        "paper_id": {"type": "string", "minLength": 1},
        "paper": {
            "type": "object",
            "properties": {
                "id": {"type": "string", "minLength": 1},
                "title": {"type": "string"},
                "char_count": {"type": "integer", "minimum": 0},
                "sections": {
                    "type": "array",
                    "items": {"$ref": "#/$defs/bundle_section"},
                    "minItems": 1,
                },
            },
            "required": ["id", "title", "char_count", "sections"],
            "additionalProperties": False,
        },
        "term_occurrences": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "span": _SPAN,
                    "surface": {"type": "string", "minLength": 1},
                    "term": {"type": "string", "minLength": 1},
                    "definition": {
                        "type": "object",
                        "properties": {
                            "text": {"type": "string"},
                            "source": {"enum": ["umls", "wiktionary"]},
                            "attribution": {"type": "string"},
                        },
                        "required": ["text", "source", "attribution"],
                        "additionalProperties": False,
                    },
                },
                "required": ["span", "surface", "term", "definition"],
                "additionalProperties": False,
            },
        },
        "section_gists": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "section_path": {"type": "string", "minLength": 1},
                    "input_text": {"type": "string"},
                    "gist": {"type": "string"},
                    "attempts_used": {"type": "integer", "minimum": 1, "maximum": 5},
                    "degraded": {"type": "boolean"},
                    "disclaimer": {"type": "string"},
                },
                "required": [
                    "section_path",
                    "input_text",
                    "gist",
                    "attempts_used",
                    "degraded",
                    "disclaimer",
                ],
                "additionalProperties": False,
            },
        },
        "questions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "text": {"type": "string", "minLength": 1},
                    "source": {"enum": ["PICO", "Cochrane"]},
                    "order": {"type": "integer", "minimum": 0},
                    "paraphrases": {"type": "array", "items": {"type": "string"}},
                    "sidebar_preview": {"type": "string"},
                    "error": {"type": ["string", "null"]},
                    "passages": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "paragraph": _PARAGRAPH_REF,
                                "score": {"type": "number"},
                                "rank": {"type": "integer", "minimum": 0},
                                "answer_span": _SPAN,
                                "gist": _ANSWER_GIST,
                            },
                            "required": [
                                "paragraph",
                                "score",
                                "rank",
                                "answer_span",
                                "gist",
                            ],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": [
                    "id",
                    "text",
                    "source",
                    "order",
                    "paraphrases",
                    "sidebar_preview",
                    "error",
                    "passages",
                ],
                "additionalProperties": False,
            },
        },
        "pipeline_meta": {
            "type": "object",
            "properties": {
                "version": {"type": "string"},
                "created_at": {"type": "string"},
                "providers": {
                    "type": "object",
                    "properties": {
                        "answers": {"type": "string"},
                        "generation": {"type": "string"},
                    },
                    "required": ["answers", "generation"],
                    "additionalProperties": False,
                },
                "section_skips": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "section_path": {"type": "string"},
                            "reason": {"type": "string"},
                        },
                        "required": ["section_path", "reason"],
                        "additionalProperties": False,
                    },
                },
                "question_errors": {"type": "array", "items": {"type": "object"}},
                "feature_errors": {"type": "array", "items": {"type": "object"}},
                "disclaimer": {"type": "string"},
            },
            "required": [
                "version",
                "created_at",
                "providers",
                "section_skips",
                "question_errors",
                "feature_errors",
                "disclaimer",
            ],
            "additionalProperties": False,
        },
    },
    "required": [
        "schema_version",
        "paper_id",
        "paper",
        "term_occurrences",
        "section_gists",
        "questions",
        "pipeline_meta",
    ],
    "additionalProperties": False,
    "$defs": {"bundle_section": _BUNDLE_SECTION},
}

EVENT_KINDS = (
    "key_question_click",
    "answer_gist_open",
    "section_gist_open",
    "term_definition_open",
    "scroll_sample",
    "jump_to_answer",
)

EVENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Telemetry event",
    "type": "object",
    "properties": {
        "event_id": {"type": "string", "minLength": 1},
        "timestamp_ms": {"type": "integer", "minimum": 0},
        "kind": {"enum": list(EVENT_KINDS)},
        "payload": {"type": "object"},
    },
    "required": ["event_id", "timestamp_ms", "kind", "payload"],
    "additionalProperties": False,
}

EVENT_BATCH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Telemetry event batch",
    "type": "object",
    "properties": {
        "events": {"type": "array", "items": EVENT_SCHEMA, "minItems": 1},
    },
    "required": ["events"],
    "additionalProperties": False,
}

QUESTIONS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Question config",
    "type": "array",
    "items": {
        "type": "object",
        "properties": {
            "id": {"type": "string", "minLength": 1},
            "text": {"type": "string", "minLength": 1},
            "source": {"enum": ["PICO", "Cochrane"]},
            "paraphrases": {"type": "array", "items": {"type": "string"}},
            "order": {"type": "integer", "minimum": 0},
        },
        "required": ["id", "text", "source", "order"],
        "additionalProperties": False,
    },
    "minItems": 1,
}


def _validate(instance, schema, what: str):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaValidationError(f"{what}: {err.message}", err.json_path)


def validate_document_dict(doc: dict):
    _validate(doc, DOCUMENT_SCHEMA, "interchange document")


def validate_event_batch(batch: dict):
    _validate(batch, EVENT_BATCH_SCHEMA, "event batch")


def validate_bundle_dict(data: dict):
    """Schema check plus reference-resolution checks: spans inside the
    paper, paragraph refs resolving, question/passage ordering."""
    _validate(data, BUNDLE_SCHEMA, "bundle")

    char_count = data["paper"]["char_count"]
    refs: set[tuple[str, int]] = set()
    spans: dict[tuple[str, int], tuple[int, int]] = {}

    def walk(section, json_path):
        for p in section["paragraphs"]:
            key = (section["path"], p["index"])
            refs.add(key)
            start, end = p["span"]
            spans[key] = (start, end)
            if not (0 <= start <= end <= char_count):
                raise SchemaValidationError(
                    f"paragraph span [{start}, {end}) outside [0, {char_count})",
                    f"{json_path}.paragraphs[{p['index']}].span",
                )
            if end - start != len(p["text"]):
                raise SchemaValidationError(
                    "paragraph span length does not match text",
                    f"{json_path}.paragraphs[{p['index']}].span",
                )
        for i, child in enumerate(section["children"]):
            walk(child, f"{json_path}.children[{i}]")

    for i, section in enumerate(data["paper"]["sections"]):
        walk(section, f"$.paper.sections[{i}]")

    for i, t in enumerate(data["term_occurrences"]):
        start, end = t["span"]
        if not (0 <= start < end <= char_count):
            raise SchemaValidationError(
                "term span outside paper", f"$.term_occurrences[{i}].span"
            )

    orders = [q["order"] for q in data["questions"]]
    if orders != sorted(orders):
        raise SchemaValidationError("questions not in index order", "$.questions")

    for qi, q in enumerate(data["questions"]):
        for pi, p in enumerate(q["passages"]):
            key = (p["paragraph"]["section_path"], p["paragraph"]["index"])
            if key not in refs:
                raise SchemaValidationError(
                    f"passage paragraph {key} not in paper",
                    f"$.questions[{qi}].passages[{pi}].paragraph",
                )
            pstart, pend = spans[key]
            astart, aend = p["answer_span"]
            if not (pstart <= astart < aend <= pend):
                raise SchemaValidationError(
                    f"answer span [{astart}, {aend}) outside paragraph span "
                    f"[{pstart}, {pend})",
                    f"$.questions[{qi}].passages[{pi}].answer_span",
                )
