"""Exception types shared across the package."""

from __future__ import annotations


class MedReaderError(Exception):
    """Base class for all package errors."""


class ParseError(MedReaderError):
    """Malformed interchange document; ``path`` names the offending location."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class EmptyDocumentError(MedReaderError):
    """Interchange document contains no sections."""


class LexiconFormatError(MedReaderError):
    """Malformed lexicon row; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingDefinitionError(MedReaderError):
    """An occurrence references a term absent from the lexicon."""


class QuestionConfigError(MedReaderError):
    """Question config file violates the id/order contract."""


class InvalidSectionError(MedReaderError):
    """Section path is unknown or not a leaf."""


class EmptyInputError(MedReaderError):
    """No source text available to build a generation input from."""


class GenerationError(MedReaderError):
    """Generation provider failed on every retry attempt."""


class RetrievalError(MedReaderError):
    """Answer provider failed; carries the question id for fallback handling."""

    def __init__(self, question_id: str, message: str):
        super().__init__(f"{question_id}: {message}")
        self.question_id = question_id


class ProviderError(MedReaderError):
    """A single provider call failed (transport, bad response shape, ...)."""


class BundleNotFoundError(MedReaderError):
    """No stored bundle/document under the requested id."""


class BundleIntegrityError(MedReaderError):
    """Stored bundle bytes fail checksum or schema validation."""


class EventValidationError(MedReaderError):
    """Telemetry event rejected; ``reason`` is machine-readable."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class SchemaValidationError(MedReaderError):
    """An object does not validate against a published schema."""

    def __init__(self, message: str, json_path: str = "$"):
        super().__init__(f"{json_path}: {message}")
        self.json_path = json_path
