"""Runtime configuration with CLI > environment > config file precedence."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import MedReaderError
from .providers import (
    BaselineAnswerProvider,
    CachingGenerationProvider,
    HttpAnswerProvider,
    HttpGenerationProvider,
    StubGenerationProvider,
)

PROVIDER_MODES = ("external", "baseline", "stub")

ENV_PREFIX = "MEDREADER_"

# env names, also documented in the README
ENV_STORE = ENV_PREFIX + "STORE"
ENV_PORT = ENV_PREFIX + "PORT"
ENV_PROVIDER = ENV_PREFIX + "PROVIDER"
ENV_QA_URL = ENV_PREFIX + "QA_URL"
ENV_GEN_URL = ENV_PREFIX + "GEN_URL"
ENV_GEN_CACHE = ENV_PREFIX + "GEN_CACHE"
ENV_LEXICON = ENV_PREFIX + "LEXICON"
ENV_QUESTIONS = ENV_PREFIX + "QUESTIONS"


@dataclass
class Settings:
    store: str = "./medreader-store"
    port: int = 8000
    host: str = "127.0.0.1"
    provider: str = "stub"
    qa_url: str = ""
    gen_url: str = ""
    gen_cache: str = ""
    lexicon: str = ""
    questions: str = ""
    passages_per_question: int = 3
    max_workers: int = 1
    frontend_dir: str = ""


class ConfigError(MedReaderError):
    pass


def _config_file_values(path: str | None) -> dict:
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return raw


def load_settings(config_file: str | None = None, **flags) -> Settings:
    """Merge flag/env/file values onto defaults (flags win, file loses)."""
    file_values = _config_file_values(config_file)
    env_names = {
        "store": ENV_STORE,
        "port": ENV_PORT,
        "provider": ENV_PROVIDER,
        "qa_url": ENV_QA_URL,
        "gen_url": ENV_GEN_URL,
        "gen_cache": ENV_GEN_CACHE,
        "lexicon": ENV_LEXICON,
        "questions": ENV_QUESTIONS,
    }
    settings = Settings()
    for name in vars(settings):
        value = flags.get(name)
        if value is None and name in env_names:
            value = os.environ.get(env_names[name])
        if value is None:
            value = file_values.get(name)
        if value is None:
            continue
        current = getattr(settings, name)
        if isinstance(current, int) and not isinstance(value, int):
            try:
                value = int(value)
            except (TypeError, ValueError):
                raise ConfigError(f"setting {name!r} must be an integer") from None
        setattr(settings, name, value)
    if settings.provider not in PROVIDER_MODES:
        raise ConfigError(
            f"provider must be one of {', '.join(PROVIDER_MODES)}; "
            f"got {settings.provider!r}"
        )
    return settings


def build_providers(settings: Settings):
    """(answer_provider, generation_provider, fallback) for the mode."""
    if settings.provider == "external":
        if not settings.qa_url or not settings.gen_url:
            raise ConfigError(
                "external provider mode needs qa_url and gen_url "
                f"(flags, {ENV_QA_URL}/{ENV_GEN_URL}, or config file)"
            )
        answers = HttpAnswerProvider(settings.qa_url)
        generation = HttpGenerationProvider(settings.gen_url)
        fallback = BaselineAnswerProvider()
    elif settings.provider == "baseline":
        answers = BaselineAnswerProvider()
        generation = (
            HttpGenerationProvider(settings.gen_url)
            if settings.gen_url
            else StubGenerationProvider()
        )
        fallback = None
    else:  # stub: fully offline
        answers = BaselineAnswerProvider()
        generation = StubGenerationProvider()
        fallback = None
    if settings.gen_cache:
        generation = CachingGenerationProvider(generation, settings.gen_cache)
    return answers, generation, fallback
