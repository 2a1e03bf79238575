"""Client for the external punctuation/translation LLM service.

Two prompt contracts are carried here: punctuation restoration (insert
punctuation only, never touch the words) and normal/colloquial translation.
Punctuation outputs are validated structurally: after stripping punctuation
and collapsing whitespace, the output token sequence must equal the input
token sequence exactly.

The client talks to an OpenAI-compatible chat endpoint configured through
the environment (BA_LLM_URL, BA_LLM_MODEL, BA_LLM_KEY). A deterministic
offline fallback mode keeps the full pipeline testable without a service:
it returns the input text, appending the language's expected sentence
terminator when no terminal mark is present.
"""

from __future__ import annotations

import json
import os
import threading
import time
import unicodedata
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError, ProtocolError, TransportError, ValidationError
from .textnorm import ALL_TERMINALS

TASK_PUNCTUATE = "punctuate"
TASK_TRANSLATE_NORMAL = "translate_normal"
TASK_TRANSLATE_COLLOQUIAL = "translate_colloquial"
TASKS = (TASK_PUNCTUATE, TASK_TRANSLATE_NORMAL, TASK_TRANSLATE_COLLOQUIAL)
_TRANSLATION_TASKS = (TASK_TRANSLATE_NORMAL, TASK_TRANSLATE_COLLOQUIAL)


@dataclass(frozen=True)
class LangMeta:
    name: str
    expected_terminator: str


DEFAULT_LANG_META: dict[str, LangMeta] = {
    "asm": LangMeta("Assamese", "।"),
    "ben": LangMeta("Bengali", "।"),
    "eng": LangMeta("English", "."),
    "guj": LangMeta("Gujarati", "."),
    "hin": LangMeta("Hindi", "।"),
    "kan": LangMeta("Kannada", "."),
    "mal": LangMeta("Malayalam", "."),
    "mar": LangMeta("Marathi", "।"),
    "mni": LangMeta("Manipuri (Bengali script)", "।"),
    "npi": LangMeta("Nepali", "।"),
    "ory": LangMeta("Odia", "।"),
    "pan": LangMeta("Punjabi", "।"),
    "snd": LangMeta("Sindhi", "۔"),
    "tam": LangMeta("Tamil", "."),
    "tel": LangMeta("Telugu", "."),
    "urd": LangMeta("Urdu", "۔"),
}

PUNCTUATE_TEMPLATE = """You are a punctuation restoration engine for {SRC_LANG} text.

Insert punctuation marks into the text below, following these principles:
1. Accuracy: punctuation must follow the grammatical rules of the language.
2. Readability: insert commas, periods, and question marks where they make the sentences clearer.
3. Consistency: keep one punctuation style throughout the whole text.
4. Structure preservation: do not add, delete, or reorder words; only punctuation may be inserted.

Language metadata: {LANG_META}.
Return the result as JSON on a single line: {"text": "<the punctuated text>"}

Text: {TEXT}"""

TRANSLATE_NORMAL_TEMPLATE = """You are a professional translator. Translate the text below from {SRC_LANG} to {TGT_LANG}.

Principles:
1. Accuracy: no information may be lost or invented.
2. Natural tone: the translation must read as fluent {TGT_LANG}.
3. Meaningful restructuring: prefer idiomatic phrasing over literal word order.

Language metadata: {LANG_META}.
Return the result as JSON on a single line: {"text": "<the translation>"}

Text: {TEXT}"""

TRANSLATE_COLLOQUIAL_TEMPLATE = """You are translating spontaneous speech. Translate the text below from {SRC_LANG} to {TGT_LANG} in an informal, conversational register.

Principles:
1. Keep the core meaning intact.
2. Mimic real spoken language: use disfluencies, fillers, contractions, and informal vocabulary where they sound natural.
3. Sentence structure may be reshaped freely to sound spoken rather than written.

Language metadata: {LANG_META}.
Return the result as JSON on a single line: {"text": "<the translation>"}

Text: {TEXT}"""

_TEMPLATES = {
    TASK_PUNCTUATE: PUNCTUATE_TEMPLATE,
    TASK_TRANSLATE_NORMAL: TRANSLATE_NORMAL_TEMPLATE,
    TASK_TRANSLATE_COLLOQUIAL: TRANSLATE_COLLOQUIAL_TEMPLATE,
}


@dataclass(frozen=True)
class PromptSpec:
    """Prompt contract for one task: template plus per-language metadata."""

    task: str
    lang_meta: dict[str, LangMeta] = field(default_factory=lambda: dict(DEFAULT_LANG_META))
    body_template: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}")
        template = self.body_template or _TEMPLATES[self.task]
        object.__setattr__(self, "body_template", template)
        if template.count("{TEXT}") != 1:
            raise ValidationError("body_template must contain the {TEXT} placeholder exactly once")
        if self.task == TASK_PUNCTUATE:
            required = ("Accuracy", "Readability", "Consistency", "Structure preservation", "JSON")
            missing = [word for word in required if word not in template]
            if missing:
                raise ValidationError(f"punctuate template must state {missing} principles/output format")


@dataclass(frozen=True)
class LlmResponse:
    raw: str
    parsed_text: str
    valid: bool
    violation: Optional[str] = None


def build_prompt(spec: PromptSpec, text: str, src: str, tgt: Optional[str] = None) -> str:
    """Render a prompt; deterministic in all inputs."""
    if not text.strip():
        raise ValidationError("text must be non-empty")
    is_translation = spec.task in _TRANSLATION_TASKS
    if is_translation and tgt is None:
        raise ValidationError(f"task {spec.task} requires a target language")
    if not is_translation and tgt is not None:
        raise ValidationError(f"task {spec.task} does not take a target language")
    if src not in spec.lang_meta:
        raise ConfigError(f"no lang_meta entry for source language {src!r}")
    src_meta = spec.lang_meta[src]
    meta_bits = [f"source language {src_meta.name}, expected sentence terminator {src_meta.expected_terminator!r}"]
    rendered = spec.body_template.replace("{SRC_LANG}", src_meta.name)
    if is_translation:
        if tgt not in spec.lang_meta:
            raise ConfigError(f"no lang_meta entry for target language {tgt!r}")
        tgt_meta = spec.lang_meta[tgt]
        meta_bits.append(
            f"target language {tgt_meta.name}, expected sentence terminator {tgt_meta.expected_terminator!r}"
        )
        rendered = rendered.replace("{TGT_LANG}", tgt_meta.name)
    rendered = rendered.replace("{LANG_META}", "; ".join(meta_bits))
    return rendered.replace("{TEXT}", text)


def _content_tokens(text: str) -> list[str]:
    """Whitespace tokens with all punctuation characters removed."""
    stripped = "".join(c for c in text if not unicodedata.category(c).startswith("P"))
    return stripped.split()


def validate_punctuation(input_text: str, output_text: str) -> LlmResponse:
    """Check that output differs from input by punctuation insertion only."""
    in_tokens = _content_tokens(input_text)
    out_tokens = _content_tokens(output_text)
    for i, (a, b) in enumerate(zip(in_tokens, out_tokens)):
        if a != b:
            return LlmResponse(
                raw=output_text,
                parsed_text=output_text,
                valid=False,
                violation=f"token {i}: expected {a!r}, got {b!r}",
            )
    if len(in_tokens) != len(out_tokens):
        i = min(len(in_tokens), len(out_tokens))
        what = "missing" if len(out_tokens) < len(in_tokens) else "inserted"
        return LlmResponse(
            raw=output_text,
            parsed_text=output_text,
            valid=False,
            violation=f"token {i}: word {what}",
        )
    return LlmResponse(raw=output_text, parsed_text=output_text, valid=True)


@dataclass(frozen=True)
class ServiceConfig:
    """Endpoint configuration; mode 'fallback' never performs network I/O."""

    mode: str = "fallback"  # "service" | "fallback"
    url: str = ""
    model: str = ""
    api_key: str = ""
    temperature: float = 0.0
    timeout_s: float = 30.0
    attempts: int = 3
    backoff_s: float = 1.0
    response_path: str = "choices.0.message.content"
    payload_format: str = "json_text"  # "json_text" expects {"text": ...}; "plain" takes content verbatim
    fallback_terminator: str = "."
    max_in_flight: int = 4

    def __post_init__(self):
        if self.mode not in ("service", "fallback"):
            raise ConfigError(f"mode must be service or fallback, got {self.mode!r}")
        if self.mode == "service" and not self.url:
            raise ConfigError("service mode requires a URL")
        if self.attempts < 1:
            raise ConfigError("attempts must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        url = os.environ.get("BA_LLM_URL", "")
        cfg = cls(
            mode="service" if url else "fallback",
            url=url,
            model=os.environ.get("BA_LLM_MODEL", ""),
            api_key=os.environ.get("BA_LLM_KEY", ""),
        )
        return replace(cfg, **overrides) if overrides else cfg


def _dig(obj, dotted_path: str):
    cur = obj
    for part in dotted_path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict):
            cur = cur[part]
        else:
            raise KeyError(part)
    return cur


def _fallback_text(text: str, terminator: str) -> str:
    stripped = text.rstrip()
    if stripped and stripped[-1] in ALL_TERMINALS:
        return text
    return stripped + terminator


def call_llm(prompt: str, endpoint: ServiceConfig) -> LlmResponse:
    """Issue one request (or apply the offline fallback rule).

    In fallback mode `prompt` is treated as the bare input text: the text is
    returned unchanged unless it lacks a terminal mark, in which case the
    configured terminator is appended.
    """
    if endpoint.mode == "fallback":
        out = _fallback_text(prompt, endpoint.fallback_terminator)
        return LlmResponse(raw=out, parsed_text=out, valid=True)

    payload = json.dumps(
        {
            "model": endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": endpoint.temperature,
        }
    ).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"

    last_error: Optional[Exception] = None
    for attempt in range(endpoint.attempts):
        if attempt:
            time.sleep(endpoint.backoff_s * (2 ** (attempt - 1)))
        try:
            req = urllib.request.Request(endpoint.url, data=payload, headers=headers)
            with urllib.request.urlopen(req, timeout=endpoint.timeout_s) as resp:
                body = resp.read().decode("utf-8")
            break
        except (urllib.error.URLError, OSError) as e:
            last_error = e
    else:
        raise TransportError(f"LLM endpoint unreachable after {endpoint.attempts} attempts: {last_error}")

    try:
        content = _dig(json.loads(body), endpoint.response_path)
        if not isinstance(content, str):
            raise KeyError(endpoint.response_path)
    except (json.JSONDecodeError, KeyError, IndexError, ValueError) as e:
        raise ProtocolError(f"cannot extract {endpoint.response_path!r} from response: {e}", raw=body) from e

    if endpoint.payload_format == "plain":
        return LlmResponse(raw=content, parsed_text=content, valid=True)
    try:
        obj = json.loads(content)
        text = obj["text"]
        if not isinstance(text, str):
            raise KeyError("text")
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ProtocolError(f"response content is not {{\"text\": ...}} JSON: {e}", raw=content) from e
    return LlmResponse(raw=content, parsed_text=text, valid=True)


class LlmClient:
    """Thread-safe client with a bounded number of in-flight requests."""

    def __init__(self, endpoint: ServiceConfig, lang_meta: Optional[dict[str, LangMeta]] = None):
        self.endpoint = endpoint
        self.lang_meta = dict(DEFAULT_LANG_META) if lang_meta is None else lang_meta
        self._gate = threading.Semaphore(endpoint.max_in_flight)

    def _call(self, prompt: str, endpoint: ServiceConfig) -> LlmResponse:
        with self._gate:
            return call_llm(prompt, endpoint)

    def punctuate(self, text: str, lang: str) -> LlmResponse:
        """Restore punctuation; invalid responses fall back to the input text.

        A structurally invalid service response is flagged (valid=False with
        the violation recorded) but parsed_text degrades to the input so the
        document is never dropped here.
        """
        if lang not in self.lang_meta:
            raise ConfigError(f"no lang_meta entry for language {lang!r}")
        meta = self.lang_meta[lang]
        if self.endpoint.mode == "fallback":
            endpoint = replace(self.endpoint, fallback_terminator=meta.expected_terminator)
            return self._call(text, endpoint)
        spec = PromptSpec(task=TASK_PUNCTUATE, lang_meta=self.lang_meta)
        prompt = build_prompt(spec, text, lang)
        endpoint = replace(self.endpoint, temperature=0.0)  # punctuation restoration is deterministic by contract
        response = self._call(prompt, endpoint)
        checked = validate_punctuation(text, response.parsed_text)
        if not checked.valid:
            return LlmResponse(raw=response.raw, parsed_text=text, valid=False, violation=checked.violation)
        return LlmResponse(raw=response.raw, parsed_text=response.parsed_text, valid=True)

    def translate(self, text: str, src: str, tgt: str, colloquial: bool = False) -> LlmResponse:
        task = TASK_TRANSLATE_COLLOQUIAL if colloquial else TASK_TRANSLATE_NORMAL
        if self.endpoint.mode == "fallback":
            # Identity passthrough keeps offline pipelines runnable.
            return LlmResponse(raw=text, parsed_text=text, valid=True)
        spec = PromptSpec(task=task, lang_meta=self.lang_meta)
        prompt = build_prompt(spec, text, src, tgt)
        return self._call(prompt, self.endpoint)

    def punctuate_all(self, texts: list[str], lang: str) -> list[LlmResponse]:
        """Punctuate many texts concurrently; output order matches input order."""
        if not texts:
            return []
        with ThreadPoolExecutor(max_workers=self.endpoint.max_in_flight) as pool:
            return list(pool.map(lambda t: self.punctuate(t, lang), texts))
