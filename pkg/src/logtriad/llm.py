"""LLM clients: live chat-completion endpoint plus deterministic offline doubles.

All clients share two operations and expose call counters for tests:

* ``extract(template_id, text)``  -> entity/action/status fields
* ``verify(request)``             -> normal/anomaly verdict with explanation

The live client talks to one chat-completion-style endpoint configured through
environment variables (LOGTRIAD_LLM_BASE_URL, LOGTRIAD_LLM_MODEL,
LOGTRIAD_LLM_API_KEY) and retries a malformed response once before giving up.
Fixture and static clients never touch the network.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Label
from .errors import ExtractionInvalid, LlmUnavailable, VerdictUnparseable

logger = logging.getLogger(__name__)

ENV_BASE_URL = "LOGTRIAD_LLM_BASE_URL"
ENV_MODEL = "LOGTRIAD_LLM_MODEL"
ENV_API_KEY = "LOGTRIAD_LLM_API_KEY"


@dataclass(frozen=True)
class ExtractionResult:
    entity: str
    action: str
    status: str
    raw: str = ""


@dataclass(frozen=True)
class VerifyRequest:
    """Everything the verifier needs: scope, the unit under test, k normals."""

    key: str  # canonical scope key, also the fixture lookup key
    scope_description: str
    rendered_sequence: str
    examples: tuple[str, ...]


@dataclass(frozen=True)
class VerdictResult:
    label: Label
    explanation: str
    raw: str = ""


@dataclass
class CallCounters:
    extract_calls: int = 0
    verify_calls: int = 0


class StaticVerdictLlm:
    """Offline double that answers every verification with a fixed verdict."""

    def __init__(self, label: Label, explanation: str):
        self._label = label
        self._explanation = explanation
        self.counters = CallCounters()

    def extract(self, template_id: str, text: str) -> ExtractionResult:
        raise LlmUnavailable("static verdict client cannot extract semantics")

    def verify(self, request: VerifyRequest) -> VerdictResult:
        self.counters.verify_calls += 1
        return VerdictResult(label=self._label, explanation=self._explanation)


def always_anomaly_llm() -> StaticVerdictLlm:
    return StaticVerdictLlm(Label.ANOMALY, "mock: flagged")


def always_normal_llm() -> StaticVerdictLlm:
    return StaticVerdictLlm(Label.NORMAL, "mock: cleared")


class FixtureLlm:
    """Canned responses: extraction keyed by template id, verdicts by scope key."""

    def __init__(
        self,
        extraction: dict[str, tuple[str, str, str]] | None = None,
        verdicts: dict[str, tuple[str, str]] | None = None,
    ):
        self.extraction = extraction or {}
        self.verdicts = verdicts or {}
        self.counters = CallCounters()

    def extract(self, template_id: str, text: str) -> ExtractionResult:
        self.counters.extract_calls += 1
        if template_id not in self.extraction:
            raise LlmUnavailable(f"extraction fixture has no entry for {template_id!r}")
        entity, action, status = self.extraction[template_id]
        return ExtractionResult(entity=entity, action=action, status=status, raw="fixture")

    def verify(self, request: VerifyRequest) -> VerdictResult:
        self.counters.verify_calls += 1
        if request.key not in self.verdicts:
            raise LlmUnavailable(f"verdict fixture has no entry for key {request.key!r}")
        label, explanation = self.verdicts[request.key]
        return VerdictResult(label=Label(label), explanation=explanation, raw="fixture")


def load_verdict_fixture(path: str | Path) -> dict[str, tuple[str, str]]:
    """Read a JSONL file of {"key", "label", "explanation"} records."""
    verdicts: dict[str, tuple[str, str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        verdicts[record["key"]] = (record["label"], record.get("explanation", ""))
    return verdicts


# --- live endpoint ------------------------------------------------------------

EXTRACT_PROMPT = """\
A log template names a system component (entity), an operation on it (action),
and the operation's outcome (status). Identify the three for this template and
answer with exactly three lines inside a fenced block:

```
entity: <one short phrase>
action: <one short phrase>
status: <one short phrase>
```

Template: {text}
"""

VERIFY_PROMPT = """\
You are checking one execution unit of a log sequence against its known-normal
behavior. Scope: {scope}.

Known normal units in this scope:
{examples}

Unit under test: {sequence}

Answer with a first line of exactly `verdict: normal` or `verdict: anomaly`,
then a short explanation on the following lines.
"""

_FENCED = re.compile(r"```(?:[a-z]*\n)?(.*?)```", re.DOTALL)
_FIELD = re.compile(r"^(entity|action|status)\s*:\s*(.+)$", re.MULTILINE | re.IGNORECASE)
_VERDICT = re.compile(r"verdict\s*:\s*(normal|anomaly)", re.IGNORECASE)


def parse_extraction_response(raw: str) -> ExtractionResult | None:
    block = _FENCED.search(raw)
    scope = block.group(1) if block else raw
    fields = {m.group(1).lower(): m.group(2).strip() for m in _FIELD.finditer(scope)}
    if {"entity", "action", "status"} <= fields.keys() and all(fields.values()):
        return ExtractionResult(fields["entity"], fields["action"], fields["status"], raw=raw)
    return None


def parse_verdict_response(raw: str) -> VerdictResult | None:
    match = _VERDICT.search(raw)
    if not match:
        return None
    label = Label.NORMAL if match.group(1).lower() == "normal" else Label.ANOMALY
    explanation = raw[match.end():].strip().lstrip(".:,;\n ").strip()
    return VerdictResult(label=label, explanation=explanation, raw=raw)


class LiveLlm:
    """Chat-completion client with one parse retry and optional audit logging."""

    def __init__(self, base_url: str, model: str, api_key: str = "", audit: bool = False, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.audit = audit
        self.timeout = timeout
        self.counters = CallCounters()

    @classmethod
    def from_env(cls, audit: bool = False) -> "LiveLlm | None":
        base_url = os.environ.get(ENV_BASE_URL)
        model = os.environ.get(ENV_MODEL)
        if not base_url or not model:
            return None
        return cls(base_url, model, api_key=os.environ.get(ENV_API_KEY, ""), audit=audit)

    def _complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        if self.audit:
            logger.info("llm request: %s", json.dumps(body, ensure_ascii=False))
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            payload = response.json()
        except Exception as exc:
            raise LlmUnavailable(str(exc)) from exc
        if self.audit:
            logger.info("llm response: %s", json.dumps(payload, ensure_ascii=False))
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmUnavailable(f"unexpected completion payload: {exc}") from exc

    def extract(self, template_id: str, text: str) -> ExtractionResult:
        prompt = EXTRACT_PROMPT.format(text=text)
        raw = ""
        for attempt in range(2):  # one retry on parse failure
            self.counters.extract_calls += 1
            raw = self._complete(prompt if attempt == 0 else prompt + "\nAnswer with the fenced block only.")
            result = parse_extraction_response(raw)
            if result is not None:
                return result
        raise ExtractionInvalid(template_id, raw)

    def verify(self, request: VerifyRequest) -> VerdictResult:
        examples = "\n".join(f"- {ex}" for ex in request.examples) or "(no examples available)"
        prompt = VERIFY_PROMPT.format(
            scope=request.scope_description,
            examples=examples,
            sequence=request.rendered_sequence,
        )
        raw = ""
        for attempt in range(2):
            self.counters.verify_calls += 1
            raw = self._complete(prompt if attempt == 0 else prompt + "\nStart with the verdict line.")
            result = parse_verdict_response(raw)
            if result is not None:
                return result
        raise VerdictUnparseable(raw)
