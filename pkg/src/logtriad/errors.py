"""Typed errors shared across the engine.

Every domain failure raised by the library is a subclass of LogTriadError so
callers (CLI, HTTP service) can map them to exit codes / status codes without
string matching. Constructor arguments are kept structured for the same reason.
"""

from __future__ import annotations


class LogTriadError(Exception):
    """Base class for all domain errors."""

    code = "LogTriadError"

    def detail(self) -> dict:
        return {}


class MalformedRecord(LogTriadError):
    code = "MalformedRecord"

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason

    def detail(self) -> dict:
        return {"line": self.line, "reason": self.reason}


class DuplicateTemplateId(LogTriadError):
    code = "DuplicateTemplateId"

    def __init__(self, template_id: str):
        super().__init__(f"duplicate template id {template_id!r}")
        self.template_id = template_id

    def detail(self) -> dict:
        return {"template_id": self.template_id}


class EmptyFile(LogTriadError):
    code = "EmptyFile"

    def __init__(self, path: str):
        super().__init__(f"no records in {path}")
        self.path = path

    def detail(self) -> dict:
        return {"path": self.path}


class UnknownTemplateId(LogTriadError):
    code = "UnknownTemplateId"

    def __init__(self, sequence_id: str, template_id: str):
        super().__init__(
            f"sequence {sequence_id!r} references unknown template {template_id!r}"
        )
        self.sequence_id = sequence_id
        self.template_id = template_id

    def detail(self) -> dict:
        return {"sequence_id": self.sequence_id, "template_id": self.template_id}


class LabeledTrainAnomaly(LogTriadError):
    code = "LabeledTrainAnomaly"

    def __init__(self, sequence_id: str):
        super().__init__(f"train split contains anomaly-labeled sequence {sequence_id!r}")
        self.sequence_id = sequence_id

    def detail(self) -> dict:
        return {"sequence_id": self.sequence_id}


class LlmUnavailable(LogTriadError):
    code = "LlmUnavailable"


class ExtractionInvalid(LogTriadError):
    code = "ExtractionInvalid"

    def __init__(self, template_id: str, raw: str):
        super().__init__(f"could not extract entity/action/status for {template_id!r}")
        self.template_id = template_id
        self.raw = raw

    def detail(self) -> dict:
        return {"template_id": self.template_id, "raw": self.raw}


class MissingTriple(LogTriadError):
    code = "MissingTriple"

    def __init__(self, template_id: str):
        super().__init__(f"no semantic triple for template {template_id!r}")
        self.template_id = template_id

    def detail(self) -> dict:
        return {"template_id": self.template_id}


class DuplicateTriple(LogTriadError):
    code = "DuplicateTriple"

    def __init__(self, template_id: str):
        super().__init__(f"more than one semantic triple for template {template_id!r}")
        self.template_id = template_id

    def detail(self) -> dict:
        return {"template_id": self.template_id}


class UnboundTemplate(LogTriadError):
    code = "UnboundTemplate"

    def __init__(self, template_id: str):
        super().__init__(f"template {template_id!r} is not bound to a tree leaf")
        self.template_id = template_id

    def detail(self) -> dict:
        return {"template_id": self.template_id}


class EmptySequence(LogTriadError):
    code = "EmptySequence"

    def __init__(self, sequence_id: str):
        super().__init__(f"sequence {sequence_id!r} has no events")
        self.sequence_id = sequence_id

    def detail(self) -> dict:
        return {"sequence_id": self.sequence_id}


class SpanOutOfBounds(LogTriadError):
    code = "SpanOutOfBounds"

    def __init__(self, span: tuple[int, int], length: int):
        super().__init__(f"span {span} outside sequence of length {length}")
        self.span = span
        self.length = length

    def detail(self) -> dict:
        return {"span": list(self.span), "length": self.length}


class UnknownKey(LogTriadError):
    code = "UnknownKey"

    def __init__(self, key: str):
        super().__init__(f"no knowledge entry for key {key!r}")
        self.key = key

    def detail(self) -> dict:
        return {"key": self.key}


class UnknownNode(LogTriadError):
    code = "UnknownNode"

    def __init__(self, node_id: str):
        super().__init__(f"node {node_id!r} not in tree")
        self.node_id = node_id

    def detail(self) -> dict:
        return {"node_id": self.node_id}


class CorruptStore(LogTriadError):
    code = "CorruptStore"

    def __init__(self, line: int, reason: str):
        super().__init__(f"store line {line}: {reason}")
        self.line = line
        self.reason = reason

    def detail(self) -> dict:
        return {"line": self.line, "reason": self.reason}


class LlmCallBudgetExceeded(LogTriadError):
    code = "LlmCallBudgetExceeded"

    def __init__(self, cap: int):
        super().__init__(f"per-sequence LLM call budget of {cap} exhausted")
        self.cap = cap

    def detail(self) -> dict:
        return {"cap": self.cap}


class VerdictUnparseable(LogTriadError):
    code = "VerdictUnparseable"

    def __init__(self, raw: str):
        super().__init__("LLM verdict response could not be parsed")
        self.raw = raw

    def detail(self) -> dict:
        return {"raw": self.raw}


class UnlabeledCorpus(LogTriadError):
    code = "UnlabeledCorpus"

    def __init__(self, sequence_id: str):
        super().__init__(f"evaluation needs labels; sequence {sequence_id!r} has none")
        self.sequence_id = sequence_id

    def detail(self) -> dict:
        return {"sequence_id": self.sequence_id}


class TreeNotReady(LogTriadError):
    code = "TreeNotReady"

    def __init__(self):
        super().__init__("semantic tree not built yet; run hierarchy extraction first")
