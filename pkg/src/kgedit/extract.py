"""Turning edit statements into graph facts.

Three extractors share one interface:

* :class:`StructuredExtractor` reads the structured rewrite attached to a
  statement (exact; what evaluation uses).
* :class:`PatternExtractor` matches cloze-style edit sentences ("X was
  created in the country of Y") against an editable template table and emits
  companion inverse triples ("Y has sport X") for relations listed in the
  inverse table.
* :class:`RemoteExtractor` posts the raw text to an extraction service.

``ingest_edits`` drives any of them over a batch of statements with partial
success: every failure is recorded with its reason, and
``inserted + replaced + len(failures) == attempted`` always holds (a
statement that dies before producing triples counts as one attempted unit).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from . import kvconfig
from .errors import ExtractionError, KGEditError, LinkingError, ValidationError
from .graph import EntityId, Inserted, KnowledgeGraph, Replaced
from .text import normalize_alias

logger = logging.getLogger(__name__)

DEFAULT_PATTERNS_FILE = "patterns.txt"
DEFAULT_INVERSES_FILE = "inverses.txt"

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+(?=[A-Z(\"'])")


@dataclass(frozen=True, slots=True)
class StructuredEdit:
    """A rewrite given as fields instead of prose."""

    subject: str
    relation: str
    old_object: str
    new_object: str


@dataclass(frozen=True, slots=True)
class EditStatement:
    """One edit to apply: free text, a structured rewrite, or both."""

    text: str = ""
    hint: StructuredEdit | None = None

    def describe(self) -> str:
        if self.text:
            return self.text
        if self.hint:
            return f"{self.hint.subject} / {self.hint.relation} -> {self.hint.new_object}"
        return "<empty statement>"


@dataclass(frozen=True, slots=True)
class ExtractedTriple:
    subject: str
    relation: str
    object: str


@dataclass(slots=True)
class IngestReport:
    """Outcome tally for one ingest run."""

    attempted: int = 0
    inserted: int = 0
    replaced: int = 0
    failures: list[tuple[EditStatement, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return (
            f"inserted {self.inserted}, replaced {self.replaced}, "
            f"failed {len(self.failures)} (attempted {self.attempted})"
        )


class TripleExtractor(Protocol):
    def extract(self, statement: EditStatement) -> list[ExtractedTriple]: ...


class StructuredExtractor:
    """Exact extractor over statements that carry a structured rewrite."""

    def extract(self, statement: EditStatement) -> list[ExtractedTriple]:
        hint = statement.hint
        if hint is None:
            raise ExtractionError("statement has no structured rewrite")
        for name in ("subject", "relation", "new_object"):
            if not getattr(hint, name).strip():
                raise ExtractionError(f"structured rewrite with empty {name}")
        return [
            ExtractedTriple(
                subject=hint.subject, relation=hint.relation, object=hint.new_object
            )
        ]


class PatternExtractor:
    """Template matcher for cloze-style edit sentences.

    Patterns come from a key-value table mapping relation label to a template
    with ``{s}`` and ``{o}`` slots; the first matching template wins per
    sentence. Relations present in the inverse table additionally emit the
    companion triple (object, inverse-relation, subject). A sentence matching
    no template fails the whole statement so dropped edits stay visible.
    """

    def __init__(
        self,
        patterns: list[tuple[str, str]] | None = None,
        inverses: dict[str, str] | None = None,
    ) -> None:
        if patterns is None:
            patterns = kvconfig.packaged_kv_multi(DEFAULT_PATTERNS_FILE)
        if inverses is None:
            inverses = dict(kvconfig.packaged_kv_multi(DEFAULT_INVERSES_FILE))
        self.inverses = inverses
        self._compiled: list[tuple[str, re.Pattern[str]]] = []
        for relation, template in patterns:
            self._compiled.append((relation, _compile_template(relation, template)))

    def extract(self, statement: EditStatement) -> list[ExtractedTriple]:
        text = statement.text.strip()
        if not text:
            raise ExtractionError("statement has no text to match")
        triples: list[ExtractedTriple] = []
        for sentence in _split_sentences(text):
            matched = False
            for relation, pattern in self._compiled:
                m = pattern.match(sentence)
                if not m:
                    continue
                subject = m.group("s").strip()
                obj = m.group("o").strip()
                if not subject or not obj:
                    continue
                triples.append(ExtractedTriple(subject, relation, obj))
                inverse = self.inverses.get(relation)
                if inverse:
                    triples.append(ExtractedTriple(obj, inverse, subject))
                matched = True
                break
            if not matched:
                raise ExtractionError(f"no pattern matched: {sentence!r}")
        return triples


class RemoteExtractor:
    """Extraction service client: POST {"text": ...} -> {"triples": [...]}."""

    def __init__(self, endpoint: str, timeout: float = 30.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def extract(self, statement: EditStatement) -> list[ExtractedTriple]:
        import requests

        text = statement.text.strip()
        if not text:
            raise ExtractionError("statement has no text to send")
        try:
            resp = requests.post(
                self.endpoint, json={"text": text}, timeout=self.timeout
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ExtractionError(f"extraction service failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ExtractionError(f"extraction service returned bad JSON: {exc}") from exc
        triples = payload.get("triples") if isinstance(payload, dict) else None
        if not isinstance(triples, list):
            raise ExtractionError("extraction service response missing 'triples'")
        out: list[ExtractedTriple] = []
        for item in triples:
            try:
                out.append(ExtractedTriple(item["s"], item["r"], item["o"]))
            except (KeyError, TypeError) as exc:
                raise ExtractionError(f"bad triple in response: {item!r}") from exc
        return out


class AutoExtractor:
    """Dispatch: structured rewrite when present, pattern matching otherwise."""

    def __init__(self, pattern_extractor: PatternExtractor | None = None) -> None:
        self.structured = StructuredExtractor()
        self.patterns = pattern_extractor or PatternExtractor()

    def extract(self, statement: EditStatement) -> list[ExtractedTriple]:
        if statement.hint is not None:
            return self.structured.extract(statement)
        return self.patterns.extract(statement)


def _compile_template(relation: str, template: str) -> re.Pattern[str]:
    if "{s}" not in template or "{o}" not in template:
        raise ValidationError(
            f"pattern for {relation!r} must contain {{s}} and {{o}}: {template!r}"
        )
    escaped = re.escape(template)
    escaped = escaped.replace(re.escape("{s}"), r"(?P<s>.+?)")
    escaped = escaped.replace(re.escape("{o}"), r"(?P<o>.+?)")
    return re.compile(rf"^\s*{escaped}\s*[.!?]?\s*$", re.IGNORECASE)


def _split_sentences(text: str) -> list[str]:
    parts = [p.strip() for p in _SENTENCE_SPLIT.split(text)]
    return [p for p in parts if p]


class KBClient(Protocol):
    """Optional external KB: mention -> (id, label, aliases) or None."""

    def lookup(self, mention: str) -> tuple[str, str, tuple[str, ...]] | None: ...


def link_entity(
    graph: KnowledgeGraph,
    mention: str,
    kb: KBClient | None = None,
) -> EntityId:
    """Resolve a mention to an entity id, creating the entity if needed.

    Resolution order: the graph's alias index, then the external KB when one
    is configured, then a locally synthesized entity. Two mentions that
    normalize to the same alias always land on the same id.
    """
    mention = mention.strip()
    if not normalize_alias(mention):
        raise ValidationError(f"mention {mention!r} has no content")
    found = graph.resolve(mention)
    if found is not None:
        return found
    if kb is not None:
        try:
            hit = kb.lookup(mention)
        except KGEditError:
            raise
        except Exception as exc:  # noqa: BLE001 - KB clients are third-party
            raise LinkingError(f"KB lookup failed for {mention!r}: {exc}") from exc
        if hit is not None:
            ref, label, aliases = hit
            existing = graph.resolve(label)
            if existing is not None:
                graph.add_alias(existing, mention)
                return existing
            alias_set = tuple(dict.fromkeys((*aliases, mention)))
            return graph.register_entity(
                label=label, aliases=alias_set, external_ref=ref
            )
    return graph.register_entity(label=mention)


def ingest_edits(
    graph: KnowledgeGraph,
    statements: list[EditStatement],
    extractor: TripleExtractor | None = None,
    kb: KBClient | None = None,
) -> IngestReport:
    """Apply a batch of edit statements with partial success.

    Each extracted triple is linked and inserted; conflicts resolve via the
    graph's replacement rule. A statement that fails extraction, or a triple
    that fails linking or insertion, is recorded in the report and the batch
    continues.
    """
    extractor = extractor or AutoExtractor()
    report = IngestReport()
    for statement in statements:
        try:
            triples = extractor.extract(statement)
        except KGEditError as exc:
            report.attempted += 1
            report.failures.append((statement, str(exc)))
            continue
        for triple in triples:
            report.attempted += 1
            try:
                sid = link_entity(graph, triple.subject, kb)
                oid = link_entity(graph, triple.object, kb)
                source = statement.text or statement.describe()
                outcome = graph.add_fact(sid, triple.relation, oid, source=source)
            except KGEditError as exc:
                report.failures.append(
                    (statement, f"({triple.subject}, {triple.relation}): {exc}")
                )
                continue
            if isinstance(outcome, Replaced):
                report.replaced += 1
            else:
                assert isinstance(outcome, Inserted)
                report.inserted += 1
    return report


def read_edit_statements(
    path: str | Path,
) -> tuple[list[EditStatement], list[tuple[int, str]]]:
    """Read a line-delimited JSON edit file.

    Each line is either {"text": ...} or {"s", "r", "o_old", "o_new"}.
    Returns (statements, line_errors); malformed lines are reported, not
    fatal, so one bad line cannot sink a batch.
    """
    statements: list[EditStatement] = []
    line_errors: list[tuple[int, str]] = []
    raw = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            line_errors.append((lineno, f"bad JSON: {exc}"))
            continue
        if not isinstance(obj, dict):
            line_errors.append((lineno, "line is not an object"))
            continue
        if "s" in obj:
            try:
                statements.append(
                    EditStatement(
                        text=str(obj.get("text", "")),
                        hint=StructuredEdit(
                            subject=str(obj["s"]),
                            relation=str(obj["r"]),
                            old_object=str(obj.get("o_old", "")),
                            new_object=str(obj["o_new"]),
                        ),
                    )
                )
            except KeyError as exc:
                line_errors.append((lineno, f"missing field {exc}"))
        elif "text" in obj:
            statements.append(EditStatement(text=str(obj["text"])))
        else:
            line_errors.append((lineno, "expected 'text' or structured fields"))
    return statements, line_errors
