"""Dynamic knowledge graph holding edited facts.

The store keeps one object per (subject, relation) pair: inserting a fact for
a pair that already holds one is a conflict, and the stale fact is removed
before the new one lands (the outcome reports it as :class:`Replaced`). That
last-writer-wins rule is what keeps multi-edit batches consistent when edits
touch the same pair twice.

Entities are first-class: every subject and object is a registered
:class:`EntityRecord`, and surface forms reach entities through a normalized
alias index. One surface form may belong to at most one entity; collisions
raise instead of guessing.

Reads are safe from many threads; mutations take an internal lock.
"""

from __future__ import annotations

import io
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator

from .errors import (
    AliasCollisionError,
    NotFoundError,
    SnapshotFormatError,
    ValidationError,
)
from .text import lookup_key, normalize_alias

EntityId = str

SNAPSHOT_FORMAT = "kg-snapshot"
SNAPSHOT_VERSION = 1

_LOCAL_PREFIX = "local:"


@dataclass(frozen=True, slots=True)
class EntityRecord:
    """A node: canonical label plus the surface forms that reach it."""

    entity_id: EntityId
    canonical_label: str
    aliases: tuple[str, ...]
    external_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.entity_id or not self.canonical_label.strip():
            raise ValidationError("entity id and canonical label must be non-empty")
        norms = {normalize_alias(a) for a in self.aliases}
        if normalize_alias(self.canonical_label) not in norms:
            raise ValidationError(
                f"canonical label {self.canonical_label!r} missing from aliases"
            )


@dataclass(frozen=True, slots=True)
class EditedFact:
    """One edited triple with provenance and insertion order."""

    subject: EntityId
    relation: str
    object: EntityId
    source_text: str = ""
    seq: int = 0

    def __post_init__(self) -> None:
        if not self.subject or not self.relation.strip() or not self.object:
            raise ValidationError("fact subject, relation and object must be non-empty")


@dataclass(frozen=True, slots=True)
class Inserted:
    """Outcome of add_fact when the (subject, relation) pair was free."""

    fact: EditedFact


@dataclass(frozen=True, slots=True)
class Replaced:
    """Outcome of add_fact when a stale fact was evicted first."""

    fact: EditedFact
    old: EditedFact


AddOutcome = Inserted | Replaced


@dataclass(slots=True)
class _Pair:
    # cdm mode keeps this list at length 1; append-only mode grows it.
    facts: list[EditedFact] = field(default_factory=list)


class KnowledgeGraph:
    """In-memory edited-fact store with alias-indexed entities.

    ``cdm=False`` switches the store to append-only mode for ablations: stale
    facts are kept and lookups return the oldest one per pair, which models
    how unresolved conflicts disrupt retrieval. The functional property
    "one object per (subject, relation)" holds only while ``cdm`` is True.
    """

    def __init__(self, cdm: bool = True) -> None:
        self.cdm = cdm
        self._entities: dict[EntityId, EntityRecord] = {}
        self._aliases: dict[str, EntityId] = {}
        self._facts: dict[EntityId, dict[str, _Pair]] = {}
        self._next_seq = 1
        self._lock = threading.Lock()

    # -- entities ---------------------------------------------------------

    def register_entity(
        self,
        label: str,
        aliases: tuple[str, ...] | list[str] = (),
        external_ref: str | None = None,
        entity_id: EntityId | None = None,
    ) -> EntityId:
        """Register a new entity and claim its aliases.

        Returns the id. Raises AliasCollisionError if any alias (including
        the label) already belongs to a different entity, ValidationError on
        an empty label.
        """
        label = label.strip()
        if not normalize_alias(label):
            raise ValidationError(f"entity label {label!r} has no content")
        surface = [label, *aliases]
        with self._lock:
            if entity_id is None:
                entity_id = _LOCAL_PREFIX + normalize_alias(label).replace(" ", "_")
            if entity_id in self._entities:
                raise ValidationError(f"entity id {entity_id!r} already registered")
            keyed: dict[str, str] = {}
            for alias in surface:
                key = normalize_alias(alias)
                if not key:
                    continue
                owner = self._aliases.get(key)
                if owner is not None and owner != entity_id:
                    raise AliasCollisionError(
                        f"alias {alias!r} already resolves to {owner!r}"
                    )
                keyed[key] = alias
            record = EntityRecord(
                entity_id=entity_id,
                canonical_label=label,
                aliases=tuple(dict.fromkeys(surface)),
                external_ref=external_ref,
            )
            self._entities[entity_id] = record
            for key in keyed:
                self._aliases[key] = entity_id
        return entity_id

    def add_alias(self, entity_id: EntityId, alias: str) -> None:
        """Attach another surface form to an existing entity."""
        key = normalize_alias(alias)
        if not key:
            raise ValidationError(f"alias {alias!r} has no content")
        with self._lock:
            record = self._require_entity(entity_id)
            owner = self._aliases.get(key)
            if owner is not None and owner != entity_id:
                raise AliasCollisionError(
                    f"alias {alias!r} already resolves to {owner!r}"
                )
            if owner is None:
                self._aliases[key] = entity_id
            if alias not in record.aliases:
                self._entities[entity_id] = EntityRecord(
                    entity_id=entity_id,
                    canonical_label=record.canonical_label,
                    aliases=record.aliases + (alias,),
                    external_ref=record.external_ref,
                )

    def set_external_ref(self, entity_id: EntityId, ref: str) -> None:
        with self._lock:
            record = self._require_entity(entity_id)
            if record.external_ref != ref:
                self._entities[entity_id] = EntityRecord(
                    entity_id=entity_id,
                    canonical_label=record.canonical_label,
                    aliases=record.aliases,
                    external_ref=ref,
                )

    def entity(self, entity_id: EntityId) -> EntityRecord:
        record = self._entities.get(entity_id)
        if record is None:
            raise NotFoundError(f"no entity {entity_id!r}")
        return record

    def label(self, entity_id: EntityId) -> str:
        return self.entity(entity_id).canonical_label

    def resolve(self, mention: str) -> EntityId | None:
        """Map a surface form to an entity id, or None.

        Falls back to the parenthetical-stripped lookup key so disambiguated
        mentions ("X (Soccer)") still reach their entity. The index itself
        stores only alias-normalized keys.
        """
        hit = self._aliases.get(normalize_alias(mention))
        if hit is not None:
            return hit
        return self._aliases.get(lookup_key(mention))

    @property
    def entity_count(self) -> int:
        return len(self._entities)

    def entities(self) -> Iterator[EntityRecord]:
        return iter(list(self._entities.values()))

    # -- facts ------------------------------------------------------------

    def add_fact(
        self,
        subject: EntityId,
        relation: str,
        object: EntityId,
        *,
        source: str = "",
    ) -> AddOutcome:
        """Insert (subject, relation, object), evicting any conflicting fact.

        Returns Inserted, or Replaced carrying the evicted fact. Both ends
        must be registered entities. In append-only mode nothing is evicted
        and the outcome is always Inserted.
        """
        relation = relation.strip()
        with self._lock:
            self._require_entity(subject)
            self._require_entity(object)
            fact = EditedFact(
                subject=subject,
                relation=relation,
                object=object,
                source_text=source,
                seq=self._next_seq,
            )
            self._next_seq += 1
            pair = self._facts.setdefault(subject, {}).setdefault(relation, _Pair())
            if self.cdm and pair.facts:
                old = pair.facts[0]
                pair.facts = [fact]
                return Replaced(fact=fact, old=old)
            pair.facts.append(fact)
            return Inserted(fact=fact)

    def remove_fact(self, subject: EntityId, relation: str) -> EditedFact:
        """Remove the fact stored under (subject, relation) and return it.

        Raises NotFoundError if the pair holds nothing. In append-only mode
        the whole pair is dropped and the oldest fact is returned.
        """
        with self._lock:
            by_rel = self._facts.get(subject)
            pair = by_rel.get(relation.strip()) if by_rel else None
            if pair is None or not pair.facts:
                raise NotFoundError(f"no fact for ({subject!r}, {relation!r})")
            fact = pair.facts[0]
            del by_rel[relation.strip()]
            if not by_rel:
                del self._facts[subject]
            return fact

    def contains_subject(self, subject: EntityId) -> bool:
        return bool(self._facts.get(subject))

    def relations_of(self, subject: EntityId) -> set[str]:
        by_rel = self._facts.get(subject)
        return set(by_rel) if by_rel else set()

    def object_of(self, subject: EntityId, relation: str) -> EntityId | None:
        by_rel = self._facts.get(subject)
        pair = by_rel.get(relation.strip()) if by_rel else None
        if pair is None or not pair.facts:
            return None
        return pair.facts[0].object

    def get_fact(self, subject: EntityId, relation: str) -> EditedFact | None:
        by_rel = self._facts.get(subject)
        pair = by_rel.get(relation.strip()) if by_rel else None
        if pair is None or not pair.facts:
            return None
        return pair.facts[0]

    def facts(self) -> list[EditedFact]:
        """All stored facts in insertion order."""
        out = [f for by_rel in self._facts.values() for p in by_rel.values() for f in p.facts]
        out.sort(key=lambda f: f.seq)
        return out

    def __len__(self) -> int:
        return sum(len(p.facts) for by_rel in self._facts.values() for p in by_rel.values())

    def _require_entity(self, entity_id: EntityId) -> EntityRecord:
        record = self._entities.get(entity_id)
        if record is None:
            raise ValidationError(f"unregistered entity {entity_id!r}")
        return record

    # -- snapshots --------------------------------------------------------

    def snapshot(self, stream: IO[str]) -> None:
        """Write the graph as line-delimited JSON: header, entities, facts."""
        header = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "cdm": self.cdm,
            "next_seq": self._next_seq,
        }
        stream.write(json.dumps(header, sort_keys=True) + "\n")
        for record in sorted(self._entities.values(), key=lambda r: r.entity_id):
            stream.write(
                json.dumps(
                    {
                        "id": record.entity_id,
                        "label": record.canonical_label,
                        "aliases": list(record.aliases),
                        "external_ref": record.external_ref,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
        for fact in self.facts():
            stream.write(
                json.dumps(
                    {
                        "s": fact.subject,
                        "r": fact.relation,
                        "o": fact.object,
                        "src": fact.source_text,
                        "seq": fact.seq,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )

    def snapshot_to_path(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.snapshot(fh)

    def snapshot_text(self) -> str:
        buf = io.StringIO()
        self.snapshot(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, stream: IO[str]) -> "KnowledgeGraph":
        """Rebuild a graph from a snapshot stream.

        Raises SnapshotFormatError on anything that is not a well-formed
        snapshot: bad JSON, missing or wrong header, unknown record shapes,
        or facts pointing at unregistered entities.
        """
        lines = stream.read().splitlines()
        if not lines:
            raise SnapshotFormatError("empty snapshot stream")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise SnapshotFormatError(f"unreadable snapshot header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotFormatError("stream is not a kg-snapshot")
        if header.get("version") != SNAPSHOT_VERSION:
            raise SnapshotFormatError(
                f"unsupported snapshot version {header.get('version')!r}"
            )
        graph = cls(cdm=bool(header.get("cdm", True)))
        max_seq = 0
        pending: list[dict] = []
        for lineno, raw in enumerate(lines[1:], start=2):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SnapshotFormatError(f"line {lineno}: bad record: {exc}") from exc
            if not isinstance(obj, dict):
                raise SnapshotFormatError(f"line {lineno}: record is not an object")
            if "id" in obj:
                try:
                    graph.register_entity(
                        label=obj["label"],
                        aliases=tuple(obj.get("aliases") or ()),
                        external_ref=obj.get("external_ref"),
                        entity_id=obj["id"],
                    )
                except (KeyError, TypeError, AttributeError, ValidationError, AliasCollisionError) as exc:
                    raise SnapshotFormatError(f"line {lineno}: bad entity: {exc}") from exc
            elif "s" in obj:
                pending.append(obj)
            else:
                raise SnapshotFormatError(f"line {lineno}: unknown record shape")
        pending.sort(key=lambda o: o.get("seq", 0))
        for obj in pending:
            try:
                outcome = graph.add_fact(
                    obj["s"], obj["r"], obj["o"], source=obj.get("src", "")
                )
                seq = int(obj["seq"])
            except (KeyError, TypeError, ValueError, AttributeError, ValidationError) as exc:
                raise SnapshotFormatError(f"bad fact record {obj!r}: {exc}") from exc
            # Preserve original sequence numbers across the round-trip.
            pair = graph._facts[obj["s"]][obj["r"].strip()]
            pair.facts[-1] = EditedFact(
                subject=outcome.fact.subject,
                relation=outcome.fact.relation,
                object=outcome.fact.object,
                source_text=outcome.fact.source_text,
                seq=seq,
            )
            max_seq = max(max_seq, seq)
        graph._next_seq = max(int(header.get("next_seq", 1)), max_seq + 1)
        return graph

    @classmethod
    def load_path(cls, path: str | Path) -> "KnowledgeGraph":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.load(fh)
        except OSError as exc:
            raise SnapshotFormatError(f"cannot read snapshot {path}: {exc}") from exc
