"""MQUAKE-format datasets: loading, batching, evaluation, exporters.

A case carries a multi-hop question (several phrasings), the requested
knowledge rewrites, the original single-hop chain and the post-edit chain
whose final answer is the evaluation target. Cases are pooled into edit
batches (k = 1, 100 or all, contiguous in file order), each batch's rewrites
are ingested into a fresh graph, and every case in the batch is answered
against that shared graph.

Two accuracies are reported: multi-hop accuracy (final answer matches the
new answer or an alias, any phrasing) and hop-wise accuracy (every hop of
the first successful phrasing matches the post-edit gold chain). Hop-wise
accuracy can never exceed multi-hop accuracy; the report enforces that.

The exporters emit the training-style record files for entity detection,
relation detection and decomposition described by the harness contract.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import kvconfig
from .backends import Backend
from .decompose import scripted_decompose
from .detect import Detectors, propose_entities
from .errors import AliasCollisionError, DataError, KGEditError, ValidationError
from .extract import (
    EditStatement,
    IngestReport,
    StructuredEdit,
    StructuredExtractor,
    ingest_edits,
)
from .graph import KnowledgeGraph
from .pipeline import AnswerRecord, PipelineConfig, answer_multihop
from .text import lookup_key, normalize_answer

logger = logging.getLogger(__name__)

RELATION_IDS_FILE = "relation_ids.txt"


# -- dataset types ----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class RewriteSpec:
    """One requested knowledge rewrite."""

    subject: str
    relation: str
    old_object: str
    new_object: str
    relation_id: str = ""
    new_object_ref: str = ""


@dataclass(frozen=True, slots=True)
class HopSpec:
    """One link of a single-hop chain."""

    question: str
    answer: str
    aliases: tuple[str, ...] = ()
    cloze: str = ""


@dataclass(frozen=True, slots=True)
class MQuakeCase:
    """One evaluation case in the public layout."""

    case_id: int
    questions: tuple[str, ...]
    rewrites: tuple[RewriteSpec, ...]
    original_hops: tuple[HopSpec, ...]
    new_hops: tuple[HopSpec, ...]
    answer: str
    answer_aliases: tuple[str, ...]
    new_answer: str
    new_answer_aliases: tuple[str, ...]

    @property
    def hop_count(self) -> int:
        return len(self.new_hops)

    @property
    def edit_count(self) -> int:
        return len(self.rewrites)


# -- loading ----------------------------------------------------------------


def _relation_label_table() -> dict[str, str]:
    return dict(kvconfig.packaged_kv_multi(RELATION_IDS_FILE))


def _label_from_prompt(prompt: str) -> str:
    from .text import STOPWORDS

    words = [
        w
        for w in prompt.replace("{}", " ").split()
        if w.strip(".,?:").casefold() not in STOPWORDS and w.strip(".,?:")
    ]
    return " ".join(w.strip(".,?:").casefold() for w in words)


def _require(obj: dict, key: str, case_ref: str):
    if key not in obj:
        raise DataError(f"case {case_ref}: missing field {key!r}")
    return obj[key]


def _parse_hop(obj: dict, case_ref: str, chain: str, index: int) -> HopSpec:
    if not isinstance(obj, dict):
        raise DataError(f"case {case_ref}: {chain}[{index}] is not an object")
    ref = f"{case_ref} ({chain}[{index}])"
    question = _require(obj, "question", ref)
    answer = _require(obj, "answer", ref)
    if not isinstance(question, str) or not question.strip():
        raise DataError(f"case {ref}: field 'question' must be non-empty text")
    if not isinstance(answer, str) or not answer.strip():
        raise DataError(f"case {ref}: field 'answer' must be non-empty text")
    aliases = obj.get("answer_alias") or ()
    if isinstance(aliases, str):
        aliases = (aliases,)
    return HopSpec(
        question=question,
        answer=answer,
        aliases=tuple(str(a) for a in aliases),
        cloze=str(obj.get("cloze", "")),
    )


def _parse_rewrite(obj: dict, case_ref: str, index: int, labels: dict[str, str]) -> RewriteSpec:
    ref = f"{case_ref} (requested_rewrite[{index}])"
    if not isinstance(obj, dict):
        raise DataError(f"case {ref}: rewrite is not an object")
    subject = _require(obj, "subject", ref)
    target_new = _require(obj, "target_new", ref)
    target_true = obj.get("target_true") or {}
    if not isinstance(target_new, dict) or "str" not in target_new:
        raise DataError(f"case {ref}: field 'target_new' must carry 'str'")
    relation_id = str(obj.get("relation_id", ""))
    relation = labels.get(relation_id, "")
    if not relation:
        relation = _label_from_prompt(str(obj.get("prompt", ""))) or relation_id
    if not relation:
        raise DataError(f"case {ref}: cannot determine a relation label")
    return RewriteSpec(
        subject=str(subject),
        relation=relation,
        old_object=str(target_true.get("str", "")),
        new_object=str(target_new["str"]),
        relation_id=relation_id,
        new_object_ref=str(target_new.get("id", "")),
    )


def load_dataset(path: str | Path) -> list[MQuakeCase]:
    """Load a dataset file in the public MQUAKE JSON layout.

    Schema violations raise DataError naming the offending case and field.
    Broken answer-to-subject cascades are survivable: they are logged here
    and re-flagged by golden_path, but the case still loads.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"dataset {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise DataError(f"dataset {path} must be a JSON array of cases")
    labels = _relation_label_table()
    cases: list[MQuakeCase] = []
    for idx, raw in enumerate(payload):
        case_ref = str(raw.get("case_id", f"#{idx}")) if isinstance(raw, dict) else f"#{idx}"
        if not isinstance(raw, dict):
            raise DataError(f"case {case_ref}: not an object")
        questions = _require(raw, "questions", case_ref)
        if isinstance(questions, str):
            questions = [questions]
        if not isinstance(questions, list) or not questions:
            raise DataError(f"case {case_ref}: field 'questions' must be a non-empty list")
        rewrites = tuple(
            _parse_rewrite(rw, case_ref, i, labels)
            for i, rw in enumerate(_require(raw, "requested_rewrite", case_ref))
        )
        new_hops = tuple(
            _parse_hop(h, case_ref, "new_single_hops", i)
            for i, h in enumerate(_require(raw, "new_single_hops", case_ref))
        )
        original_hops = tuple(
            _parse_hop(h, case_ref, "single_hops", i)
            for i, h in enumerate(raw.get("single_hops") or ())
        )
        if not 2 <= len(new_hops) <= 4:
            raise DataError(
                f"case {case_ref}: field 'new_single_hops' must have 2-4 hops, "
                f"got {len(new_hops)}"
            )
        if not 1 <= len(rewrites) <= 4:
            raise DataError(
                f"case {case_ref}: field 'requested_rewrite' must have 1-4 "
                f"rewrites, got {len(rewrites)}"
            )
        aliases = raw.get("answer_alias") or ()
        new_aliases = raw.get("new_answer_alias") or ()
        case = MQuakeCase(
            case_id=int(raw.get("case_id", idx)),
            questions=tuple(str(q) for q in questions),
            rewrites=rewrites,
            original_hops=original_hops,
            new_hops=new_hops,
            answer=str(raw.get("answer", "")),
            answer_aliases=tuple(str(a) for a in aliases),
            new_answer=str(_require(raw, "new_answer", case_ref)),
            new_answer_aliases=tuple(str(a) for a in new_aliases),
        )
        for warning in check_cascade(case):
            logger.warning("dataset %s: %s", path.name, warning)
        cases.append(case)
    return cases


def dataset_summary(cases: Sequence[MQuakeCase]) -> dict:
    """Counts by hop depth and by edit count, for loader verification."""
    by_hops: dict[int, int] = {}
    by_edits: dict[int, int] = {}
    for case in cases:
        by_hops[case.hop_count] = by_hops.get(case.hop_count, 0) + 1
        by_edits[case.edit_count] = by_edits.get(case.edit_count, 0) + 1
    return {
        "total": len(cases),
        "by_hops": dict(sorted(by_hops.items())),
        "by_edits": dict(sorted(by_edits.items())),
    }


# -- golden path and matching ------------------------------------------------


def check_cascade(case: MQuakeCase) -> list[str]:
    """Cascade consistency: hop i's answer must appear in hop i+1's question."""
    warnings = []
    for i in range(1, len(case.new_hops)):
        prev = case.new_hops[i - 1]
        question = case.new_hops[i].question
        forms = [prev.answer, *prev.aliases]
        if not any(
            re.search(re.escape(f), question, re.IGNORECASE) for f in forms if f.strip()
        ):
            warnings.append(
                f"case {case.case_id}: hop {i + 1} question does not mention hop "
                f"{i}'s answer {prev.answer!r}"
            )
    return warnings


def golden_path(case: MQuakeCase) -> list[HopSpec]:
    """The post-edit gold chain: question, answer and aliases per hop.

    Hops without an applicable edit keep their original answers (the chain
    already reflects that). Broken cascades are logged as data-integrity
    warnings; the case stays usable.
    """
    for warning in check_cascade(case):
        logger.warning("golden path: %s", warning)
    return list(case.new_hops)


def _forms(s: str) -> set[str]:
    return {normalize_answer(s), lookup_key(s)} - {""}


def match_answer(predicted: str, gold: str, aliases: Sequence[str] = ()) -> bool:
    """Normalized comparison of a predicted answer against gold + aliases."""
    pred = _forms(predicted)
    if not pred:
        return False
    for candidate in (gold, *aliases):
        if pred & _forms(candidate):
            return True
    return False


# -- batching ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EditBatchSpec:
    """Batch size k; None means one batch holding every case."""

    k: int | None = None

    def __post_init__(self) -> None:
        if self.k is not None and self.k < 1:
            raise ValidationError(f"batch size must be >= 1, got {self.k}")

    @classmethod
    def parse(cls, value: str) -> "EditBatchSpec":
        value = value.strip().lower()
        if value == "all":
            return cls(k=None)
        try:
            return cls(k=int(value))
        except ValueError as exc:
            raise ValidationError(f"bad batch size {value!r}: use an integer or 'all'") from exc

    @property
    def label(self) -> str:
        return "all" if self.k is None else str(self.k)


@dataclass(frozen=True, slots=True)
class EditBatch:
    index: int
    cases: tuple[MQuakeCase, ...]

    @property
    def edits(self) -> list[RewriteSpec]:
        return [rw for case in self.cases for rw in case.rewrites]


def partition_batches(
    cases: Sequence[MQuakeCase], spec: EditBatchSpec
) -> list[EditBatch]:
    """Contiguous groups of k cases in file order; the tail may be short."""
    k = spec.k if spec.k is not None else max(len(cases), 1)
    return [
        EditBatch(index=i // k, cases=tuple(cases[i : i + k]))
        for i in range(0, len(cases), k)
    ]


# -- graph and oracle construction --------------------------------------------


def statements_from_rewrites(edits: Iterable[RewriteSpec]) -> list[EditStatement]:
    return [
        EditStatement(
            hint=StructuredEdit(
                subject=e.subject,
                relation=e.relation,
                old_object=e.old_object,
                new_object=e.new_object,
            )
        )
        for e in edits
    ]


def build_graph(
    edits: Sequence[RewriteSpec],
    cases: Sequence[MQuakeCase] = (),
    *,
    cdm: bool = True,
) -> tuple[KnowledgeGraph, IngestReport]:
    """Ingest a batch's rewrites into a fresh graph.

    Dataset alias lists are seeded onto entities the edits created so that
    subject resolution sees the same surface forms the gold answers use;
    colliding seed aliases are skipped with a warning (the loud-collision
    rule stays in force for the primary links).
    """
    graph = KnowledgeGraph(cdm=cdm)
    report = ingest_edits(graph, statements_from_rewrites(edits), StructuredExtractor())
    for edit in edits:
        if edit.new_object_ref:
            eid = graph.resolve(edit.new_object)
            if eid is not None:
                graph.set_external_ref(eid, edit.new_object_ref)
    for case in cases:
        seeds = list(case.original_hops) + list(case.new_hops)
        for hop in seeds:
            eid = graph.resolve(hop.answer)
            if eid is None:
                continue
            for alias in hop.aliases:
                _seed_alias(graph, eid, alias)
        eid = graph.resolve(case.new_answer)
        if eid is not None:
            for alias in case.new_answer_aliases:
                _seed_alias(graph, eid, alias)
    return graph, report


def _seed_alias(graph: KnowledgeGraph, entity_id: str, alias: str) -> None:
    try:
        graph.add_alias(entity_id, alias)
    except AliasCollisionError as exc:
        logger.warning("skipping seed alias %r: %s", alias, exc)
    except ValidationError:
        pass


def _hop_is_edited(hop: HopSpec, case: MQuakeCase) -> bool:
    for rw in case.rewrites:
        if match_answer(rw.new_object, hop.answer, hop.aliases) and re.search(
            re.escape(rw.subject), hop.question, re.IGNORECASE
        ):
            return True
    return False


def build_oracle(
    cases: Sequence[MQuakeCase], world: str = "post_edit"
) -> dict[str, str]:
    """Question -> answer table simulating a model's parametric knowledge.

    ``post_edit``: every post-edit chain hop is answerable (full-knowledge
    determinism runs). ``pre_edit``: the model knows the original chains plus
    the post-edit hops its own case did not rewrite, i.e. an un-edited world.
    Conflicting duplicate questions keep the first answer, with a warning.
    """
    if world not in {"post_edit", "pre_edit"}:
        raise ValidationError(f"unknown oracle world {world!r}")
    table: dict[str, str] = {}

    def put(question: str, answer: str) -> None:
        key = lookup_key(question)
        if not key:
            return
        if key in table and normalize_answer(table[key]) != normalize_answer(answer):
            logger.warning(
                "oracle: conflicting answers for %r (%r kept, %r dropped)",
                question,
                table[key],
                answer,
            )
            return
        table.setdefault(key, answer)

    for case in cases:
        if world == "post_edit":
            for hop in case.new_hops:
                put(hop.question, hop.answer)
        else:
            for hop in case.original_hops:
                put(hop.question, hop.answer)
            for hop in case.new_hops:
                if not _hop_is_edited(hop, case):
                    put(hop.question, hop.answer)
    return table


# -- evaluation ----------------------------------------------------------------


@dataclass(slots=True)
class EvalConfig:
    """Everything evaluate() needs besides the cases themselves."""

    detectors: Detectors
    backend: Backend
    plan_source: str = "scripted"
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    cdm: bool = True
    parallelism: int = 1
    keep_records: bool = False
    metadata: dict = field(default_factory=dict)


@dataclass(slots=True)
class CaseOutcome:
    case_id: int
    hop_count: int
    edit_count: int
    m_correct: bool
    h_correct: bool
    h_exact: bool
    phrasing_index: int | None = None
    error: str | None = None
    records: tuple[AnswerRecord, ...] = ()


def _evaluate_case(case: MQuakeCase, graph: KnowledgeGraph, config: EvalConfig) -> CaseOutcome:
    golden = golden_path(case)
    # Scripted plans ignore phrasing, so one run covers all three.
    phrasings = case.questions if config.plan_source == "model" else case.questions[:1]
    kept: list[AnswerRecord] = []
    last_error: str | None = None
    for index, question in enumerate(phrasings):
        try:
            record = answer_multihop(
                question,
                graph,
                config.detectors,
                config.backend,
                config.pipeline,
                plan_source=config.plan_source,
                case=case,
            )
        except KGEditError as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            continue
        if config.keep_records:
            kept.append(record)
        if match_answer(record.final_answer, case.new_answer, case.new_answer_aliases):
            aligned = len(record.hops) == len(golden)
            h = aligned and all(
                match_answer(t.answer, g.answer, g.aliases)
                for t, g in zip(record.hops, golden)
            )
            h_exact = aligned and all(
                match_answer(t.answer, g.answer) for t, g in zip(record.hops, golden)
            )
            return CaseOutcome(
                case_id=case.case_id,
                hop_count=case.hop_count,
                edit_count=case.edit_count,
                m_correct=True,
                h_correct=h,
                h_exact=h_exact,
                phrasing_index=index,
                records=tuple(kept),
            )
    return CaseOutcome(
        case_id=case.case_id,
        hop_count=case.hop_count,
        edit_count=case.edit_count,
        m_correct=False,
        h_correct=False,
        h_exact=False,
        error=last_error,
        records=tuple(kept),
    )


@dataclass(slots=True)
class MetricsReport:
    m_acc: float
    h_acc: float
    h_acc_exact: float
    n_cases: int
    by_hops: dict[str, dict]
    by_edits: dict[str, dict]
    failures: list[dict]
    metadata: dict
    outcomes: list[CaseOutcome] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "m_acc": self.m_acc,
            "h_acc": self.h_acc,
            "h_acc_exact": self.h_acc_exact,
            "n_cases": self.n_cases,
            "by_hops": self.by_hops,
            "by_edits": self.by_edits,
            "failures": self.failures,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def render_table(self) -> str:
        rows = [
            f"cases      {self.n_cases}",
            f"m_acc      {self.m_acc:.4f}",
            f"h_acc      {self.h_acc:.4f}   (exact {self.h_acc_exact:.4f})",
        ]
        for name, groups in (("hops", self.by_hops), ("edits", self.by_edits)):
            for key, stats in sorted(groups.items()):
                rows.append(
                    f"  {name}={key:<4} n={stats['n']:<5} "
                    f"m_acc={stats['m_acc']:.4f} h_acc={stats['h_acc']:.4f}"
                )
        if self.failures:
            rows.append(f"failures   {len(self.failures)}")
        return "\n".join(rows)


def aggregate(outcomes: Sequence[CaseOutcome], metadata: dict | None = None) -> MetricsReport:
    """Fold case outcomes into a MetricsReport.

    Raises if hop-wise accuracy would exceed multi-hop accuracy; that
    ordering is structural (a fully correct chain implies a correct final
    answer) and a violation means an upstream bug.
    """
    n = len(outcomes)

    def acc(flags: Iterable[bool]) -> float:
        flags = list(flags)
        return sum(flags) / len(flags) if flags else 0.0

    def bucket(keyer: Callable[[CaseOutcome], int]) -> dict[str, dict]:
        out: dict[str, dict] = {}
        keys = sorted({keyer(o) for o in outcomes})
        for key in keys:
            group = [o for o in outcomes if keyer(o) == key]
            out[str(key)] = {
                "n": len(group),
                "m_acc": acc(o.m_correct for o in group),
                "h_acc": acc(o.h_correct for o in group),
            }
        return out

    m_acc = acc(o.m_correct for o in outcomes)
    h_acc = acc(o.h_correct for o in outcomes)
    h_exact = acc(o.h_exact for o in outcomes)
    if h_acc > m_acc:
        raise ValidationError(
            f"metric invariant violated: h_acc {h_acc} > m_acc {m_acc}"
        )
    failures = [
        {"case_id": o.case_id, "error": o.error or "final answer mismatch"}
        for o in outcomes
        if not o.m_correct
    ]
    return MetricsReport(
        m_acc=m_acc,
        h_acc=h_acc,
        h_acc_exact=h_exact,
        n_cases=n,
        by_hops=bucket(lambda o: o.hop_count),
        by_edits=bucket(lambda o: o.edit_count),
        failures=failures,
        metadata=dict(metadata or {}),
        outcomes=list(outcomes),
    )


def evaluate(
    cases: Sequence[MQuakeCase],
    spec: EditBatchSpec,
    config: EvalConfig,
) -> MetricsReport:
    """Run the full pipeline over every case, batch by batch.

    Each batch gets a fresh graph holding the union of its cases' rewrites.
    Case evaluation within a batch is read-only over that graph, so it can
    fan out over ``config.parallelism`` workers without changing results.
    Per-case pipeline errors count as failures and never abort the run.
    """
    outcomes: list[CaseOutcome] = []
    ingest_failures = 0
    for batch in partition_batches(cases, spec):
        graph, report = build_graph(batch.edits, batch.cases, cdm=config.cdm)
        ingest_failures += len(report.failures)
        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                outcomes.extend(
                    pool.map(lambda c: _evaluate_case(c, graph, config), batch.cases)
                )
        else:
            outcomes.extend(_evaluate_case(c, graph, config) for c in batch.cases)
    metadata = {
        "k": spec.label,
        "alpha": config.detectors.alpha,
        "cdm": config.cdm,
        "plan_source": config.plan_source,
        "deterministic_retrieval": config.pipeline.deterministic_retrieval,
        "entity_scorer": config.detectors.config.entity_scorer,
        "relation_scorer": config.detectors.config.relation_scorer,
        "phrasing_rule": "any-success, hop accuracy judged on first success",
        "ingest_failures": ingest_failures,
        **config.metadata,
    }
    return aggregate(outcomes, metadata)


# -- exporters -----------------------------------------------------------------


def _true_subject(
    case: MQuakeCase, hop_index: int, golden: Sequence[HopSpec]
) -> tuple[str, tuple[str, ...]] | None:
    """The gold subject of a hop question, with aliases, when recoverable.

    Hop 1's subject is taken from a rewrite whose subject the question
    mentions; later hops inherit the previous hop's answer by cascade.
    """
    if hop_index > 0:
        prev = golden[hop_index - 1]
        return prev.answer, prev.aliases
    question = golden[0].question
    for rw in case.rewrites:
        if rw.subject.strip() and re.search(re.escape(rw.subject), question, re.IGNORECASE):
            return rw.subject, ()
    return None


def export_entity_detector_dataset(
    cases: Sequence[MQuakeCase],
    graph: KnowledgeGraph | None = None,
    proposer: Callable[[str, KnowledgeGraph | None], list[str]] = propose_entities,
) -> tuple[list[dict], dict]:
    """(question, candidate, label) records over proposed candidates.

    label=1 iff the candidate matches the hop's true subject. Hops whose
    true subject cannot be recovered, or where the proposal set misses it,
    are tallied in the returned coverage stats (their records are all 0).
    """
    records: list[dict] = []
    stats = {
        "sub_questions": 0,
        "subject_covered": 0,
        "subject_unresolved": 0,
        "proposal_missed": 0,
    }
    for case in cases:
        golden = golden_path(case)
        for i, hop in enumerate(golden):
            stats["sub_questions"] += 1
            truth = _true_subject(case, i, golden)
            if truth is None:
                stats["subject_unresolved"] += 1
            hit = False
            for candidate in proposer(hop.question, graph):
                label = 0
                if truth is not None and match_answer(candidate, truth[0], truth[1]):
                    label = 1
                    hit = True
                records.append(
                    {"question": hop.question, "candidate": candidate, "label": label}
                )
            if hit:
                stats["subject_covered"] += 1
            elif truth is not None:
                stats["proposal_missed"] += 1
    return records, stats


def export_relation_detector_dataset(
    cases: Sequence[MQuakeCase], graph: KnowledgeGraph
) -> list[dict]:
    """(question, relation, label) records over the subject's graph relations.

    Only hops whose true subject is a graph node emit records; label=1 iff
    that relation's stored object matches the hop's gold answer.
    """
    records: list[dict] = []
    for case in cases:
        golden = golden_path(case)
        for i, hop in enumerate(golden):
            truth = _true_subject(case, i, golden)
            if truth is None:
                continue
            sid = graph.resolve(truth[0])
            if sid is None or not graph.contains_subject(sid):
                continue
            for relation in sorted(graph.relations_of(sid)):
                oid = graph.object_of(sid, relation)
                assert oid is not None
                label = int(match_answer(graph.label(oid), hop.answer, hop.aliases))
                records.append(
                    {"question": hop.question, "relation": relation, "label": label}
                )
    return records


def export_decomposition_dataset(cases: Sequence[MQuakeCase]) -> list[dict]:
    """(multi-hop question, gold sub-question list) pairs, one per phrasing.

    The first sub-question stays verbatim; later ones carry the entity
    marker in place of their subject, ready for instantiation.
    """
    records: list[dict] = []
    for case in cases:
        plan = scripted_decompose(case)
        for question in case.questions:
            records.append(
                {"question": question, "decomposition": list(plan.sub_questions)}
            )
    return records


def write_jsonl(records: Iterable[dict], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count
