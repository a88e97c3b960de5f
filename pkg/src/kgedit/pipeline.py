"""Hop-by-hop answering: route each sub-question to the graph or the model.

For one sub-question the router proposes candidate entities, picks the
subject by argmax, and checks whether the subject is a node of the edited
graph. If it is, the subject's stored relations are scored; when the best
score clears the threshold strictly, the hop is answered from the graph
(route "retrieved", the object of the best relation). In every other case
the hop goes to the language model (route "generated"): unknown subject,
subject absent from the graph, or no relation score above the threshold.

Multi-hop answering decomposes the question once, then feeds each hop's
answer verbatim into the next sub-question's marker. A backend failure mid
run aborts the case; the partial trace rides on the exception. No hop ever
switches route after a failure.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .backends import Backend, answer_with_fact
from .decompose import (
    ENTITY_MARKER,
    DecompositionPlan,
    TemplateSet,
    decompose,
    default_templates,
    instantiate,
    scripted_decompose,
)
from .detect import Detectors
from .errors import KGEditError, PipelineError, ValidationError
from .graph import KnowledgeGraph

if TYPE_CHECKING:
    from .mquake import MQuakeCase


class Route(str, enum.Enum):
    RETRIEVED = "retrieved"
    GENERATED = "generated"


@dataclass(frozen=True, slots=True)
class HopTrace:
    """What happened on one hop."""

    sub_question: str
    route: Route
    answer: str
    subject: str | None = None
    relation: str | None = None
    relation_score: float | None = None
    retrieved_object: str | None = None

    def to_dict(self) -> dict:
        return {
            "sub_question": self.sub_question,
            "route": self.route.value,
            "answer": self.answer,
            "subject": self.subject,
            "relation": self.relation,
            "relation_score": self.relation_score,
            "retrieved_object": self.retrieved_object,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HopTrace":
        return cls(
            sub_question=obj["sub_question"],
            route=Route(obj["route"]),
            answer=obj["answer"],
            subject=obj.get("subject"),
            relation=obj.get("relation"),
            relation_score=obj.get("relation_score"),
            retrieved_object=obj.get("retrieved_object"),
        )


@dataclass(frozen=True, slots=True)
class AnswerRecord:
    """Full trace of one multi-hop run."""

    question: str
    plan: DecompositionPlan
    hops: tuple[HopTrace, ...]
    final_answer: str

    def __post_init__(self) -> None:
        if len(self.hops) != len(self.plan):
            raise ValidationError(
                f"trace has {len(self.hops)} hops for a {len(self.plan)}-step plan"
            )
        if self.hops and self.final_answer != self.hops[-1].answer:
            raise ValidationError("final answer must be the last hop's answer")

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "plan": list(self.plan.sub_questions),
            "hops": [h.to_dict() for h in self.hops],
            "final_answer": self.final_answer,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "AnswerRecord":
        return cls(
            question=obj["question"],
            plan=DecompositionPlan(
                original_question=obj["question"],
                sub_questions=tuple(obj["plan"]),
            ),
            hops=tuple(HopTrace.from_dict(h) for h in obj["hops"]),
            final_answer=obj["final_answer"],
        )


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Orchestration knobs independent of detector tuning.

    ``deterministic_retrieval`` (the evaluation default) answers retrieved
    hops with the object label verbatim instead of prompting the model.
    """

    deterministic_retrieval: bool = True
    marker: str = ENTITY_MARKER
    templates: TemplateSet = field(default_factory=default_templates)


_ANSWER_PREFIX = re.compile(r"^answer\s*:\s*", re.IGNORECASE)
# A trailing period is formatting, except after a capital ("D.C.", "F.C.").
_TRAILING_PERIOD = re.compile(r"(?<![A-Z])\.$")


def extract_answer(completion: str) -> str:
    """Reduce a model completion to a bare answer string.

    First non-empty line, minus an "Answer:" prefix and a trailing period.
    Oracle and scripted table values normally pass through unchanged.
    """
    for line in completion.strip().splitlines():
        line = line.strip()
        if line:
            line = _ANSWER_PREFIX.sub("", line).strip()
            return _TRAILING_PERIOD.sub("", line)
    return ""


def answer_subquestion(
    question: str,
    graph: KnowledgeGraph,
    detectors: Detectors,
    backend: Backend,
    config: PipelineConfig | None = None,
) -> HopTrace:
    """Answer one self-contained sub-question, routing per the rule above."""
    config = config or PipelineConfig()
    candidates = detectors.propose(question, graph)
    subject = detectors.select_subject(question, candidates)
    subject_id = graph.resolve(subject.candidate) if subject else None

    if subject is None or subject_id is None or not graph.contains_subject(subject_id):
        trace = HopTrace(
            sub_question=question,
            route=Route.GENERATED,
            answer=_generate_answer(question, backend, config),
            subject=subject.candidate if subject else None,
        )
        return _check_route(trace, detectors.alpha)

    relations = graph.relations_of(subject_id)
    selected = detectors.select_relation(question, relations)
    if selected is None:
        trace = HopTrace(
            sub_question=question,
            route=Route.GENERATED,
            answer=_generate_answer(question, backend, config),
            subject=subject.candidate,
        )
        return _check_route(trace, detectors.alpha)

    object_id = graph.object_of(subject_id, selected.candidate)
    assert object_id is not None  # selected relation came from relations_of
    label = graph.label(object_id)
    answer = answer_with_fact(
        backend,
        question,
        label,
        use_llm=not config.deterministic_retrieval,
        template=config.templates.retrieve,
    )
    if not config.deterministic_retrieval:
        answer = extract_answer(answer)
    trace = HopTrace(
        sub_question=question,
        route=Route.RETRIEVED,
        answer=answer,
        subject=subject.candidate,
        relation=selected.candidate,
        relation_score=selected.score,
        retrieved_object=label,
    )
    return _check_route(trace, detectors.alpha)


def _generate_answer(question: str, backend: Backend, config: PipelineConfig) -> str:
    prompt = config.templates.answer.render(question=question)
    return extract_answer(backend.generate(prompt))


def _check_route(trace: HopTrace, alpha: float) -> HopTrace:
    """Route soundness: retrieved implies an object and p > alpha; generated
    implies no retrieved object. Violations are internal bugs."""
    if trace.route is Route.RETRIEVED:
        ok = (
            trace.retrieved_object is not None
            and trace.relation_score is not None
            and trace.relation_score > alpha
        )
    else:
        ok = trace.retrieved_object is None and trace.relation_score is None
    if not ok:
        raise AssertionError(f"route invariant violated: {trace!r}")
    return trace


def answer_multihop(
    question: str,
    graph: KnowledgeGraph,
    detectors: Detectors,
    backend: Backend,
    config: PipelineConfig | None = None,
    *,
    plan_source: str = "model",
    case: "MQuakeCase | None" = None,
) -> AnswerRecord:
    """Decompose once, answer hop by hop, substitute answers forward.

    ``plan_source`` is "model" (prompted decomposition) or "scripted" (gold
    chain from ``case``). Decomposition or hop failures raise PipelineError
    carrying the hops completed so far; there is no mid-run route switching.
    """
    config = config or PipelineConfig()
    try:
        if plan_source == "scripted":
            if case is None:
                raise ValidationError("scripted plans need a dataset case")
            plan = scripted_decompose(case, marker=config.marker)
        elif plan_source == "model":
            plan = decompose(question, backend, config.templates.divide)
        else:
            raise ValidationError(f"unknown plan source {plan_source!r}")
    except KGEditError as exc:
        raise PipelineError(
            f"decomposition failed: {exc}", question=question
        ) from exc

    hops: list[HopTrace] = []
    answer = ""
    for i, sub in enumerate(plan.sub_questions):
        hop_question = sub if i == 0 else instantiate(sub, answer, config.marker)
        try:
            trace = answer_subquestion(hop_question, graph, detectors, backend, config)
        except KGEditError as exc:
            raise PipelineError(
                f"hop {i + 1} failed: {exc}", question=question, hops=tuple(hops)
            ) from exc
        hops.append(trace)
        answer = trace.answer
    return AnswerRecord(
        question=question, plan=plan, hops=tuple(hops), final_answer=answer
    )
