"""One-shot question decomposition and sub-question instantiation.

A multi-hop question is split once, up front, into a plan of sub-questions.
The first sub-question is self-contained; every later one carries the
``[ENT]`` marker where the previous hop's answer will be substituted. Plans
come either from a prompted model (``decompose``) or straight from a
dataset case's gold sub-question chain (``scripted_decompose``).

The parser is strict about shape: numbered items ("1. ... 2. ...", on one
line or several) and plain lines are accepted, anything else is a format
error carrying the raw model text. One retry with the identical prompt is
allowed before giving up; there are no repair heuristics.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Protocol, Sequence

from . import kvconfig
from .errors import DataError, DecompositionFormatError, ValidationError

if TYPE_CHECKING:
    from .mquake import MQuakeCase

logger = logging.getLogger(__name__)

ENTITY_MARKER = "[ENT]"
QUESTION_SLOT = "<<<<QUESTION>>>>"
FACT_SLOT = "<<<<FACT>>>>"

_NUMBERED_ITEM = re.compile(r"(?:^|\s)\d+[.)]\s*")
_LEADING_BULLET = re.compile(r"^(?:[-*]\s+|\d+[.)]\s*)")
_HEADER_LINE = re.compile(r"^(?:sub\s*questions?|subquestions?)\s*:?\s*$", re.IGNORECASE)


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    """A named prompt body with literal slots."""

    name: str
    body: str
    required_slots: tuple[str, ...] = (QUESTION_SLOT,)

    def __post_init__(self) -> None:
        for slot in self.required_slots:
            if slot not in self.body:
                raise ValidationError(f"template {self.name!r} is missing slot {slot}")

    def render(self, **slots: str) -> str:
        out = self.body
        for key, value in slots.items():
            out = out.replace(f"<<<<{key.upper()}>>>>", value)
        return out

    @classmethod
    def from_file(cls, name: str, path: str | Path, required_slots: tuple[str, ...] = (QUESTION_SLOT,)) -> "PromptTemplate":
        return cls(name=name, body=Path(path).read_text(encoding="utf-8"), required_slots=required_slots)


@dataclass(frozen=True, slots=True)
class TemplateSet:
    divide: PromptTemplate
    answer: PromptTemplate
    retrieve: PromptTemplate


def default_templates() -> TemplateSet:
    return TemplateSet(
        divide=PromptTemplate("divide", kvconfig.packaged_text("templates/divide.txt")),
        answer=PromptTemplate("answer", kvconfig.packaged_text("templates/answer.txt")),
        retrieve=PromptTemplate(
            "retrieve",
            kvconfig.packaged_text("templates/retrieve.txt"),
            required_slots=(QUESTION_SLOT, FACT_SLOT),
        ),
    )


@dataclass(frozen=True, slots=True)
class DecompositionPlan:
    """Ordered sub-questions for one multi-hop question."""

    original_question: str
    sub_questions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.sub_questions:
            raise ValidationError("a plan needs at least one sub-question")
        if ENTITY_MARKER in self.sub_questions[0]:
            raise ValidationError(
                f"first sub-question must not contain {ENTITY_MARKER}: "
                f"{self.sub_questions[0]!r}"
            )
        for i, sub in enumerate(self.sub_questions[1:], start=2):
            if ENTITY_MARKER not in sub:
                raise ValidationError(
                    f"sub-question {i} lacks the {ENTITY_MARKER} marker: {sub!r}"
                )

    def __len__(self) -> int:
        return len(self.sub_questions)


def parse_decomposition(raw: str, original_question: str = "") -> DecompositionPlan:
    """Parse model output into a plan.

    Accepts the observed output shapes: one numbered line ("1. ... 2. ..."),
    numbered lines, or one plain sub-question per line, optionally under a
    "Subquestion:" header. Everything else is a DecompositionFormatError.
    """
    items: list[str] = []
    for line in raw.strip().splitlines():
        line = line.strip()
        if not line or _HEADER_LINE.match(line):
            continue
        if len(_NUMBERED_ITEM.findall(line)) > 1:
            # several numbered items packed onto one line
            parts = [p.strip() for p in _NUMBERED_ITEM.split(line)]
            items.extend(p for p in parts if p)
        else:
            item = _LEADING_BULLET.sub("", line).strip()
            if item:
                items.append(item)
    if not items:
        raise DecompositionFormatError("no sub-question lines in model output", raw=raw)
    try:
        return DecompositionPlan(
            original_question=original_question, sub_questions=tuple(items)
        )
    except ValidationError as exc:
        raise DecompositionFormatError(str(exc), raw=raw) from exc


def render_plan(plan: DecompositionPlan) -> str:
    """Inverse of parse_decomposition's plain-line shape."""
    return "\n".join(plan.sub_questions)


class _Generates(Protocol):
    def generate(self, prompt: str) -> str: ...


def decompose(
    question: str,
    backend: _Generates,
    template: PromptTemplate,
) -> DecompositionPlan:
    """Ask the backend to split the question; one retry on a format error."""
    prompt = template.render(question=question)
    last: DecompositionFormatError | None = None
    for attempt in (1, 2):
        raw = backend.generate(prompt)
        try:
            return parse_decomposition(raw, original_question=question)
        except DecompositionFormatError as exc:
            last = exc
            logger.warning(
                "decomposition attempt %d unparseable for %r: %s", attempt, question, exc
            )
    assert last is not None
    raise last


def instantiate(sub_question: str, answer: str, marker: str = ENTITY_MARKER) -> str:
    """Replace every marker occurrence with the previous hop's answer."""
    if marker not in sub_question:
        raise ValidationError(f"sub-question has no {marker} to fill: {sub_question!r}")
    return sub_question.replace(marker, answer)


def scripted_decompose(
    case: "MQuakeCase", marker: str = ENTITY_MARKER
) -> DecompositionPlan:
    """Plan built from a dataset case's gold sub-question chain.

    Keeps the first sub-question verbatim and replaces each later hop's
    subject (the previous hop's answer, matched through its aliases) with
    the marker. A hop whose question never mentions the previous answer is a
    data error: the chain cannot be re-instantiated.
    """
    hops = case.new_hops
    if not hops:
        raise DataError(f"case {case.case_id} has no sub-question chain")
    subs = [hops[0].question]
    for i in range(1, len(hops)):
        question = hops[i].question
        prev = hops[i - 1]
        replaced = _mask_subject(question, [prev.answer, *prev.aliases], marker)
        if replaced is None:
            raise DataError(
                f"case {case.case_id}: hop {i + 1} question does not mention the "
                f"previous answer {prev.answer!r}: {question!r}"
            )
        subs.append(replaced)
    return DecompositionPlan(
        original_question=case.questions[0] if case.questions else "",
        sub_questions=tuple(subs),
    )


def _mask_subject(question: str, forms: Sequence[str], marker: str) -> str | None:
    for form in sorted({f for f in forms if f.strip()}, key=len, reverse=True):
        pattern = re.compile(re.escape(form), re.IGNORECASE)
        if pattern.search(question):
            return pattern.sub(marker, question)
    return None
