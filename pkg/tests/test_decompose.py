"""Question decomposition: parsing, plan validation, instantiation."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgedit import (
    DataError,
    DecompositionFormatError,
    DecompositionPlan,
    PromptTemplate,
    ValidationError,
    decompose,
    default_templates,
    instantiate,
    parse_decomposition,
    render_plan,
    scripted_decompose,
)
from kgedit.backends import ScriptedBackend

PLAN_LINES = (
    "Which sport is Watford F.C. associated with?",
    "Which country was [ENT] created in?",
    "Which continent is [ENT] located in?",
)


class TestParseDecomposition:
    def test_plain_lines(self):
        plan = parse_decomposition("\n".join(PLAN_LINES))
        assert plan.sub_questions == PLAN_LINES

    def test_numbered_lines(self):
        raw = "\n".join(f"{i}. {q}" for i, q in enumerate(PLAN_LINES, start=1))
        assert parse_decomposition(raw).sub_questions == PLAN_LINES

    def test_numbered_items_on_one_line(self):
        raw = " ".join(f"{i}. {q}" for i, q in enumerate(PLAN_LINES, start=1))
        assert parse_decomposition(raw).sub_questions == PLAN_LINES

    def test_bullets_and_header(self):
        raw = "Subquestions:\n" + "\n".join(f"- {q}" for q in PLAN_LINES)
        assert parse_decomposition(raw).sub_questions == PLAN_LINES

    def test_parenthesized_numbers(self):
        raw = "\n".join(f"{i}) {q}" for i, q in enumerate(PLAN_LINES, start=1))
        assert parse_decomposition(raw).sub_questions == PLAN_LINES

    def test_blank_lines_skipped(self):
        raw = f"\n{PLAN_LINES[0]}\n\n{PLAN_LINES[1]}\n"
        assert len(parse_decomposition(raw)) == 2

    def test_empty_output_is_format_error(self):
        with pytest.raises(DecompositionFormatError) as info:
            parse_decomposition("   \n  ")
        assert info.value.raw == "   \n  "

    def test_marker_violation_is_format_error_with_raw(self):
        raw = "Who wrote Carmen?\nWhere was that person born?"
        with pytest.raises(DecompositionFormatError) as info:
            parse_decomposition(raw)
        assert info.value.raw == raw

    def test_original_question_carried(self):
        plan = parse_decomposition(PLAN_LINES[0], original_question="original?")
        assert plan.original_question == "original?"


class TestDecompositionPlan:
    def test_first_sub_question_must_be_self_contained(self):
        with pytest.raises(ValidationError):
            DecompositionPlan("q", ("What is [ENT]?",))

    def test_later_sub_questions_need_marker(self):
        with pytest.raises(ValidationError):
            DecompositionPlan("q", (PLAN_LINES[0], "Which country is next?"))

    def test_empty_plan_rejected(self):
        with pytest.raises(ValidationError):
            DecompositionPlan("q", ())

    def test_single_hop_plan_allowed(self):
        assert len(DecompositionPlan("q", (PLAN_LINES[0],))) == 1

    @given(
        n=st.integers(min_value=1, max_value=5),
        seed=st.text(alphabet="abcdef ", min_size=1, max_size=12),
    )
    def test_render_parse_round_trip(self, n, seed):
        subs = [f"Who is {seed.strip() or 'x'}?"]
        subs += [f"Where does [ENT] live ({i})?" for i in range(n - 1)]
        plan = DecompositionPlan("q", tuple(subs))
        assert parse_decomposition(render_plan(plan)).sub_questions == plan.sub_questions


class TestInstantiate:
    def test_replaces_every_occurrence(self):
        out = instantiate("Is [ENT] the same as [ENT]?", "Brazil")
        assert out == "Is Brazil the same as Brazil?"

    def test_missing_marker_rejected(self):
        with pytest.raises(ValidationError):
            instantiate("Which country is next?", "Brazil")


class TestDecomposeWithBackend:
    def test_clean_first_attempt(self):
        backend = ScriptedBackend(["\n".join(PLAN_LINES)])
        plan = decompose("q?", backend, default_templates().divide)
        assert plan.sub_questions == PLAN_LINES
        assert len(backend.prompts) == 1

    def test_one_retry_then_success(self):
        backend = ScriptedBackend(["gibberish with [ENT] first", "\n".join(PLAN_LINES)])
        plan = decompose("q?", backend, default_templates().divide)
        assert plan.sub_questions == PLAN_LINES
        assert len(backend.prompts) == 2

    def test_two_failures_raise(self):
        backend = ScriptedBackend(["[ENT] bad", "[ENT] still bad"])
        with pytest.raises(DecompositionFormatError):
            decompose("q?", backend, default_templates().divide)

    def test_question_lands_in_prompt(self):
        backend = ScriptedBackend(["\n".join(PLAN_LINES)])
        decompose("What continent?", backend, default_templates().divide)
        assert "What continent?" in backend.prompts[0]


class TestScriptedDecompose:
    def test_masks_previous_answer(self, cases):
        case = next(c for c in cases if c.case_id == 6)
        plan = scripted_decompose(case)
        assert plan.sub_questions == PLAN_LINES

    def test_alias_masking_is_longest_first(self, cases):
        # Case 13's spouse hop mentions the long-form name; the mask must
        # catch it through the hop aliases without mangling substrings.
        case = next(c for c in cases if c.case_id == 13)
        plan = scripted_decompose(case)
        assert plan.sub_questions[0] == case.new_hops[0].question
        for sub in plan.sub_questions[1:]:
            assert "[ENT]" in sub

    def test_every_fixture_case_decomposes(self, cases):
        for case in cases:
            plan = scripted_decompose(case)
            assert len(plan) == case.hop_count

    def test_unmaskable_chain_is_data_error(self, cases):
        import dataclasses

        case = next(c for c in cases if c.hop_count == 2)
        bad_hop = dataclasses.replace(
            case.new_hops[1], question="Which continent is Saturn located in?"
        )
        broken = dataclasses.replace(case, new_hops=(case.new_hops[0], bad_hop))
        with pytest.raises(DataError, match="does not mention"):
            scripted_decompose(broken)


class TestPromptTemplate:
    def test_missing_slot_rejected(self):
        with pytest.raises(ValidationError):
            PromptTemplate("divide", "no slot here")

    def test_render_fills_slots(self):
        t = PromptTemplate("x", "Q: <<<<QUESTION>>>> F: <<<<FACT>>>>",
                           required_slots=("<<<<QUESTION>>>>", "<<<<FACT>>>>"))
        assert t.render(question="q1", fact="f1") == "Q: q1 F: f1"

    def test_default_templates_load(self):
        templates = default_templates()
        assert "<<<<QUESTION>>>>" in templates.divide.body
        assert "<<<<FACT>>>>" in templates.retrieve.body
