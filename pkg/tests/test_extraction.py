"""Triple extraction, entity linking, and edit ingestion."""

from __future__ import annotations

import json

import pytest

from kgedit import (
    AutoExtractor,
    EditStatement,
    ExtractionError,
    KnowledgeGraph,
    LinkingError,
    PatternExtractor,
    RemoteExtractor,
    StructuredEdit,
    StructuredExtractor,
    ValidationError,
    ingest_edits,
    link_entity,
    read_edit_statements,
)


def stmt(text: str = "", **hint) -> EditStatement:
    return EditStatement(text=text, hint=StructuredEdit(**hint) if hint else None)


class TestStructuredExtractor:
    def test_emits_single_triple(self):
        s = stmt(subject="Brazil", relation="continent", old_object="South America",
                 new_object="Africa")
        triples = StructuredExtractor().extract(s)
        assert len(triples) == 1
        assert (triples[0].subject, triples[0].relation, triples[0].object) == (
            "Brazil", "continent", "Africa")

    def test_requires_hint(self):
        with pytest.raises(ExtractionError):
            StructuredExtractor().extract(stmt(text="Brazil moved."))

    def test_rejects_empty_fields(self):
        s = stmt(subject="Brazil", relation="", old_object="", new_object="Africa")
        with pytest.raises(ExtractionError):
            StructuredExtractor().extract(s)


class TestPatternExtractor:
    def test_matches_packaged_templates(self):
        s = stmt(text="Association football was created in the country of Brazil.")
        triples = PatternExtractor().extract(s)
        assert (triples[0].subject, triples[0].relation, triples[0].object) == (
            "Association football", "country of origin", "Brazil")

    def test_inverse_companion_triple(self):
        s = stmt(text="Association football was created in the country of Brazil.")
        triples = PatternExtractor().extract(s)
        assert len(triples) == 2
        assert (triples[1].subject, triples[1].relation, triples[1].object) == (
            "Brazil", "sport", "Association football")

    def test_relation_without_inverse_emits_one_triple(self):
        s = stmt(text="Brazil is located in the continent of Africa.")
        triples = PatternExtractor().extract(s)
        assert len(triples) == 1
        assert triples[0].relation == "continent"

    def test_multi_sentence_statement(self):
        s = stmt(
            text="Association football was created in the country of Brazil. "
                 "Brazil is located in the continent of Africa."
        )
        triples = PatternExtractor().extract(s)
        relations = [t.relation for t in triples]
        assert relations == ["country of origin", "sport", "continent"]

    def test_unmatched_sentence_fails_the_statement(self):
        s = stmt(text="Brazil vibes with Africa.")
        with pytest.raises(ExtractionError, match="no pattern matched"):
            PatternExtractor().extract(s)

    def test_case_insensitive_match(self):
        s = stmt(text="brazil IS LOCATED IN THE CONTINENT OF africa")
        triples = PatternExtractor().extract(s)
        assert triples[0].subject == "brazil"
        assert triples[0].object == "africa"

    def test_custom_patterns(self):
        extractor = PatternExtractor(
            patterns=[("flavor", "{s} tastes like {o}")], inverses={}
        )
        triples = extractor.extract(stmt(text="Mango tastes like sunshine."))
        assert triples[0].relation == "flavor"

    def test_template_must_carry_both_slots(self):
        with pytest.raises(ValidationError):
            PatternExtractor(patterns=[("flavor", "{s} tastes great")])

    def test_empty_text_rejected(self):
        with pytest.raises(ExtractionError):
            PatternExtractor().extract(stmt())


class TestAutoExtractor:
    def test_prefers_structured_hint(self):
        s = EditStatement(
            text="Brazil is located in the continent of Africa.",
            hint=StructuredEdit("Brazil", "continent", "", "Asia"),
        )
        triples = AutoExtractor().extract(s)
        assert triples[0].object == "Asia"

    def test_falls_back_to_patterns(self):
        s = stmt(text="Brazil is located in the continent of Africa.")
        assert AutoExtractor().extract(s)[0].object == "Africa"


class TestRemoteExtractor:
    def _fake_response(self, payload):
        class Resp:
            def raise_for_status(self):
                pass

            def json(self):
                return payload

        return Resp()

    def test_parses_triples(self, monkeypatch):
        payload = {"triples": [{"s": "Brazil", "r": "continent", "o": "Africa"}]}
        monkeypatch.setattr(
            "requests.post", lambda *a, **kw: self._fake_response(payload)
        )
        triples = RemoteExtractor("http://localhost:1/extract").extract(
            stmt(text="whatever")
        )
        assert triples[0].object == "Africa"

    def test_missing_triples_key(self, monkeypatch):
        monkeypatch.setattr(
            "requests.post", lambda *a, **kw: self._fake_response({"nope": 1})
        )
        with pytest.raises(ExtractionError, match="triples"):
            RemoteExtractor("http://localhost:1/extract").extract(stmt(text="x"))

    def test_malformed_triple(self, monkeypatch):
        monkeypatch.setattr(
            "requests.post",
            lambda *a, **kw: self._fake_response({"triples": [{"s": "x"}]}),
        )
        with pytest.raises(ExtractionError, match="bad triple"):
            RemoteExtractor("http://localhost:1/extract").extract(stmt(text="x"))


class TestLinkEntity:
    def test_resolves_existing(self):
        graph = KnowledgeGraph()
        eid = graph.register_entity("Brazil")
        assert link_entity(graph, "  brazil ") == eid

    def test_synthesizes_local_entity(self):
        graph = KnowledgeGraph()
        eid = link_entity(graph, "Brazil")
        assert graph.label(eid) == "Brazil"
        assert link_entity(graph, "brazil") == eid  # stable across re-linking

    def test_empty_mention_rejected(self):
        with pytest.raises(ValidationError):
            link_entity(KnowledgeGraph(), "  ")

    def test_kb_hit_registers_with_ref_and_aliases(self):
        graph = KnowledgeGraph()

        class KB:
            def lookup(self, mention):
                return ("Q155", "Brazil", ("Federative Republic of Brazil",))

        eid = link_entity(graph, "brasil", kb=KB())
        record = graph.entity(eid)
        assert record.external_ref == "Q155"
        assert graph.resolve("Federative Republic of Brazil") == eid
        # the original mention becomes an alias too
        assert graph.resolve("brasil") == eid

    def test_kb_miss_synthesizes(self):
        graph = KnowledgeGraph()

        class KB:
            def lookup(self, mention):
                return None

        eid = link_entity(graph, "Brazil", kb=KB())
        assert graph.entity(eid).external_ref is None

    def test_kb_crash_surfaces_as_linking_error(self):
        class KB:
            def lookup(self, mention):
                raise RuntimeError("socket burst")

        with pytest.raises(LinkingError):
            link_entity(KnowledgeGraph(), "Brazil", kb=KB())


class TestIngestEdits:
    def test_partial_success_accounting(self):
        graph = KnowledgeGraph()
        statements = [
            stmt(text="Brazil is located in the continent of Asia."),
            stmt(text="complete gibberish sentence."),
            stmt(text="Brazil is located in the continent of Africa."),
        ]
        report = ingest_edits(graph, statements, PatternExtractor())
        assert report.inserted == 1
        assert report.replaced == 1
        assert len(report.failures) == 1
        assert report.attempted == 3
        assert not report.ok
        assert report.inserted + report.replaced + len(report.failures) == report.attempted

    def test_conflict_resolution_during_ingest(self):
        graph = KnowledgeGraph()
        statements = [
            stmt(subject="Brazil", relation="continent", old_object="", new_object="Asia"),
            stmt(subject="Brazil", relation="continent", old_object="Asia", new_object="Africa"),
        ]
        report = ingest_edits(graph, statements, StructuredExtractor())
        assert (report.inserted, report.replaced) == (1, 1)
        brazil = graph.resolve("Brazil")
        africa = graph.resolve("Africa")
        assert graph.object_of(brazil, "continent") == africa

    def test_append_only_graph_never_replaces(self):
        graph = KnowledgeGraph(cdm=False)
        statements = [
            stmt(subject="Brazil", relation="continent", old_object="", new_object="Asia"),
            stmt(subject="Brazil", relation="continent", old_object="Asia", new_object="Africa"),
        ]
        report = ingest_edits(graph, statements, StructuredExtractor())
        assert (report.inserted, report.replaced) == (2, 0)
        brazil = graph.resolve("Brazil")
        asia = graph.resolve("Asia")
        assert graph.object_of(brazil, "continent") == asia  # oldest wins

    def test_source_text_recorded(self):
        graph = KnowledgeGraph()
        text = "Brazil is located in the continent of Africa."
        ingest_edits(graph, [stmt(text=text)], PatternExtractor())
        fact = graph.facts()[0]
        assert fact.source_text == text


class TestReadEditStatements:
    def test_reads_both_shapes(self, tmp_path):
        path = tmp_path / "edits.jsonl"
        lines = [
            json.dumps({"text": "Brazil is located in the continent of Africa."}),
            json.dumps({"s": "Brazil", "r": "continent", "o_old": "Asia", "o_new": "Africa"}),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        statements, errors = read_edit_statements(path)
        assert not errors
        assert statements[0].hint is None and statements[0].text
        assert statements[1].hint is not None
        assert statements[1].hint.new_object == "Africa"

    def test_bad_lines_reported_not_fatal(self, tmp_path):
        path = tmp_path / "edits.jsonl"
        path.write_text('{"text": "ok"}\nnot json\n[1]\n', encoding="utf-8")
        statements, errors = read_edit_statements(path)
        assert len(statements) == 1
        assert [lineno for lineno, _ in errors] == [2, 3]

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "edits.jsonl"
        path.write_text('\n{"text": "ok"}\n\n', encoding="utf-8")
        statements, errors = read_edit_statements(path)
        assert len(statements) == 1 and not errors
