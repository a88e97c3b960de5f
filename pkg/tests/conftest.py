"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import settings

from kgedit import (
    Detectors,
    KnowledgeGraph,
    NotFoundError,
    OracleBackend,
    PatternExtractor,
    Replaced,
    build_oracle,
    ingest_edits,
    load_dataset,
    read_edit_statements,
)

settings.register_profile("suite", derandomize=True, max_examples=120)
settings.load_profile("suite")

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_PATH = DATA_DIR / "fixture_cf.json"
FOOTBALL_EDITS_PATH = DATA_DIR / "football_edits.jsonl"


@pytest.fixture(scope="session")
def fixture_path() -> Path:
    return FIXTURE_PATH


@pytest.fixture(scope="session")
def football_edits_path() -> Path:
    return FOOTBALL_EDITS_PATH


@pytest.fixture(scope="session")
def cases():
    return load_dataset(FIXTURE_PATH)


@pytest.fixture(scope="session")
def post_backend(cases):
    return OracleBackend(build_oracle(cases, "post_edit"))


@pytest.fixture(scope="session")
def pre_backend(cases):
    return OracleBackend(build_oracle(cases, "pre_edit"))


@pytest.fixture()
def detectors():
    return Detectors()


def build_football_graph() -> KnowledgeGraph:
    """Graph holding the two text edits of the football scenario."""
    graph = KnowledgeGraph()
    statements, line_errors = read_edit_statements(FOOTBALL_EDITS_PATH)
    assert not line_errors
    report = ingest_edits(graph, statements, PatternExtractor())
    assert report.ok, report.failures
    return graph


@pytest.fixture()
def football_graph() -> KnowledgeGraph:
    return build_football_graph()


def run_lww_oracle_sequences(sequences: int, seed: int) -> int:
    """Compare the graph against a dict-based last-writer-wins oracle.

    Runs ``sequences`` randomized add/remove scripts over a small alphabet
    and checks, after every operation, that outcomes, sizes and lookups all
    agree with the oracle. Returns the total number of operations checked.
    """
    rng = random.Random(seed)
    subjects = ["alpha", "beta", "gamma", "delta"]
    relations = ["r-one", "r-two", "r-three"]
    objects = ["obj-a", "obj-b", "obj-c", "obj-d", "obj-e"]
    checked = 0
    for _ in range(sequences):
        graph = KnowledgeGraph()
        ids = {
            name: graph.register_entity(name)
            for name in {*subjects, *objects}
        }
        oracle: dict[tuple[str, str], str] = {}
        for _ in range(rng.randrange(5, 40)):
            s = rng.choice(subjects)
            r = rng.choice(relations)
            if rng.random() < 0.75:
                o = rng.choice(objects)
                outcome = graph.add_fact(ids[s], r, ids[o])
                if (s, r) in oracle:
                    assert isinstance(outcome, Replaced)
                    assert outcome.old.object == ids[oracle[(s, r)]]
                else:
                    assert not isinstance(outcome, Replaced)
                oracle[(s, r)] = o
            else:
                if (s, r) in oracle:
                    removed = graph.remove_fact(ids[s], r)
                    assert removed.object == ids[oracle.pop((s, r))]
                else:
                    try:
                        graph.remove_fact(ids[s], r)
                    except NotFoundError:
                        pass
                    else:
                        raise AssertionError("remove of a missing fact must raise")
            assert len(graph) == len(oracle)
            checked += 1
        for s in subjects:
            for r in relations:
                expected = oracle.get((s, r))
                got = graph.object_of(ids[s], r)
                assert got == (ids[expected] if expected else None)
    return checked
