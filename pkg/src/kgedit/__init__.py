"""Knowledge-graph editing with multi-hop question answering.

The package keeps edited facts in an in-memory graph with conflict
resolution (one object per subject-relation pair, newest edit wins),
decomposes multi-hop questions into single hops, and routes every hop
either to graph retrieval or to a language-model backend based on a
scored confidence threshold. An evaluation harness runs datasets in the
public MQUAKE layout and reports multi-hop and hop-wise accuracies.
"""

from __future__ import annotations

from .backends import (
    Backend,
    BackendConfig,
    OracleBackend,
    RemoteBackend,
    ScriptedBackend,
    answer_with_fact,
)
from .decompose import (
    ENTITY_MARKER,
    DecompositionPlan,
    PromptTemplate,
    TemplateSet,
    decompose,
    default_templates,
    instantiate,
    parse_decomposition,
    render_plan,
    scripted_decompose,
)
from .detect import (
    DetectorConfig,
    Detectors,
    ScoredCandidate,
    load_paraphrases,
    make_entity_scorer,
    make_relation_scorer,
    propose_entities,
    score_entity,
    score_relation,
    select_relation,
    select_subject,
)
from .errors import (
    AliasCollisionError,
    BackendError,
    ConfigError,
    DataError,
    DecompositionFormatError,
    ExtractionError,
    KGEditError,
    LinkingError,
    NotFoundError,
    PipelineError,
    ScriptExhaustedError,
    SnapshotFormatError,
    UnknownQuestionError,
    ValidationError,
)
from .extract import (
    AutoExtractor,
    EditStatement,
    ExtractedTriple,
    IngestReport,
    PatternExtractor,
    RemoteExtractor,
    StructuredEdit,
    StructuredExtractor,
    ingest_edits,
    link_entity,
    read_edit_statements,
)
from .graph import (
    EditedFact,
    EntityRecord,
    Inserted,
    KnowledgeGraph,
    Replaced,
)
from .mquake import (
    CaseOutcome,
    EditBatch,
    EditBatchSpec,
    EvalConfig,
    HopSpec,
    MetricsReport,
    MQuakeCase,
    RewriteSpec,
    aggregate,
    build_graph,
    build_oracle,
    check_cascade,
    dataset_summary,
    evaluate,
    export_decomposition_dataset,
    export_entity_detector_dataset,
    export_relation_detector_dataset,
    golden_path,
    load_dataset,
    match_answer,
    partition_batches,
    write_jsonl,
)
from .pipeline import (
    AnswerRecord,
    HopTrace,
    PipelineConfig,
    Route,
    answer_multihop,
    answer_subquestion,
    extract_answer,
)
from .text import lookup_key, normalize_alias, normalize_answer, phrase_tokens

__version__ = "0.1.0"

__all__ = [
    "AliasCollisionError",
    "AnswerRecord",
    "AutoExtractor",
    "Backend",
    "BackendConfig",
    "BackendError",
    "CaseOutcome",
    "ConfigError",
    "DataError",
    "DecompositionFormatError",
    "DecompositionPlan",
    "DetectorConfig",
    "Detectors",
    "EditBatch",
    "EditBatchSpec",
    "EditStatement",
    "EditedFact",
    "ENTITY_MARKER",
    "EntityRecord",
    "EvalConfig",
    "ExtractedTriple",
    "ExtractionError",
    "HopSpec",
    "HopTrace",
    "IngestReport",
    "Inserted",
    "KGEditError",
    "KnowledgeGraph",
    "LinkingError",
    "MetricsReport",
    "MQuakeCase",
    "NotFoundError",
    "OracleBackend",
    "PatternExtractor",
    "PipelineConfig",
    "PipelineError",
    "PromptTemplate",
    "RemoteBackend",
    "RemoteExtractor",
    "Replaced",
    "RewriteSpec",
    "Route",
    "ScoredCandidate",
    "ScriptExhaustedError",
    "ScriptedBackend",
    "SnapshotFormatError",
    "StructuredEdit",
    "StructuredExtractor",
    "TemplateSet",
    "UnknownQuestionError",
    "ValidationError",
    "aggregate",
    "answer_multihop",
    "answer_subquestion",
    "answer_with_fact",
    "build_graph",
    "build_oracle",
    "check_cascade",
    "dataset_summary",
    "decompose",
    "default_templates",
    "evaluate",
    "export_decomposition_dataset",
    "export_entity_detector_dataset",
    "export_relation_detector_dataset",
    "extract_answer",
    "golden_path",
    "ingest_edits",
    "instantiate",
    "link_entity",
    "load_dataset",
    "load_paraphrases",
    "lookup_key",
    "make_entity_scorer",
    "make_relation_scorer",
    "match_answer",
    "normalize_alias",
    "normalize_answer",
    "parse_decomposition",
    "partition_batches",
    "phrase_tokens",
    "propose_entities",
    "read_edit_statements",
    "render_plan",
    "scripted_decompose",
    "score_entity",
    "score_relation",
    "select_relation",
    "select_subject",
    "write_jsonl",
    "__version__",
]
