"""Command-line interface.

Four subcommands cover the operational surface:

- ``ingest``   edit statements -> graph snapshot, with a per-statement report
- ``answer``   one multi-hop question -> JSON answer record with hop traces
- ``eval``     dataset evaluation -> metrics report (JSON + table)
- ``export``   detector / decomposition training records from a dataset

Exit codes: 0 success, 2 configuration problems, 3 data or validation
problems, 4 backend failures, 5 malformed snapshot or decomposition text.
Flags override values from an optional ``--config`` key=value file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable

from . import kvconfig
from .backends import Backend, BackendConfig, OracleBackend, RemoteBackend, ScriptedBackend
from .detect import DetectorConfig, Detectors, load_paraphrases
from .errors import (
    BackendError,
    ConfigError,
    DecompositionFormatError,
    KGEditError,
    PipelineError,
    SnapshotFormatError,
)
from .extract import AutoExtractor, PatternExtractor, RemoteExtractor, StructuredExtractor, TripleExtractor, ingest_edits, read_edit_statements
from .graph import KnowledgeGraph
from .mquake import (
    EditBatchSpec,
    EvalConfig,
    MQuakeCase,
    build_graph,
    build_oracle,
    evaluate,
    export_decomposition_dataset,
    export_entity_detector_dataset,
    export_relation_detector_dataset,
    load_dataset,
    write_jsonl,
)
from .pipeline import PipelineConfig, answer_multihop

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "ok": 0,
    "config": 2,
    "data": 3,
    "backend": 4,
    "format": 5,
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"config key {key!r} must be a boolean, got {value!r}")


def _file_config(args: argparse.Namespace) -> dict[str, str]:
    path = getattr(args, "config", None)
    return kvconfig.read_kv(path) if path else {}


def _opt(args, cfg: dict[str, str], name: str, default, cast: Callable = str):
    """Flag value if given, else config-file value, else the default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        try:
            return cast(cfg[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {name!r}: bad value {cfg[name]!r}") from exc
    return default


def _cdm_enabled(args, cfg: dict[str, str]) -> bool:
    if getattr(args, "no_cdm", False):
        return False
    if "cdm" in cfg:
        return _parse_bool(cfg["cdm"], "cdm")
    return True


# -- component factories -----------------------------------------------------


def make_backend(
    spec: str,
    cases: list[MQuakeCase] | None = None,
    *,
    model: str = "default",
    timeout: float = 30.0,
) -> Backend:
    """Build a backend from its CLI spec string.

    Forms: ``oracle:post`` / ``oracle:pre`` (world tables derived from the
    dataset), ``oracle:FILE.json`` (explicit question->answer table),
    ``scripted:FILE`` (canned responses), ``remote:URL`` (chat endpoint).
    """
    if spec.startswith("oracle:"):
        what = spec.removeprefix("oracle:")
        if what in {"post", "post_edit", "pre", "pre_edit"}:
            if not cases:
                raise ConfigError(
                    f"backend {spec!r} derives its table from a dataset; pass --dataset"
                )
            world = "post_edit" if what.startswith("post") else "pre_edit"
            return OracleBackend(build_oracle(cases, world))
        if not what:
            raise ConfigError("use oracle:post, oracle:pre or oracle:FILE.json")
        return OracleBackend.from_json_file(what)
    if spec.startswith("scripted:"):
        path = Path(spec.removeprefix("scripted:"))
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read script file {path}: {exc}") from exc
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            payload = [line for line in raw.splitlines() if line.strip()]
        if not isinstance(payload, list):
            raise ConfigError(f"script file {path} must be a JSON list or one response per line")
        return ScriptedBackend(str(item) for item in payload)
    if spec.startswith("remote:"):
        endpoint = spec.removeprefix("remote:")
        config = BackendConfig(
            kind="remote", endpoint=endpoint, model_name=model, timeout=timeout
        )
        return RemoteBackend(config)
    raise ConfigError(
        f"unknown backend {spec!r}: use oracle:post, oracle:pre, oracle:FILE.json, "
        "scripted:FILE or remote:URL"
    )


def make_detectors(args, cfg: dict[str, str]) -> Detectors:
    alpha = _opt(args, cfg, "alpha", DetectorConfig().alpha, float)
    entity_scorer = _opt(args, cfg, "entity_scorer", "lexical")
    relation_scorer = _opt(args, cfg, "relation_scorer", "lexical")
    paraphrases_path = _opt(args, cfg, "paraphrases", None)
    table = load_paraphrases(paraphrases_path) if paraphrases_path else None
    config = DetectorConfig(
        alpha=alpha, entity_scorer=entity_scorer, relation_scorer=relation_scorer
    )
    return Detectors(config, paraphrases=table)


def make_extractor(args, cfg: dict[str, str]) -> TripleExtractor:
    spec = _opt(args, cfg, "extractor", "auto")
    patterns_path = _opt(args, cfg, "patterns", None)
    inverses_path = _opt(args, cfg, "inverses", None)
    patterns = kvconfig.read_kv_multi(patterns_path) if patterns_path else None
    inverses = dict(kvconfig.read_kv_multi(inverses_path)) if inverses_path else None
    if spec == "structured":
        return StructuredExtractor()
    if spec == "pattern":
        return PatternExtractor(patterns, inverses)
    if spec == "auto":
        return AutoExtractor(PatternExtractor(patterns, inverses))
    if spec.startswith("remote:"):
        return RemoteExtractor(spec.removeprefix("remote:"))
    raise ConfigError(
        f"unknown extractor {spec!r}: use auto, pattern, structured or remote:URL"
    )


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(deterministic_retrieval=not getattr(args, "llm_retrieval", False))


# -- subcommands --------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _file_config(args)
    if args.graph_in:
        graph = KnowledgeGraph.load_path(args.graph_in)
        if graph.cdm != _cdm_enabled(args, cfg) and args.no_cdm:
            raise ConfigError("--no-cdm conflicts with the loaded snapshot's mode")
    else:
        graph = KnowledgeGraph(cdm=_cdm_enabled(args, cfg))
    statements, line_errors = read_edit_statements(args.edits)
    for lineno, message in line_errors:
        print(f"line {lineno}: {message}", file=sys.stderr)
    report = ingest_edits(graph, statements, make_extractor(args, cfg))
    print(report.summary())
    for statement, reason in report.failures:
        print(f"failed: {statement.describe()}: {reason}", file=sys.stderr)
    if args.out:
        graph.snapshot_to_path(args.out)
        print(f"graph snapshot written to {args.out}")
    return EXIT_CODES["ok"] if report.ok and not line_errors else EXIT_CODES["data"]


def _find_case(cases: list[MQuakeCase], case_id: int) -> MQuakeCase:
    for case in cases:
        if case.case_id == case_id:
            return case
    raise ConfigError(f"case id {case_id} is not in the dataset")


def cmd_answer(args: argparse.Namespace) -> int:
    cfg = _file_config(args)
    graph = (
        KnowledgeGraph.load_path(args.graph)
        if args.graph
        else KnowledgeGraph(cdm=_cdm_enabled(args, cfg))
    )
    cases = load_dataset(args.dataset) if args.dataset else None
    backend_spec = _opt(args, cfg, "backend", None)
    if backend_spec is None:
        raise ConfigError("answer needs --backend (or 'backend' in the config file)")
    backend = make_backend(backend_spec, cases, model=_opt(args, cfg, "model", "default"))
    plan_source = _opt(args, cfg, "plan_source", "model")
    case = None
    if plan_source == "scripted":
        if cases is None or args.case_id is None:
            raise ConfigError("scripted planning needs --dataset and --case-id")
        case = _find_case(cases, args.case_id)
    record = answer_multihop(
        args.question,
        graph,
        make_detectors(args, cfg),
        backend,
        _pipeline_config(args),
        plan_source=plan_source,
        case=case,
    )
    print(record.to_json())
    return EXIT_CODES["ok"]


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _file_config(args)
    cases = load_dataset(args.dataset)
    if args.limit is not None:
        cases = cases[: args.limit]
    batch_spec = EditBatchSpec.parse(_opt(args, cfg, "k", "all"))
    backend_spec = _opt(args, cfg, "backend", None)
    if backend_spec is None:
        raise ConfigError("eval needs --backend (or 'backend' in the config file)")
    backend = make_backend(backend_spec, cases, model=_opt(args, cfg, "model", "default"))
    config = EvalConfig(
        detectors=make_detectors(args, cfg),
        backend=backend,
        plan_source=_opt(args, cfg, "plan_source", "scripted"),
        pipeline=_pipeline_config(args),
        cdm=_cdm_enabled(args, cfg),
        parallelism=_opt(args, cfg, "parallelism", 1, int),
        keep_records=bool(args.traces),
        metadata={"dataset": Path(args.dataset).name, "backend": backend_spec},
    )
    report = evaluate(cases, batch_spec, config)
    print(report.render_table())
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
        print(f"report written to {args.out}")
    if args.traces:
        rows = (
            {"case_id": outcome.case_id, **record.to_dict()}
            for outcome in report.outcomes
            for record in outcome.records
        )
        count = write_jsonl(rows, args.traces)
        print(f"{count} hop traces written to {args.traces}")
    return EXIT_CODES["ok"]


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _file_config(args)
    cases = load_dataset(args.dataset)
    if args.what in {"entity", "relation"}:
        edits = [rw for case in cases for rw in case.rewrites]
        graph, _ = build_graph(edits, cases, cdm=_cdm_enabled(args, cfg))
    if args.what == "entity":
        records, stats = export_entity_detector_dataset(cases, graph)
        count = write_jsonl(records, args.out)
        print(json.dumps({"records": count, **stats}, sort_keys=True))
    elif args.what == "relation":
        records = export_relation_detector_dataset(cases, graph)
        count = write_jsonl(records, args.out)
        print(json.dumps({"records": count}, sort_keys=True))
    else:
        records = export_decomposition_dataset(cases)
        count = write_jsonl(records, args.out)
        print(json.dumps({"records": count}, sort_keys=True))
    return EXIT_CODES["ok"]


# -- parser -------------------------------------------------------------------


def _add_detector_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha", type=float, default=None, help="retrieval threshold (default 0.5)")
    sub.add_argument("--entity-scorer", dest="entity_scorer", default=None, help="lexical or remote:URL")
    sub.add_argument(
        "--relation-scorer", dest="relation_scorer", default=None, help="lexical, noisy or remote:URL"
    )
    sub.add_argument("--paraphrases", default=None, help="relation paraphrase key=value file")


def _add_backend_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--backend",
        default=None,
        help="oracle:post | oracle:pre | oracle:FILE.json | scripted:FILE | remote:URL",
    )
    sub.add_argument("--model", default=None, help="model name for remote backends")
    sub.add_argument(
        "--llm-retrieval",
        dest="llm_retrieval",
        action="store_true",
        help="phrase retrieved facts through the model instead of answering verbatim",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgedit",
        description="Edit a knowledge graph and answer multi-hop questions against it.",
    )
    parser.add_argument("--config", default=None, help="key=value defaults file")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="apply edit statements to a graph snapshot")
    ingest.add_argument("--edits", required=True, help="line-delimited JSON edit statements")
    ingest.add_argument("--graph-in", dest="graph_in", default=None, help="snapshot to extend")
    ingest.add_argument("--out", default=None, help="where to write the updated snapshot")
    ingest.add_argument("--extractor", default=None, help="auto | pattern | structured | remote:URL")
    ingest.add_argument("--patterns", default=None, help="relation template key=value file")
    ingest.add_argument("--inverses", default=None, help="inverse relation key=value file")
    ingest.add_argument("--no-cdm", dest="no_cdm", action="store_true", help="keep superseded facts")
    ingest.set_defaults(func=cmd_ingest)

    answer = commands.add_parser("answer", help="answer one multi-hop question")
    answer.add_argument("--question", required=True)
    answer.add_argument("--graph", default=None, help="graph snapshot to retrieve from")
    answer.add_argument("--dataset", default=None, help="dataset for oracle worlds / scripted plans")
    answer.add_argument("--case-id", dest="case_id", type=int, default=None)
    answer.add_argument("--plan-source", dest="plan_source", default=None, help="model | scripted")
    answer.add_argument("--no-cdm", dest="no_cdm", action="store_true")
    _add_backend_flags(answer)
    _add_detector_flags(answer)
    answer.set_defaults(func=cmd_answer)

    evaluate_ = commands.add_parser("eval", help="run a dataset and report accuracies")
    evaluate_.add_argument("--dataset", required=True)
    evaluate_.add_argument("--k", default=None, help="edit batch size: an integer or 'all'")
    evaluate_.add_argument("--limit", type=int, default=None, help="evaluate only the first N cases")
    evaluate_.add_argument("--plan-source", dest="plan_source", default=None, help="scripted | model")
    evaluate_.add_argument("--out", default=None, help="write the metrics report JSON here")
    evaluate_.add_argument("--traces", default=None, help="write per-hop traces (LDJSON) here")
    evaluate_.add_argument("--parallelism", type=int, default=None)
    evaluate_.add_argument("--no-cdm", dest="no_cdm", action="store_true", help="ablate conflict removal")
    _add_backend_flags(evaluate_)
    _add_detector_flags(evaluate_)
    evaluate_.set_defaults(func=cmd_eval)

    export = commands.add_parser("export", help="emit detector / decomposition training records")
    export.add_argument("--dataset", required=True)
    export.add_argument("--what", required=True, choices=["entity", "relation", "decomposition"])
    export.add_argument("--out", required=True)
    export.add_argument("--no-cdm", dest="no_cdm", action="store_true")
    export.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CODES["config"])
    except (SnapshotFormatError, DecompositionFormatError) as exc:
        return _fail(exc, EXIT_CODES["format"])
    except PipelineError as exc:
        cause = exc.__cause__
        if isinstance(cause, (SnapshotFormatError, DecompositionFormatError)):
            return _fail(exc, EXIT_CODES["format"])
        if isinstance(cause, BackendError):
            return _fail(exc, EXIT_CODES["backend"])
        return _fail(exc, EXIT_CODES["data"])
    except BackendError as exc:
        return _fail(exc, EXIT_CODES["backend"])
    except KGEditError as exc:
        return _fail(exc, EXIT_CODES["data"])


def _fail(exc: KGEditError, code: int) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
