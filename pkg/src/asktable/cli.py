"""Command-line entry point: gen, train, eval, ask, serve.

Every subcommand accepts ``--config FILE`` (YAML with generation/model/
disambig/service sections); command-line flags override file values and
the effective configuration is echoed to stderr before work starts, so a
run is reproducible from its flags, config and seeds alone.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import yaml

from .core import (
    DataFormatError,
    Example,
    Table,
    TableStructureError,
    build_vocabulary,
    read_examples_jsonl,
    table_to_triples,
    tokenize,
    write_examples_jsonl,
)
from .datagen import GenerationError, default_spec, generate_dataset
from .disambig import DEFAULT_THRESHOLD, disambiguate, load_embeddings
from .evaluation import UNANSWERABLE, EvaluationError, evaluate, oracle_predictor
from .memnet import (
    CheckpointError,
    MemoryNetwork,
    ModelConfig,
    TrainingError,
    load_model,
    save_model,
    train,
)
from .resources import default_embeddings_path
from .service import create_app, load_state

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_MODEL_KEYS = {f.name for f in dataclass_fields(ModelConfig)}
_CONFIG_SCHEMA = {
    "generation": {"task", "n_examples", "seed", "rows_per_table", "n_values_per_column", "templates"},
    "model": _MODEL_KEYS,
    "disambig": {"threshold", "embeddings", "subwords"},
    "service": {"host", "port", "model", "testset", "tables", "webui"},
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_config(path: str | None) -> dict:
    """Read and validate the YAML config file; unknown keys are rejected."""
    if path is None:
        return {}
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    try:
        data = yaml.safe_load(raw) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"invalid config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a mapping of sections")
    for section, values in data.items():
        if section not in _CONFIG_SCHEMA:
            raise UsageError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise UsageError(f"config section {section!r} must be a mapping")
        unknown = set(values) - _CONFIG_SCHEMA[section]
        if unknown:
            raise UsageError(f"unknown config key(s) in {section!r}: {sorted(unknown)}")
    return data


def _echo_config(config: dict) -> None:
    print("effective configuration:", file=sys.stderr)
    dumped = yaml.safe_dump(config, sort_keys=True, default_flow_style=False)
    for line in dumped.rstrip().splitlines():
        print(f"  {line}", file=sys.stderr)


def _merged(config: dict, section: str, overrides: dict) -> dict:
    merged = dict(config.get(section, {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


# -- subcommands ---------------------------------------------------------


def cmd_gen(args) -> int:
    config = load_config(args.config)
    gen = _merged(config, "generation", {
        "task": {"simple": "simple_key", "composite": "composite_key"}.get(args.task, args.task),
        "n_examples": args.n,
        "seed": args.seed,
    })
    kwargs = {}
    for key in ("rows_per_table", "n_values_per_column"):
        if key in gen:
            kwargs[key] = int(gen[key])
    if "templates" in gen:
        kwargs["templates"] = tuple(gen["templates"])
    try:
        spec = default_spec(gen["task"], int(gen["n_examples"]), int(gen["seed"]), **kwargs)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"invalid generation spec: {exc}") from exc
    _echo_config({"generation": {**gen, "task": spec.task}})
    examples = generate_dataset(spec)
    write_examples_jsonl(args.out, examples)
    vocab = build_vocabulary(examples)
    print(f"wrote {len(examples)} examples to {args.out}")
    print(f"vocabulary size: {len(vocab)}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = load_config(args.config)
    model_section = _merged(config, "model", {
        "seed": args.seed,
        "max_epochs": args.max_epochs,
    })
    try:
        model_config = ModelConfig(**model_section)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid model config: {exc}") from exc
    _echo_config({"model": model_config.to_json_dict(), "data": {"path": args.data}})
    examples = read_examples_jsonl(args.data)
    if not examples:
        raise DataFormatError(f"{args.data}: dataset is empty")
    vocab = build_vocabulary(examples)
    model = MemoryNetwork.init(model_config, vocab)
    report = train(
        model, examples, progress=lambda r: print(r.format_line(), file=sys.stderr)
    )
    meta = {
        "train_examples": len(examples),
        "epochs": report.total_epochs,
        "final_val_acc": report.final_val_acc,
        "task": config.get("generation", {}).get("task", "unknown"),
    }
    save_model(model, args.out, meta=meta)
    report_path = Path(f"{args.out}.report.json")
    report_path.write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"checkpoint written to {args.out}")
    print(f"training report written to {report_path}")
    print(
        f"epochs: {report.total_epochs} (linear start ended at "
        f"{report.linear_start_end_epoch}), final val acc: {report.final_val_acc:.4f}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    testset = read_examples_jsonl(args.testset)
    if args.oracle:
        predictor = oracle_predictor
        task, train_n, epochs = "oracle", "-", "-"
        _echo_config({"eval": {"testset": args.testset, "oracle": True}})
    else:
        model = load_model(args.model)
        predictor = model
        task = str(model.meta.get("task", "unknown"))
        train_n = model.meta.get("train_examples", "-")
        epochs = model.meta.get("epochs", "-")
        _echo_config({"eval": {"model": args.model, "testset": args.testset}})
    result = evaluate(predictor, testset)
    print(result.format_table(task, train_n, epochs))
    if args.report:
        Path(args.report).write_text(
            json.dumps(result.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"report written to {args.report}")
    return EXIT_OK


def _render_attention(prediction) -> str:
    hops = prediction.attention.shape[0]
    header = f"{'triple':<36}" + "".join(f"  hop{k + 1:<9}" for k in range(hops))
    lines = [header]
    for i, triple in enumerate(prediction.memory_slots):
        label = " ".join(triple)
        cells = []
        for k in range(hops):
            w = float(prediction.attention[k, i])
            bar = "#" * max(0, min(8, round(w * 8)))
            cells.append(f"  {w:6.3f} {bar:<8}"[:13])
        lines.append(f"{label:<36}" + "".join(cells))
    return "\n".join(lines)


def cmd_ask(args) -> int:
    config = load_config(args.config)
    disambig_cfg = config.get("disambig", {})
    threshold = float(disambig_cfg.get("threshold", DEFAULT_THRESHOLD))
    embeddings_path = disambig_cfg.get("embeddings", default_embeddings_path())
    if not args.question.strip():
        raise UsageError("question must not be empty")
    model = load_model(args.model)
    try:
        table_doc = json.loads(Path(args.table).read_text(encoding="utf-8"))
        table = Table.ingest(table_doc["columns"], table_doc["rows"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataFormatError(f"cannot read table file {args.table}: {exc}") from exc
    _echo_config({
        "ask": {"model": args.model, "table": args.table},
        "disambig": {"threshold": threshold, "embeddings": str(embeddings_path)},
    })
    embeddings = load_embeddings(embeddings_path, disambig_cfg.get("subwords"))
    tokens = tokenize(args.question)
    mapped, report = disambiguate(tokens, model.vocab, embeddings, threshold=threshold)
    if not mapped:
        raise UsageError("question is empty after disambiguation")
    example = Example(
        triples=tuple(table_to_triples(table)),
        question=tuple(mapped),
        answer=UNANSWERABLE,
        adequate=False,
    )
    prediction = model.forward(example)
    print(f"answer: {prediction.answer_token}")
    print(f"confidence: {prediction.confidence:.4f}")
    print("disambiguation:")
    for entry in report:
        if entry.status == "mapped":
            print(f"  {entry.token} -> {entry.mapped_to} (similarity {entry.similarity:.2f})")
        elif entry.status == "dropped":
            best = "none" if entry.best_similarity is None else f"{entry.best_similarity:.2f}"
            print(f"  {entry.token} dropped (best similarity {best})")
        else:
            print(f"  {entry.token} in vocabulary")
    print(_render_attention(prediction))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    config = load_config(args.config)
    service_cfg = _merged(config, "service", {
        "model": args.model,
        "port": args.port,
        "testset": args.testset,
        "tables": args.tables,
        "webui": args.webui,
    })
    disambig_cfg = config.get("disambig", {})
    if "model" not in service_cfg or service_cfg["model"] is None:
        raise UsageError("serve needs --model or a service.model config entry")
    _echo_config({"service": service_cfg, "disambig": disambig_cfg})
    state = load_state(
        service_cfg["model"],
        embeddings_path=disambig_cfg.get("embeddings"),
        subwords_path=disambig_cfg.get("subwords"),
        testset_path=service_cfg.get("testset"),
        tables_path=service_cfg.get("tables"),
        threshold=float(disambig_cfg.get("threshold", DEFAULT_THRESHOLD)),
        webui_dir=service_cfg.get("webui"),
    )
    app = create_app(state)
    print(
        f"serving model (vocab={len(state.model.vocab)}, hops={state.model.n_hops}) "
        f"on port {service_cfg.get('port', 8000)}",
        file=sys.stderr,
    )
    uvicorn.run(app, host=service_cfg.get("host", "127.0.0.1"), port=int(service_cfg.get("port", 8000)))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="asktable", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a templated question answering dataset")
    p_gen.add_argument("--task", required=True, choices=["simple", "composite"])
    p_gen.add_argument("--n", type=int, required=True, help="number of examples")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True, help="output JSONL path")
    p_gen.add_argument("--config", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_train = sub.add_parser("train", help="train a model on a JSONL dataset")
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--max-epochs", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a model on a perturbed test set")
    p_eval.add_argument("--model", default=None)
    p_eval.add_argument("--testset", required=True)
    p_eval.add_argument("--report", default=None, help="write the JSON report here")
    p_eval.add_argument("--oracle", action="store_true", help="score the exact lookup oracle instead")
    p_eval.add_argument("--config", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_ask = sub.add_parser("ask", help="answer one question about a table")
    p_ask.add_argument("--model", required=True)
    p_ask.add_argument("--table", required=True, help="JSON table document")
    p_ask.add_argument("--question", required=True)
    p_ask.add_argument("--config", default=None)
    p_ask.set_defaults(func=cmd_ask)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--model", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--testset", default=None)
    p_serve.add_argument("--tables", default=None)
    p_serve.add_argument("--webui", default=None, help="static frontend directory to serve at /")
    p_serve.add_argument("--config", default=None)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and not args.oracle and not args.model:
        parser.error("eval needs --model (or --oracle)")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, TableStructureError, CheckpointError, EvaluationError,
            GenerationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
