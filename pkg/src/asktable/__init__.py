"""asktable: question answering over small tables with hop-wise attention."""

from .core import (
    Example,
    Table,
    Triple,
    Vocabulary,
    build_vocabulary,
    encode_bow,
    read_examples_jsonl,
    table_to_triples,
    tokenize,
    write_examples_jsonl,
)
from .datagen import (
    GenerationSpec,
    QuestionTemplate,
    composite_key_spec,
    generate_dataset,
    simple_key_spec,
)
from .disambig import EmbeddingTable, cosine, disambiguate, load_embeddings, vector_for
from .evaluation import (
    EvalResult,
    PerturbationType,
    build_testset,
    evaluate,
    lookup_oracle,
)
from .memnet import (
    MemoryNetwork,
    ModelConfig,
    Prediction,
    TrainReport,
    load_model,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Example",
    "Table",
    "Triple",
    "Vocabulary",
    "build_vocabulary",
    "encode_bow",
    "read_examples_jsonl",
    "table_to_triples",
    "tokenize",
    "write_examples_jsonl",
    "GenerationSpec",
    "QuestionTemplate",
    "composite_key_spec",
    "generate_dataset",
    "simple_key_spec",
    "EmbeddingTable",
    "cosine",
    "disambiguate",
    "load_embeddings",
    "vector_for",
    "EvalResult",
    "PerturbationType",
    "build_testset",
    "evaluate",
    "lookup_oracle",
    "MemoryNetwork",
    "ModelConfig",
    "Prediction",
    "TrainReport",
    "load_model",
    "save_model",
    "train",
    "__version__",
]
