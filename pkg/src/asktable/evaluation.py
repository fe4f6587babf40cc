"""Perturbed test sets and model scoring.

Robustness is probed with four question corruptions: dropping connector
words, reordering words, targeting a column never asked about during
training, and questions whose answer is simply not in the table. The
default protocol builds 8 samples of each kind (32 total) from held-out
base examples, deterministically from a seed.

`lookup_oracle` is the exact relational ground truth used both to
validate generated data and to bound achievable accuracy: inadequate
samples have no oracle answer, so no predictor can score better than
0.25 error on the default test set.

Scoring a frozen model is pure and order-independent across samples.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .core import Example, Triple
from .datagen import GenerationSpec
from .memnet import MemoryNetwork

UNANSWERABLE = "__no_answer__"

SAMPLES_PER_TYPE = 8


class PerturbationType(str, Enum):
    OMIT_WORDS = "omit_words"
    REORDER_WORDS = "reorder_words"
    UNSEEN_COLUMN = "unseen_column"
    INADEQUATE = "inadequate"


class PerturbationError(ValueError):
    """An example cannot be perturbed as requested."""


class ConfigurationError(ValueError):
    """The evaluation protocol is misconfigured (e.g. no reserved column)."""


class EvaluationError(ValueError):
    """Model and test set do not fit together."""


@dataclass(frozen=True)
class QuestionRoles:
    """Question tokens classified against the example's own triples."""

    column_tokens: tuple[str, ...]
    key_tokens: tuple[str, ...]
    connector_positions: tuple[int, ...]


def classify_question_tokens(example: Example) -> QuestionRoles:
    """Split question tokens into column names, key values and connectors.

    A token is a column token if it names a triple column, a key token if
    it matches a cell value or row id, and a connector otherwise. The
    classification is purely structural, so it works on any example
    without generation metadata.
    """
    columns = {t.column for t in example.triples}
    values = {t.value for t in example.triples} | {t.row_id for t in example.triples}
    column_tokens = []
    key_tokens = []
    connectors = []
    for pos, token in enumerate(example.question):
        if token in columns:
            column_tokens.append(token)
        elif token in values:
            key_tokens.append(token)
        else:
            connectors.append(pos)
    return QuestionRoles(tuple(column_tokens), tuple(key_tokens), tuple(connectors))


def lookup_oracle(
    triples: Sequence[Triple], target_column: str, keys: Sequence[str]
) -> set[str]:
    """Exact relational lookup over the triples.

    Returns the values in ``target_column`` of every row matching all
    keys, where a key matches a row if it equals any cell value in that
    row or the row id itself.
    """
    rows: dict[str, dict[str, str]] = {}
    for t in triples:
        triple = Triple(*t)
        rows.setdefault(triple.row_id, {})[triple.column] = triple.value
    results = set()
    for row_id, cells in rows.items():
        haystack = set(cells.values()) | {row_id}
        if all(k in haystack for k in keys) and target_column in cells:
            results.add(cells[target_column])
    return results


def lookup_cells(
    triples: Sequence[Triple], target_column: str, keys: Sequence[str]
) -> list[tuple[str, str]]:
    """Like lookup_oracle but returns (row_id, value) pairs, one per match."""
    rows: dict[str, dict[str, str]] = {}
    for t in triples:
        triple = Triple(*t)
        rows.setdefault(triple.row_id, {})[triple.column] = triple.value
    cells = []
    for row_id, row in rows.items():
        haystack = set(row.values()) | {row_id}
        if all(k in haystack for k in keys) and target_column in row:
            cells.append((row_id, row[target_column]))
    return cells


def perturb_omit(example: Example, rng: np.random.Generator) -> Example:
    """Drop 1-2 connector words from the question; the answer stays valid.

    Only connectors are removed, so the column and key tokens that pin
    down the answer always survive.
    """
    if len(example.question) < 2:
        raise PerturbationError("question too short to omit words from")
    roles = classify_question_tokens(example)
    if not roles.connector_positions:
        raise PerturbationError("question has no connector words to omit")
    n_remove = min(int(rng.integers(1, 3)), len(roles.connector_positions))
    chosen = rng.choice(len(roles.connector_positions), size=n_remove, replace=False)
    removed = {roles.connector_positions[int(i)] for i in chosen}
    question = tuple(t for i, t in enumerate(example.question) if i not in removed)
    return replace(example, question=question, perturbation=PerturbationType.OMIT_WORDS.value)


def perturb_reorder(example: Example, rng: np.random.Generator) -> Example:
    """Apply a non-identity permutation to the question tokens."""
    n = len(example.question)
    if n < 2:
        raise PerturbationError("question too short to reorder")
    perm = rng.permutation(n)
    if np.array_equal(perm, np.arange(n)):
        perm[[0, 1]] = perm[[1, 0]]
    question = tuple(example.question[int(i)] for i in perm)
    return replace(example, question=question, perturbation=PerturbationType.REORDER_WORDS.value)


def perturb_unseen_column(example: Example, held_out_column: str) -> Example:
    """Retarget the question at a column that never appeared in training
    questions; the new answer is that column's cell in the same row."""
    columns_in_table = {t.column for t in example.triples}
    if held_out_column not in columns_in_table:
        raise ConfigurationError(f"held-out column {held_out_column!r} is not in the table")
    roles = classify_question_tokens(example)
    if len(roles.column_tokens) != 1:
        raise PerturbationError(
            f"expected exactly one column token in the question, found {roles.column_tokens}"
        )
    old_column = roles.column_tokens[0]
    if old_column == held_out_column:
        raise PerturbationError("question already targets the held-out column")
    values = lookup_oracle(example.triples, held_out_column, roles.key_tokens)
    if len(values) != 1:
        raise PerturbationError(
            f"held-out lookup is not unique for keys {roles.key_tokens}: {values}"
        )
    question = tuple(held_out_column if t == old_column else t for t in example.question)
    return replace(
        example,
        question=question,
        answer=values.pop(),
        perturbation=PerturbationType.UNSEEN_COLUMN.value,
    )


def make_inadequate(
    example: Example, spec: GenerationSpec, rng: np.random.Generator
) -> Example:
    """Point the question at a key value this table does not contain.

    The result is marked ``adequate=False`` with a sentinel answer outside
    any vocabulary; every prediction on it counts as an error.
    """
    key_column = spec.key_columns[0]
    domain = spec.column(key_column).domain
    present = {t.value for t in example.triples if t.column == key_column}
    absent = [v for v in domain if v not in present]
    if not absent:
        raise PerturbationError(f"every {key_column!r} domain value appears in the table")
    current = [t for t in example.question if t in present]
    if not current:
        raise PerturbationError(f"question has no {key_column!r} key token to replace")
    replacement = absent[int(rng.integers(len(absent)))]
    question = tuple(replacement if t == current[0] else t for t in example.question)
    return Example(
        triples=example.triples,
        question=question,
        answer=UNANSWERABLE,
        adequate=False,
        perturbation=PerturbationType.INADEQUATE.value,
    )


def build_testset(
    base: Sequence[Example], spec: GenerationSpec, seed: int
) -> list[Example]:
    """The default 32-sample perturbed test set: 8 per corruption type.

    ``base`` must be in-distribution examples disjoint from the training
    data; 32 distinct ones are drawn and perturbed deterministically from
    the seed. The result carries a ``perturbation`` field per sample.
    """
    need = 4 * SAMPLES_PER_TYPE
    if len(base) < need:
        raise ValueError(f"need at least {need} base examples, got {len(base)}")
    if not spec.reserved_columns:
        raise ConfigurationError("generation spec reserves no column for unseen-column tests")
    held_out = spec.reserved_columns[0]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 3])))
    order = rng.permutation(len(base))[:need]
    groups = [order[i * SAMPLES_PER_TYPE : (i + 1) * SAMPLES_PER_TYPE] for i in range(4)]
    testset: list[Example] = []
    for i in groups[0]:
        testset.append(perturb_omit(base[int(i)], rng))
    for i in groups[1]:
        testset.append(perturb_reorder(base[int(i)], rng))
    for i in groups[2]:
        testset.append(perturb_unseen_column(base[int(i)], held_out))
    for i in groups[3]:
        testset.append(make_inadequate(base[int(i)], spec, rng))
    return testset


@dataclass(frozen=True)
class SampleResult:
    question: tuple[str, ...]
    perturbation: str | None
    expected: str
    predicted: str
    correct: bool
    confidence: float

    def to_json_dict(self) -> dict:
        return {
            "question": list(self.question),
            "perturbation": self.perturbation,
            "expected": self.expected,
            "predicted": self.predicted,
            "correct": self.correct,
            "confidence": self.confidence,
        }


@dataclass
class EvalResult:
    """Overall error plus per-corruption-type and per-sample breakdowns."""

    overall_error: float
    per_type: dict[str, tuple[int, int]]  # type -> (errors, total)
    per_sample: list[SampleResult]

    def to_json_dict(self) -> dict:
        return {
            "overall_error": self.overall_error,
            "per_type": {k: {"errors": e, "total": t} for k, (e, t) in self.per_type.items()},
            "per_sample": [s.to_json_dict() for s in self.per_sample],
        }

    def format_table(self, task: str, training_set: int | str, epochs: int | str) -> str:
        header = f"{'Task':<16} {'Test Error':>10} {'Training Set':>13} {'Epochs':>7}"
        row = f"{task:<16} {self.overall_error:>10.2f} {str(training_set):>13} {str(epochs):>7}"
        lines = [header, "-" * len(header), row, "", "Per corruption type:"]
        for name, (errors, total) in sorted(self.per_type.items()):
            lines.append(f"  {name:<16} {errors}/{total} incorrect")
        return "\n".join(lines)


Predictor = Callable[[Example], tuple[str, float]]


def oracle_predictor(example: Example) -> tuple[str, float]:
    """Answer by exact relational lookup; the achievable-accuracy bound.

    Returns the unique oracle value when one exists, otherwise the
    unanswerable sentinel (ambiguous or empty lookups cannot be answered).
    """
    roles = classify_question_tokens(example)
    if len(roles.column_tokens) != 1:
        return UNANSWERABLE, 1.0
    values = lookup_oracle(example.triples, roles.column_tokens[0], roles.key_tokens)
    if len(values) == 1:
        return values.pop(), 1.0
    return UNANSWERABLE, 1.0


def evaluate(model: MemoryNetwork | Predictor, testset: Sequence[Example]) -> EvalResult:
    """Score a model (or any predictor callable) on a test set.

    A sample is correct when the prediction equals its answer token;
    inadequate samples are incorrect by definition. Confidence is the
    maximum of the answer distribution.
    """
    if not testset:
        raise ValueError("test set is empty")
    if isinstance(model, MemoryNetwork):
        for example in testset:
            if example.adequate and example.answer not in model.vocab:
                raise EvaluationError(
                    f"expected answer {example.answer!r} is not in the model vocabulary"
                )

        def predict(example: Example) -> tuple[str, float]:
            prediction = model.forward(example)
            return prediction.answer_token, prediction.confidence

    else:
        predict = model

    per_sample: list[SampleResult] = []
    counts: dict[str, list[int]] = {}
    for example in testset:
        predicted, confidence = predict(example)
        correct = bool(example.adequate and predicted == example.answer)
        kind = example.perturbation or "none"
        errors_total = counts.setdefault(kind, [0, 0])
        errors_total[1] += 1
        if not correct:
            errors_total[0] += 1
        per_sample.append(
            SampleResult(
                question=example.question,
                perturbation=example.perturbation,
                expected=example.answer,
                predicted=predicted,
                correct=correct,
                confidence=confidence,
            )
        )
    total = len(per_sample)
    errors = sum(1 for s in per_sample if not s.correct)
    return EvalResult(
        overall_error=errors / total,
        per_type={k: (e, t) for k, (e, t) in counts.items()},
        per_sample=per_sample,
    )
