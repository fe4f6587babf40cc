"""Domain types and encodings for question answering over small tables.

A table is decomposed into (row-id, column, value) triples, one memory
slot per triple. Questions and triples are embedded as bag-of-words count
vectors over a shared vocabulary, so word order never matters downstream.
All types here are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
import string
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

_EDGE_PUNCTUATION = string.punctuation


class TableStructureError(ValueError):
    """A table is malformed: missing cells, duplicate or empty columns."""


class DataFormatError(ValueError):
    """A dataset file or record cannot be parsed."""


def tokenize(text: str) -> list[str]:
    """Split free text into lowercase tokens.

    Splits on whitespace and strips leading/trailing punctuation from each
    piece; internal punctuation (underscores, hyphens) is preserved, so
    "Emigration_Total" stays one token. Pieces that are empty after
    stripping are dropped. Deterministic; empty input gives an empty list.
    """
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_EDGE_PUNCTUATION)
        if token:
            tokens.append(token)
    return tokens


def normalize_token(text: str) -> str:
    """Normalize a cell value or column header to a single token.

    Lowercases and joins interior whitespace with underscores, so
    "Emigration Total" becomes "emigration_total" and every cell stays a
    single answer token.
    """
    joined = "_".join(text.lower().split())
    return joined.strip(_EDGE_PUNCTUATION)


def _require_single_token(token: str, what: str) -> None:
    if not token or normalize_token(token) != token:
        raise TableStructureError(f"{what} {token!r} is not a normalized single token")


def row_id_token(row_index: int) -> str:
    """Row-identifier token for a 0-based row index: 0 -> "row1"."""
    return f"row{row_index + 1}"


class Triple(NamedTuple):
    """One (row-id, column, value) unit of a decomposed table."""

    row_id: str
    column: str
    value: str


@dataclass(frozen=True)
class Table:
    """An ordered table of single-token cells.

    ``rows[i][j]`` holds the value of ``columns[j]`` in row ``i``. Column
    names are unique and every row covers every column exactly once.
    """

    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if not self.columns:
            raise TableStructureError("table has no columns")
        if len(set(self.columns)) != len(self.columns):
            raise TableStructureError("duplicate column names")
        for name in self.columns:
            _require_single_token(name, "column name")
        for i, row in enumerate(self.rows):
            if len(row) < len(self.columns):
                missing = self.columns[len(row)]
                raise TableStructureError(
                    f"row {i + 1} is missing a value for column {missing!r}"
                )
            if len(row) > len(self.columns):
                raise TableStructureError(
                    f"row {i + 1} has {len(row)} values for {len(self.columns)} columns"
                )
            for j, value in enumerate(row):
                if not value:
                    raise TableStructureError(
                        f"row {i + 1} is missing a value for column {self.columns[j]!r}"
                    )
                _require_single_token(value, f"cell value in row {i + 1}")

    @classmethod
    def ingest(cls, columns: Sequence[str], rows: Sequence[Sequence[str]]) -> Table:
        """Build a table from raw text headers and cells, normalizing each.

        Multiword headers and values are underscore-joined; everything is
        lowercased. Raises TableStructureError when a cell is missing.
        """
        norm_columns = [normalize_token(str(c)) for c in columns]
        norm_rows = []
        for i, row in enumerate(rows):
            if len(row) != len(norm_columns):
                j = min(len(row), len(norm_columns) - 1)
                raise TableStructureError(
                    f"row {i + 1} is missing a value for column {norm_columns[j]!r}"
                    if len(row) < len(norm_columns)
                    else f"row {i + 1} has {len(row)} values for {len(norm_columns)} columns"
                )
            norm_rows.append(tuple(normalize_token(str(v)) for v in row))
        return cls(tuple(norm_columns), tuple(norm_rows))

    @classmethod
    def from_records(cls, columns: Sequence[str], records: Sequence[Mapping[str, str]]) -> Table:
        """Build a table from per-row column->value mappings."""
        rows = []
        for i, record in enumerate(records):
            row = []
            for column in columns:
                if column not in record:
                    raise TableStructureError(
                        f"row {i + 1} is missing a value for column {column!r}"
                    )
                row.append(record[column])
            rows.append(tuple(row))
        return cls(tuple(columns), tuple(rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def cell(self, row_index: int, column: str) -> str:
        return self.rows[row_index][self.columns.index(column)]

    def to_json_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> Table:
        try:
            return cls(tuple(data["columns"]), tuple(tuple(r) for r in data["rows"]))
        except (KeyError, TypeError) as exc:
            raise DataFormatError(f"malformed table document: {exc}") from exc


def table_to_triples(table: Table) -> list[Triple]:
    """Decompose a table into row-major (row-id, column, value) triples.

    Row i (0-based) gets the identifier token ``row<i+1>``; the result has
    exactly ``n_rows * n_columns`` triples, each row's cells in table
    column order.
    """
    triples = []
    for i, row in enumerate(table.rows):
        rid = row_id_token(i)
        for column, value in zip(table.columns, row):
            triples.append(Triple(rid, column, value))
    return triples


def reconstruct_table(triples: Sequence[Triple]) -> Table:
    """Rebuild the table a row-major triple list was produced from.

    Inverse of ``table_to_triples``: column order is first appearance,
    rows are ordered by their numeric row-id suffix. Raises
    TableStructureError if the triples do not form a complete grid.
    """
    columns: list[str] = []
    cells: dict[str, dict[str, str]] = {}
    for t in triples:
        triple = Triple(*t)
        if triple.column not in columns:
            columns.append(triple.column)
        row = cells.setdefault(triple.row_id, {})
        if triple.column in row:
            raise TableStructureError(
                f"duplicate cell for ({triple.row_id}, {triple.column})"
            )
        row[triple.column] = triple.value
    try:
        order = sorted(cells, key=lambda rid: int(rid.removeprefix("row")))
    except ValueError as exc:
        raise TableStructureError(f"non-numeric row id in triples: {exc}") from exc
    expected = [row_id_token(i) for i in range(len(order))]
    if order != expected:
        raise TableStructureError(f"row ids {order} are not consecutive row1..row{len(order)}")
    return Table.from_records(columns, [cells[rid] for rid in order])


class Vocabulary:
    """Deterministic bidirectional token <-> index map.

    Tokens are stored sorted lexicographically, so the same token set
    always yields the same indexing regardless of input order. The index
    positions double as coordinates of the answer softmax.
    """

    __slots__ = ("_tokens", "_index")

    def __init__(self, tokens: Iterable[str]):
        ordered = tuple(sorted(set(tokens)))
        if not ordered:
            raise ValueError("vocabulary cannot be empty")
        self._tokens = ordered
        self._index = {token: i for i, token in enumerate(ordered)}

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    def index(self, token: str) -> int:
        return self._index[token]

    def get(self, token: str) -> int | None:
        return self._index.get(token)

    def token(self, index: int) -> str:
        return self._tokens[index]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __iter__(self):
        return iter(self._tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __hash__(self) -> int:
        return hash(self._tokens)

    def __repr__(self) -> str:
        return f"Vocabulary({len(self._tokens)} tokens)"


@dataclass(frozen=True)
class Example:
    """One training or evaluation unit: table triples, question, answer.

    ``adequate=False`` marks questions whose answer is not present in the
    given table; those are exempt from the answer-in-table check and are
    always scored as unanswerable.
    """

    triples: tuple[Triple, ...]
    question: tuple[str, ...]
    answer: str
    adequate: bool = True
    perturbation: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(Triple(*t) for t in self.triples))
        object.__setattr__(self, "question", tuple(self.question))
        if not self.triples:
            raise ValueError("example has no triples")
        if self.adequate and self.answer not in {t.value for t in self.triples}:
            raise ValueError(
                f"answer {self.answer!r} does not appear as a cell value in the triples"
            )

    def to_json_dict(self) -> dict:
        data = {
            "triples": [list(t) for t in self.triples],
            "question": list(self.question),
            "answer": self.answer,
            "adequate": self.adequate,
        }
        if self.perturbation is not None:
            data["perturbation"] = self.perturbation
        return data

    @classmethod
    def from_json_dict(cls, data: Mapping) -> Example:
        try:
            triples = tuple(Triple(*t) for t in data["triples"])
            question = tuple(str(t) for t in data["question"])
            answer = str(data["answer"])
        except (KeyError, TypeError) as exc:
            raise DataFormatError(f"malformed example record: {exc}") from exc
        return cls(
            triples=triples,
            question=question,
            answer=answer,
            adequate=bool(data.get("adequate", True)),
            perturbation=data.get("perturbation"),
        )


def example_to_json_line(example: Example) -> str:
    return json.dumps(example.to_json_dict(), ensure_ascii=True)


def dumps_examples_jsonl(examples: Iterable[Example]) -> str:
    """Serialize examples to JSON Lines text (one example per line)."""
    return "".join(example_to_json_line(e) + "\n" for e in examples)


def write_examples_jsonl(path: str | Path, examples: Iterable[Example]) -> None:
    Path(path).write_text(dumps_examples_jsonl(examples), encoding="utf-8", newline="\n")


def read_examples_jsonl(path: str | Path) -> list[Example]:
    """Load a JSON Lines dataset, reporting the line number on bad records."""
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                examples.append(Example.from_json_dict(record))
            except (DataFormatError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return examples


def build_vocabulary(examples: Sequence[Example]) -> Vocabulary:
    """Collect every token of every example into one sorted vocabulary.

    The union covers triple fields (row ids included), question tokens and
    answers, so anything the training data mentions can be encoded and
    emitted by the answer softmax.
    """
    if not examples:
        raise ValueError("cannot build a vocabulary from zero examples")
    tokens: set[str] = set()
    for example in examples:
        for triple in example.triples:
            tokens.update(triple)
        tokens.update(example.question)
        tokens.add(example.answer)
    return Vocabulary(tokens)


def encode_bow(tokens: Iterable[str], vocab: Vocabulary) -> tuple[np.ndarray, list[str]]:
    """Count tokens into a dense vector of length ``len(vocab)``.

    Out-of-vocabulary tokens are skipped, not errors; they come back in the
    side list so callers can surface or resolve them. The vector entries
    are non-negative integers stored as float64 for direct use in matrix
    arithmetic.
    """
    vec = np.zeros(len(vocab), dtype=np.float64)
    skipped = []
    for token in tokens:
        i = vocab.get(token)
        if i is None:
            skipped.append(token)
        else:
            vec[i] += 1.0
    return vec, skipped
