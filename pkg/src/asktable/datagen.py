"""Seeded generation of templated table question answering datasets.

Two task flavors:

* ``simple_key``: a single key column uniquely identifies each row.
* ``composite_key``: two columns jointly identify a row while neither
  does alone, which forces a learner to attend to both.

Each example gets a fresh table, a target cell, and a question rendered
from one of (at least) two templates chosen uniformly at random. All
randomness flows through one numpy PCG64 generator seeded from the spec,
and the draw order is fixed, so a spec reproduces its dataset byte for
byte. Parallel generation is only safe by splitting distinct seeds per
chunk; a single generator stream must not be shared across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import Example, Table, normalize_token, table_to_triples

TASK_SIMPLE = "simple_key"
TASK_COMPOSITE = "composite_key"

# Default domains: 10 values per column, pairwise disjoint so every token
# maps to exactly one column. Five columns of 10 values plus 5 column
# names, 4 row ids and 6 question words give a 65-token vocabulary.
DEFAULT_CITIES = (
    "bregenz", "eisenstadt", "graz", "innsbruck", "klagenfurt",
    "linz", "salzburg", "vienna", "villach", "wels",
)
DEFAULT_YEARS = tuple(str(y) for y in range(2007, 2017))
DEFAULT_IMMIGRATION = ("110", "130", "150", "170", "190", "210", "230", "250", "270", "290")
DEFAULT_EMIGRATION = ("100", "120", "140", "160", "180", "200", "220", "240", "260", "280")
DEFAULT_POPULATION = tuple(str(1000 * k) for k in range(1, 11))
DEFAULT_AREA = ("15", "25", "35", "45", "55", "65", "75", "85", "95", "105")

DEFAULT_SIMPLE_TEMPLATES = (
    "what is the {column} in {key1}",
    "what was the {column} for {key1}",
)
DEFAULT_COMPOSITE_TEMPLATES = (
    "what was the {column} in {key1} in {key2}",
    "what is the {column} for {key1} in {key2}",
)

_SLOT_RE = re.compile(r"^\{(column|key[0-9]+)\}$")


class GenerationError(RuntimeError):
    """Raised when a table satisfying the task constraints cannot be built."""


class TemplateError(ValueError):
    """Raised for malformed question templates or slot/key mismatches."""


@dataclass(frozen=True)
class QuestionTemplate:
    """A question pattern with one {column} slot and ordered {keyN} slots.

    Example: ``"what is the {column} in {key1}"``. Rendering substitutes
    the target column token and the key tokens; every slot must be filled
    exactly once.
    """

    pattern: str

    def __post_init__(self):
        slots = [m.group(1) for m in map(_SLOT_RE.match, self.pattern.split()) if m]
        if slots.count("column") != 1:
            raise TemplateError(f"template {self.pattern!r} needs exactly one {{column}} slot")
        keys = sorted(s for s in slots if s.startswith("key"))
        expected = [f"key{i + 1}" for i in range(len(keys))]
        if keys != expected or len(set(slots)) != len(slots):
            raise TemplateError(
                f"template {self.pattern!r} must use each slot once, keys numbered key1.."
            )
        for word in self.pattern.split():
            if not _SLOT_RE.match(word) and normalize_token(word) != word:
                raise TemplateError(f"template word {word!r} is not a normalized token")

    @property
    def n_key_slots(self) -> int:
        return sum(1 for w in self.pattern.split() if _SLOT_RE.match(w) and w != "{column}")

    def render(self, target_column: str, keys: tuple[str, ...] | list[str]) -> list[str]:
        """Fill the slots and return the question token list."""
        if len(keys) != self.n_key_slots:
            raise TemplateError(
                f"template {self.pattern!r} has {self.n_key_slots} key slots, got {len(keys)} keys"
            )
        out = []
        for word in self.pattern.split():
            match = _SLOT_RE.match(word)
            if match is None:
                out.append(word)
            elif match.group(1) == "column":
                out.append(target_column)
            else:
                out.append(keys[int(match.group(1)[3:]) - 1])
        return out


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    domain: tuple[str, ...]


@dataclass(frozen=True)
class GenerationSpec:
    """Everything needed to reproduce a dataset: layout, sizes and seed.

    ``reserved_columns`` exist in every table but are never targeted by a
    generated question; evaluation uses them to probe columns unseen at
    training time.
    """

    task: str
    columns: tuple[ColumnSpec, ...]
    key_columns: tuple[str, ...]
    n_examples: int
    seed: int
    reserved_columns: tuple[str, ...] = ()
    rows_per_table: int = 4
    n_values_per_column: int = 10
    templates: tuple[QuestionTemplate, ...] = ()

    def __post_init__(self):
        if self.task not in (TASK_SIMPLE, TASK_COMPOSITE):
            raise ValueError(f"unknown task {self.task!r}")
        if self.n_examples < 1:
            raise ValueError("n_examples must be positive")
        if self.rows_per_table < 1:
            raise ValueError("rows_per_table must be positive")
        if len(self.templates) < 2:
            raise ValueError("at least 2 question templates are required")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names in spec")
        expected_keys = 1 if self.task == TASK_SIMPLE else 2
        if len(self.key_columns) != expected_keys:
            raise ValueError(f"{self.task} needs exactly {expected_keys} key column(s)")
        for key in self.key_columns:
            if key not in names:
                raise ValueError(f"key column {key!r} is not a spec column")
        for reserved in self.reserved_columns:
            if reserved not in names or reserved in self.key_columns:
                raise ValueError(f"reserved column {reserved!r} must be a non-key column")
        if not self.askable_columns:
            raise ValueError("no targetable columns left after keys and reservations")
        for col in self.columns:
            if len(col.domain) != self.n_values_per_column:
                raise ValueError(
                    f"column {col.name!r} has {len(col.domain)} values, "
                    f"expected {self.n_values_per_column}"
                )
            if len(set(col.domain)) != len(col.domain):
                raise ValueError(f"column {col.name!r} has duplicate domain values")
        for key in self.key_columns:
            if self.n_values_per_column < self.rows_per_table:
                raise ValueError(
                    f"key column {key!r} needs at least {self.rows_per_table} distinct values"
                )
        for template in self.templates:
            if template.n_key_slots != len(self.key_columns):
                raise ValueError(
                    f"template {template.pattern!r} has {template.n_key_slots} key slots, "
                    f"task uses {len(self.key_columns)} key column(s)"
                )

    @property
    def askable_columns(self) -> tuple[str, ...]:
        """Columns a generated question may target: non-key, non-reserved."""
        excluded = set(self.key_columns) | set(self.reserved_columns)
        return tuple(c.name for c in self.columns if c.name not in excluded)

    def column(self, name: str) -> ColumnSpec:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)


def _clip_domain(domain: tuple[str, ...], n: int, name: str) -> tuple[str, ...]:
    if n > len(domain):
        raise ValueError(
            f"default domain for {name!r} only provides {len(domain)} values, requested {n}"
        )
    return domain[:n]


def simple_key_spec(
    n_examples: int,
    seed: int,
    *,
    rows_per_table: int = 4,
    n_values_per_column: int = 10,
    templates: tuple[str, ...] | None = None,
) -> GenerationSpec:
    """Default simple-key layout: city identifies the row.

    Questions target immigration, population or area; emigration_total is
    reserved for unseen-column evaluation.
    """
    n = n_values_per_column
    columns = (
        ColumnSpec("city", _clip_domain(DEFAULT_CITIES, n, "city")),
        ColumnSpec("immigration", _clip_domain(DEFAULT_IMMIGRATION, n, "immigration")),
        ColumnSpec("emigration_total", _clip_domain(DEFAULT_EMIGRATION, n, "emigration_total")),
        ColumnSpec("population", _clip_domain(DEFAULT_POPULATION, n, "population")),
        ColumnSpec("area", _clip_domain(DEFAULT_AREA, n, "area")),
    )
    return GenerationSpec(
        task=TASK_SIMPLE,
        columns=columns,
        key_columns=("city",),
        reserved_columns=("emigration_total",),
        n_examples=n_examples,
        seed=seed,
        rows_per_table=rows_per_table,
        n_values_per_column=n,
        templates=tuple(QuestionTemplate(p) for p in (templates or DEFAULT_SIMPLE_TEMPLATES)),
    )


def composite_key_spec(
    n_examples: int,
    seed: int,
    *,
    rows_per_table: int = 4,
    n_values_per_column: int = 10,
    templates: tuple[str, ...] | None = None,
) -> GenerationSpec:
    """Default composite-key layout: (city, year) identifies the row."""
    n = n_values_per_column
    columns = (
        ColumnSpec("city", _clip_domain(DEFAULT_CITIES, n, "city")),
        ColumnSpec("year", _clip_domain(DEFAULT_YEARS, n, "year")),
        ColumnSpec("immigration", _clip_domain(DEFAULT_IMMIGRATION, n, "immigration")),
        ColumnSpec("emigration_total", _clip_domain(DEFAULT_EMIGRATION, n, "emigration_total")),
        ColumnSpec("population", _clip_domain(DEFAULT_POPULATION, n, "population")),
    )
    return GenerationSpec(
        task=TASK_COMPOSITE,
        columns=columns,
        key_columns=("city", "year"),
        reserved_columns=("emigration_total",),
        n_examples=n_examples,
        seed=seed,
        rows_per_table=rows_per_table,
        n_values_per_column=n,
        templates=tuple(QuestionTemplate(p) for p in (templates or DEFAULT_COMPOSITE_TEMPLATES)),
    )


def default_spec(task: str, n_examples: int, seed: int, **kwargs) -> GenerationSpec:
    if task == TASK_SIMPLE:
        return simple_key_spec(n_examples, seed, **kwargs)
    if task == TASK_COMPOSITE:
        return composite_key_spec(n_examples, seed, **kwargs)
    raise ValueError(f"unknown task {task!r}")


def _pick(rng: np.random.Generator, domain: tuple[str, ...]) -> str:
    return domain[int(rng.integers(len(domain)))]


def _pick_excluding(rng: np.random.Generator, domain: tuple[str, ...], taken: str) -> str:
    choices = [v for v in domain if v != taken]
    return choices[int(rng.integers(len(choices)))]


def generate_table_simple(spec: GenerationSpec, rng: np.random.Generator) -> Table:
    """One table for the simple-key task.

    The key column gets pairwise-distinct values (a uniform sample without
    replacement); every other cell is drawn uniformly from its column
    domain and may repeat across rows.
    """
    if spec.task != TASK_SIMPLE:
        raise GenerationError(f"spec task is {spec.task!r}, expected {TASK_SIMPLE!r}")
    key = spec.key_columns[0]
    key_domain = spec.column(key).domain
    if spec.rows_per_table > len(key_domain):
        raise GenerationError(
            f"cannot draw {spec.rows_per_table} distinct values from "
            f"{len(key_domain)} for key column {key!r}"
        )
    cells: dict[str, list[str]] = {}
    for col in spec.columns:
        if col.name == key:
            idx = rng.choice(len(col.domain), size=spec.rows_per_table, replace=False)
            cells[col.name] = [col.domain[int(i)] for i in idx]
        else:
            idx = rng.integers(len(col.domain), size=spec.rows_per_table)
            cells[col.name] = [col.domain[int(i)] for i in idx]
    rows = tuple(
        tuple(cells[col.name][r] for col in spec.columns) for r in range(spec.rows_per_table)
    )
    return Table(tuple(c.name for c in spec.columns), rows)


def generate_table_composite(
    spec: GenerationSpec, rng: np.random.Generator
) -> tuple[Table, int]:
    """One table for the composite-key task, plus its target row index.

    Rows are unique on the (key1, key2) pair. The target row shares its
    key1 value with at least one other row and its key2 value with at
    least one other, so neither key column alone identifies it.
    """
    if spec.task != TASK_COMPOSITE:
        raise GenerationError(f"spec task is {spec.task!r}, expected {TASK_COMPOSITE!r}")
    if spec.rows_per_table < 3:
        raise GenerationError("composite-key overlap needs at least 3 rows per table")
    key1, key2 = spec.key_columns
    dom1 = spec.column(key1).domain
    dom2 = spec.column(key2).domain
    if spec.rows_per_table > len(dom1) * len(dom2):
        raise GenerationError("rows_per_table exceeds the number of distinct key pairs")

    # Target pair, then one row overlapping in each key.
    c0 = _pick(rng, dom1)
    y0 = _pick(rng, dom2)
    y1 = _pick_excluding(rng, dom2, y0)
    c1 = _pick_excluding(rng, dom1, c0)
    pairs = [(c0, y0), (c0, y1), (c1, y0)]
    used = set(pairs)
    attempts = 0
    while len(pairs) < spec.rows_per_table:
        candidate = (_pick(rng, dom1), _pick(rng, dom2))
        attempts += 1
        if candidate in used:
            if attempts > 1000 * spec.rows_per_table:
                raise GenerationError("could not find enough distinct key pairs")
            continue
        used.add(candidate)
        pairs.append(candidate)

    order = rng.permutation(len(pairs))
    target_row = int(np.where(order == 0)[0][0])
    shuffled = [pairs[int(i)] for i in order]

    cells: dict[str, list[str]] = {key1: [p[0] for p in shuffled], key2: [p[1] for p in shuffled]}
    for col in spec.columns:
        if col.name in (key1, key2):
            continue
        idx = rng.integers(len(col.domain), size=spec.rows_per_table)
        cells[col.name] = [col.domain[int(i)] for i in idx]
    rows = tuple(
        tuple(cells[col.name][r] for col in spec.columns) for r in range(spec.rows_per_table)
    )
    return Table(tuple(c.name for c in spec.columns), rows), target_row


def render_question(
    template: QuestionTemplate, target_column: str, keys: tuple[str, ...] | list[str]
) -> list[str]:
    """Render a template into question tokens. See QuestionTemplate.render."""
    return template.render(target_column, tuple(keys))


def generate_example(spec: GenerationSpec, rng: np.random.Generator) -> Example:
    """One (table, question, answer) example under the spec's task rules."""
    if spec.task == TASK_SIMPLE:
        table = generate_table_simple(spec, rng)
        target_row = int(rng.integers(spec.rows_per_table))
    else:
        table, target_row = generate_table_composite(spec, rng)
    askable = spec.askable_columns
    target_column = askable[int(rng.integers(len(askable)))]
    template = spec.templates[int(rng.integers(len(spec.templates)))]
    keys = tuple(table.cell(target_row, key) for key in spec.key_columns)
    question = template.render(target_column, keys)
    answer = table.cell(target_row, target_column)
    return Example(
        triples=tuple(table_to_triples(table)),
        question=tuple(question),
        answer=answer,
    )


def iter_examples(spec: GenerationSpec) -> Iterator[Example]:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    for _ in range(spec.n_examples):
        yield generate_example(spec, rng)


def generate_dataset(spec: GenerationSpec) -> list[Example]:
    """All ``spec.n_examples`` examples, reproducible from ``spec.seed``."""
    return list(iter_examples(spec))
