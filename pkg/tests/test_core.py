import json

import numpy as np
import pytest

from asktable.core import (
    DataFormatError,
    Example,
    Table,
    TableStructureError,
    Triple,
    Vocabulary,
    build_vocabulary,
    dumps_examples_jsonl,
    encode_bow,
    normalize_token,
    read_examples_jsonl,
    reconstruct_table,
    table_to_triples,
    tokenize,
    write_examples_jsonl,
)
from asktable.datagen import (
    ColumnSpec,
    GenerationSpec,
    QuestionTemplate,
    generate_dataset,
    generate_table_simple,
    simple_key_spec,
)

# The two-row migration table used throughout, with its original column
# spelling preserved.
AUSTRIA_COLUMNS = ("city", "immigration", "emmigration")
AUSTRIA_ROWS = (("klagenfurt", "110", "140"), ("salzburg", "170", "100"))
AUSTRIA_TABLE = Table(AUSTRIA_COLUMNS, AUSTRIA_ROWS)
AUSTRIA_QUESTION = ("what", "is", "the", "immigration", "in", "salzburg")


class TestTokenize:
    def test_example_question(self):
        assert tokenize("What is the immigration in Salzburg?") == [
            "what", "is", "the", "immigration", "in", "salzburg",
        ]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_underscore_label_preserved(self):
        assert tokenize("Emigration_Total") == ["emigration_total"]

    def test_edge_punctuation_stripped(self):
        assert tokenize("  'Salzburg?!'  what,") == ["salzburg", "what"]

    def test_normalize_token_joins_multiword(self):
        assert normalize_token("Emigration Total") == "emigration_total"


class TestTableToTriples:
    def test_two_city_table(self):
        assert table_to_triples(AUSTRIA_TABLE) == [
            Triple("row1", "city", "klagenfurt"),
            Triple("row1", "immigration", "110"),
            Triple("row1", "emmigration", "140"),
            Triple("row2", "city", "salzburg"),
            Triple("row2", "immigration", "170"),
            Triple("row2", "emmigration", "100"),
        ]

    def test_minimal_table(self):
        assert table_to_triples(Table(("x",), (("a",),))) == [Triple("row1", "x", "a")]

    def test_generated_four_row_three_column_table(self):
        spec = GenerationSpec(
            task="simple_key",
            columns=(
                ColumnSpec("city", tuple(f"c{i}" for i in range(10))),
                ColumnSpec("immigration", tuple(f"i{i}" for i in range(10))),
                ColumnSpec("emigration_total", tuple(f"e{i}" for i in range(10))),
            ),
            key_columns=("city",),
            n_examples=1,
            seed=3,
            templates=(
                QuestionTemplate("what is the {column} in {key1}"),
                QuestionTemplate("what was the {column} for {key1}"),
            ),
        )
        rng = np.random.Generator(np.random.PCG64(0))
        triples = table_to_triples(generate_table_simple(spec, rng))
        assert len(triples) == 12
        assert {t.row_id for t in triples} == {"row1", "row2", "row3", "row4"}

    def test_missing_cell_names_row_and_column(self):
        with pytest.raises(TableStructureError, match=r"row 2.*immigration"):
            Table(("city", "immigration"), (("a", "1"), ("b",)))

    def test_reconstruction_is_lossless(self):
        spec = simple_key_spec(1, seed=0)
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(50):
            table = generate_table_simple(spec, rng)
            assert reconstruct_table(table_to_triples(table)) == table


class TestVocabulary:
    def test_two_city_example_tokens(self):
        example = Example(
            triples=tuple(table_to_triples(AUSTRIA_TABLE)),
            question=AUSTRIA_QUESTION,
            answer="170",
        )
        vocab = build_vocabulary([example])
        assert set(vocab.tokens) == {
            "row1", "row2", "city", "klagenfurt", "salzburg", "immigration",
            "110", "140", "170", "100", "emmigration", "what", "is", "the", "in",
        }
        assert len(vocab) == 15

    def test_minimal_vocabulary(self):
        example = Example(triples=(Triple("row1", "x", "a"),), question=(), answer="a")
        assert set(build_vocabulary([example]).tokens) == {"row1", "x", "a"}

    def test_default_simple_spec_vocabulary_size(self):
        examples = generate_dataset(simple_key_spec(200, seed=1))
        assert len(build_vocabulary(examples)) == 65

    def test_round_trip_indexing(self):
        vocab = Vocabulary(["b", "a", "c", "a"])
        for i, token in enumerate(vocab.tokens):
            assert vocab.index(token) == i
        assert vocab.tokens == ("a", "b", "c")

    def test_order_insensitive_and_idempotent(self):
        examples = generate_dataset(simple_key_spec(50, seed=2))
        shuffled = list(examples)
        np.random.default_rng(0).shuffle(shuffled)
        assert build_vocabulary(examples) == build_vocabulary(shuffled)
        assert build_vocabulary(examples) == build_vocabulary(examples)

    def test_empty_examples_rejected(self):
        with pytest.raises(ValueError):
            build_vocabulary([])


class TestEncodeBow:
    def test_counts(self):
        vocab = Vocabulary(["city", "salzburg"])
        vec, skipped = encode_bow(["salzburg", "salzburg"], vocab)
        assert vec.tolist() == [0.0, 2.0]
        assert skipped == []

    def test_order_invariance(self):
        vocab = Vocabulary(AUSTRIA_QUESTION)
        base, _ = encode_bow(list(AUSTRIA_QUESTION), vocab)
        rng = np.random.default_rng(4)
        for _ in range(20):
            perm = rng.permutation(len(AUSTRIA_QUESTION))
            vec, _ = encode_bow([AUSTRIA_QUESTION[i] for i in perm], vocab)
            assert np.array_equal(vec, base)

    def test_oov_skipped_and_reported(self):
        vocab = Vocabulary(["what", "is"])
        vec, skipped = encode_bow(["what", "is", "zzz"], vocab)
        assert vec.sum() == 2.0
        assert skipped == ["zzz"]


class TestExampleJsonl:
    def _example(self) -> Example:
        return Example(
            triples=tuple(table_to_triples(AUSTRIA_TABLE)),
            question=AUSTRIA_QUESTION,
            answer="170",
        )

    def test_round_trip(self, tmp_path):
        examples = [self._example(), self._example()]
        path = tmp_path / "data.jsonl"
        write_examples_jsonl(path, examples)
        assert read_examples_jsonl(path) == examples

    def test_adequate_defaults_true(self):
        record = json.loads(dumps_examples_jsonl([self._example()]).splitlines()[0])
        del record["adequate"]
        assert Example.from_json_dict(record).adequate is True

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"triples": [["row1","x","a"]], "question": [], "answer": "a"}\nnot json\n')
        with pytest.raises(DataFormatError, match=r":2:"):
            read_examples_jsonl(path)

    def test_answer_must_be_in_table_when_adequate(self):
        with pytest.raises(ValueError, match="does not appear"):
            Example(triples=(Triple("row1", "x", "a"),), question=("q",), answer="b")

    def test_inadequate_relaxes_answer_check(self):
        example = Example(
            triples=(Triple("row1", "x", "a"),),
            question=("q",),
            answer="__no_answer__",
            adequate=False,
        )
        assert example.answer == "__no_answer__"
