#!/usr/bin/env python3
"""Regenerate the data fixtures shipped inside the package.

Produces, under src/asktable/data/:
  embeddings.txt        word-vector fixture covering both default task
                        vocabularies plus paraphrases and junk words
  sample_tables.json    bundled demo tables
  testset_simple.jsonl  frozen 32-sample perturbed test sets, built from
  testset_composite.jsonl   held-out pools disjoint from the canonical
                        seed-1 training datasets

Everything is seeded; rerunning the script reproduces identical files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from asktable.core import build_vocabulary, dumps_examples_jsonl
from asktable.datagen import composite_key_spec, generate_dataset, simple_key_spec
from asktable.disambig import cosine, load_embeddings
from asktable.evaluation import build_testset

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "asktable" / "data"

EMBED_DIM = 24
EMBED_SEED = 20250810

# (paraphrase, vocabulary target, cosine) pairs; 0.8 is the mapping
# threshold, so values straddle it deliberately.
PARAPHRASES = [
    ("emigration", "emigration_total", 0.93),
    ("inflow", "immigration", 0.87),
    ("town", "city", 0.85),
    ("residents", "population", 0.84),
    ("size", "area", 0.83),
    ("inhabitants", "population", 0.82),
    ("outflow", "emigration_total", 0.70),
    ("people", "population", 0.65),
]
JUNK_WORDS = ["qqqq", "xyzzy"]

TRAIN_SEED = 1
SIMPLE_TRAIN_N = 5949
COMPOSITE_TRAIN_N = 18953
BASE_POOL_N = 400
SIMPLE_BASE_SEED = 20250811
COMPOSITE_BASE_SEED = 20250812
TESTSET_SEED = 99


def unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def make_embeddings() -> None:
    simple_vocab = build_vocabulary(generate_dataset(simple_key_spec(50, seed=3)))
    composite_vocab = build_vocabulary(generate_dataset(composite_key_spec(50, seed=3)))
    vocab_words = sorted(set(simple_vocab.tokens) | set(composite_vocab.tokens))

    rng = np.random.Generator(np.random.PCG64(EMBED_SEED))
    vectors: dict[str, np.ndarray] = {}
    for word in vocab_words:
        vectors[word] = unit(rng.normal(size=EMBED_DIM))

    for word, target, target_cos in PARAPHRASES:
        base = vectors[target]
        noise = rng.normal(size=EMBED_DIM)
        ortho = unit(noise - np.dot(noise, base) * base)
        vectors[word] = unit(target_cos * base + np.sqrt(1 - target_cos**2) * ortho)
    for word in JUNK_WORDS:
        vectors[word] = unit(rng.normal(size=EMBED_DIM))

    # Sanity: each paraphrase's best vocabulary match is its target, at
    # (roughly) the requested cosine; junk words stay well below 0.7.
    for word, target, target_cos in PARAPHRASES:
        sims = {w: cosine(vectors[word], vectors[w]) for w in vocab_words}
        best = max(sims, key=sims.get)
        assert best == target, (word, best)
        assert abs(sims[target] - target_cos) < 0.01, (word, sims[target])
    for word in JUNK_WORDS:
        top = max(cosine(vectors[word], vectors[w]) for w in vocab_words)
        assert top < 0.7, (word, top)

    lines = [f"{len(vectors)} {EMBED_DIM}"]
    for word in sorted(vectors):
        values = " ".join(f"{x:.5f}" for x in vectors[word])
        lines.append(f"{word} {values}")
    out = DATA_DIR / "embeddings.txt"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")

    table = load_embeddings(out)
    sim = cosine(table.words["emigration"], table.words["emigration_total"])
    assert sim >= 0.8, sim
    print(f"embeddings.txt: {len(vectors)} words, dim {EMBED_DIM}, "
          f"cos(emigration, emigration_total)={sim:.4f}")


def make_sample_tables() -> None:
    tables = [
        {
            "table_id": "austria",
            "columns": ["city", "immigration", "emigration_total"],
            "rows": [
                ["klagenfurt", "110", "140"],
                ["salzburg", "170", "100"],
            ],
        },
        {
            "table_id": "austria-extended",
            "columns": ["city", "immigration", "emigration_total", "population", "area"],
            "rows": [
                ["klagenfurt", "110", "140", "5000", "25"],
                ["salzburg", "170", "100", "7000", "65"],
                ["graz", "250", "220", "9000", "45"],
                ["linz", "190", "160", "8000", "35"],
            ],
        },
        {
            "table_id": "austria-by-year",
            "columns": ["city", "year", "immigration", "emigration_total", "population"],
            "rows": [
                ["salzburg", "2010", "170", "100", "7000"],
                ["salzburg", "2008", "130", "180", "6000"],
                ["klagenfurt", "2010", "110", "140", "5000"],
                ["graz", "2011", "250", "220", "9000"],
            ],
        },
    ]
    out = DATA_DIR / "sample_tables.json"
    out.write_text(json.dumps(tables, indent=2) + "\n", encoding="utf-8")
    print(f"sample_tables.json: {len(tables)} tables")


def make_testsets() -> None:
    for task, base_seed, train_n, fname in [
        ("simple", SIMPLE_BASE_SEED, SIMPLE_TRAIN_N, "testset_simple.jsonl"),
        ("composite", COMPOSITE_BASE_SEED, COMPOSITE_TRAIN_N, "testset_composite.jsonl"),
    ]:
        make_spec = simple_key_spec if task == "simple" else composite_key_spec
        train_set = generate_dataset(make_spec(train_n, seed=TRAIN_SEED))
        base = generate_dataset(make_spec(BASE_POOL_N, seed=base_seed))
        seen = {(e.triples, e.question) for e in train_set}
        overlap = sum(1 for e in base if (e.triples, e.question) in seen)
        assert overlap == 0, f"{task}: {overlap} base examples overlap the training set"
        testset = build_testset(base, make_spec(BASE_POOL_N, seed=base_seed), seed=TESTSET_SEED)
        out = DATA_DIR / fname
        out.write_text(dumps_examples_jsonl(testset), encoding="utf-8", newline="\n")
        kinds = sorted({e.perturbation for e in testset})
        print(f"{fname}: {len(testset)} samples, kinds={kinds}")


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    make_embeddings()
    make_sample_tables()
    make_testsets()
