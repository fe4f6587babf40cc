"""Resolve out-of-vocabulary question words against the model vocabulary.

Users phrase questions with words the tables never use ("emigration" for
a column labeled "emigration_total"). Each unknown word is compared, by
cosine similarity of pretrained word vectors, against every vocabulary
word that has a vector; the best match at or above the threshold replaces
it, anything below is dropped but kept in the report so callers can show
what happened. Words missing from the vector table can still be resolved
through character n-gram vectors when a subword table is available.

An EmbeddingTable is immutable after loading and every operation here is
pure, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Vocabulary

DEFAULT_THRESHOLD = 0.8
NGRAM_MIN = 3
NGRAM_MAX = 6

IN_VOCAB = "in_vocab"
MAPPED = "mapped"
DROPPED = "dropped"


class EmbeddingFormatError(ValueError):
    """A word-vector file does not follow the expected text format."""


@dataclass(frozen=True)
class EmbeddingTable:
    """Word vectors plus optional character n-gram vectors, one shared dim."""

    words: dict[str, np.ndarray]
    subwords: dict[str, np.ndarray] | None
    dim: int
    duplicate_words: tuple[str, ...] = ()

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class TokenResolution:
    """Outcome for one query token.

    status is one of "in_vocab", "mapped" (with mapped_to and similarity)
    or "dropped" (best_similarity is the highest sub-threshold match, or
    None when the token had no resolvable vector at all).
    """

    token: str
    status: str
    mapped_to: str | None = None
    similarity: float | None = None
    best_similarity: float | None = None

    def to_json_dict(self) -> dict:
        data: dict = {"token": self.token, "status": self.status}
        if self.status == MAPPED:
            data["mapped_to"] = self.mapped_to
            data["similarity"] = self.similarity
        elif self.status == DROPPED:
            data["best_similarity"] = self.best_similarity
        return data


def _parse_vector_line(line: str, lineno: int, dim: int, path: str) -> tuple[str, np.ndarray]:
    parts = line.rstrip("\n").split(" ")
    if len(parts) != dim + 1:
        raise EmbeddingFormatError(
            f"{path}:{lineno}: expected a word and {dim} values, got {len(parts)} fields"
        )
    try:
        vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    except ValueError as exc:
        raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric vector value: {exc}") from exc
    return parts[0], vec


def load_embeddings(path: str | Path, subword_path: str | Path | None = None) -> EmbeddingTable:
    """Load a text word-vector file: header "<count> <dim>", then one
    "word v1 ... vdim" line per word.

    Duplicate words keep their first vector and are recorded on the table.
    The optional subword file holds "ngram v1 ... vdim" lines (a count/dim
    header is accepted there too) with the same dimension.
    """
    path = str(path)
    words: dict[str, np.ndarray] = {}
    duplicates: list[str] = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(f"{path}:1: expected header '<count> <dim>'")
        try:
            int(parts[0])  # declared count is advisory; actual lines win
            dim = int(parts[1])
        except ValueError as exc:
            raise EmbeddingFormatError(f"{path}:1: non-numeric header: {exc}") from exc
        if dim < 1:
            raise EmbeddingFormatError(f"{path}:1: vector dimension must be positive")
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            word, vec = _parse_vector_line(line, lineno, dim, path)
            if word in words:
                duplicates.append(word)
                continue
            words[word] = vec

    subwords: dict[str, np.ndarray] | None = None
    if subword_path is not None:
        subword_path = str(subword_path)
        subwords = {}
        with open(subword_path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                parts = line.split()
                if lineno == 1 and len(parts) == 2:
                    try:
                        int(parts[0]), int(parts[1])
                        continue  # optional header
                    except ValueError:
                        pass
                ngram, vec = _parse_vector_line(line, lineno, dim, subword_path)
                if ngram not in subwords:
                    subwords[ngram] = vec
    return EmbeddingTable(words=words, subwords=subwords, dim=dim, duplicate_words=tuple(duplicates))


def character_ngrams(word: str, n_min: int = NGRAM_MIN, n_max: int = NGRAM_MAX) -> list[str]:
    """All n-grams, n_min..n_max, of the boundary-marked word "<word>"."""
    marked = f"<{word}>"
    grams = []
    for n in range(n_min, n_max + 1):
        for start in range(0, len(marked) - n + 1):
            grams.append(marked[start : start + n])
    return grams


def vector_for(word: str, table: EmbeddingTable) -> np.ndarray | None:
    """The word's vector, or the mean of its known n-gram vectors, or None.

    Subword composition only applies when the table carries subword
    vectors and at least one of the word's n-grams is present.
    """
    vec = table.words.get(word)
    if vec is not None:
        return vec
    if table.subwords is None:
        return None
    found = [table.subwords[g] for g in character_ngrams(word) if g in table.subwords]
    if not found:
        return None
    return np.mean(found, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine similarity; zero vectors compare as 0.0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def disambiguate(
    question_tokens: list[str] | tuple[str, ...],
    vocab: Vocabulary,
    table: EmbeddingTable | None,
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[list[str], list[TokenResolution]]:
    """Map each out-of-vocabulary token to its best vocabulary match.

    In-vocabulary tokens pass through. An OOV token whose best cosine
    similarity (over vocabulary words with resolvable vectors) reaches the
    threshold is substituted; ties prefer the lower vocabulary index.
    Anything below the threshold is dropped from the token list but still
    reported. Raising the threshold can only turn mapped tokens into
    dropped ones, never the reverse.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    candidates: list[tuple[str, np.ndarray]] = []
    if table is not None:
        for token in vocab.tokens:  # vocabulary order fixes tie-breaking
            vec = vector_for(token, table)
            if vec is not None:
                norm = float(np.linalg.norm(vec))
                if norm > 0.0:
                    candidates.append((token, vec / norm))
    matrix = np.stack([v for _, v in candidates]) if candidates else None

    mapped_tokens: list[str] = []
    report: list[TokenResolution] = []
    for token in question_tokens:
        if token in vocab:
            mapped_tokens.append(token)
            report.append(TokenResolution(token=token, status=IN_VOCAB))
            continue
        vec = vector_for(token, table) if table is not None else None
        if vec is None or matrix is None or float(np.linalg.norm(vec)) == 0.0:
            report.append(TokenResolution(token=token, status=DROPPED, best_similarity=None))
            continue
        sims = matrix @ (vec / float(np.linalg.norm(vec)))
        best = int(np.argmax(sims))  # first max = lowest vocabulary index
        best_sim = float(sims[best])
        if best_sim >= threshold:
            target = candidates[best][0]
            mapped_tokens.append(target)
            report.append(
                TokenResolution(token=token, status=MAPPED, mapped_to=target, similarity=best_sim)
            )
        else:
            report.append(
                TokenResolution(token=token, status=DROPPED, best_similarity=best_sim)
            )
    return mapped_tokens, report
