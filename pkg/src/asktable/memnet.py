"""Multi-hop attention network over table triples, trained with manual backprop.

The model embeds each triple and the question as bags of words, runs a
fixed number of attention hops over the triple memory, and emits a
softmax over the whole vocabulary as the answer distribution. Adjacent
weight tying keeps one embedding matrix per hop boundary: with K hops
there are K+1 free matrices E_0..E_K where hop k (0-based) reads memory
keys through E_k and memory values through E_(k+1), the question is
embedded through E_0, and the output projection is E_K transposed.

Training is plain mini-batch SGD with global gradient-norm clipping and
an optional "linear start": the attention softmax stays disabled (raw
inner-product scores) at a reduced learning rate until validation loss
stops improving, then the softmax is switched on. All arithmetic is
float64.

A trained model is immutable in practice and safe to share across
concurrent readers; training mutates parameters and must stay
single-writer.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import Example, Triple, Vocabulary

CHECKPOINT_MAGIC = b"ATMN"
CHECKPOINT_VERSION = 1

LOSS_FLOOR = 1e-12


class TrainingError(RuntimeError):
    """Raised when training hits a non-recoverable numeric problem."""


class CheckpointError(Exception):
    """Base class for checkpoint load failures."""


class CorruptCheckpointError(CheckpointError):
    """The file is not a readable checkpoint (bad magic, truncation, bad JSON)."""


class IncompatibleCheckpointError(CheckpointError):
    """The checkpoint is readable but its version or shapes do not line up."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and training hyperparameters.

    ``lr_halving_period_epochs`` applies after the linear-start phase
    ends; the linear-start phase itself runs at ``linear_start_lr``.
    """

    hops: int = 3
    embed_dim: int = 20
    batch_size: int = 32
    max_epochs: int = 100
    lr_initial: float = 0.01
    lr_halving_period_epochs: int = 25
    linear_start: bool = True
    linear_start_lr: float = 0.005
    grad_clip_norm: float = 40.0
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.hops < 1:
            raise ValueError("hops must be >= 1")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if min(self.lr_initial, self.linear_start_lr, self.grad_clip_norm) <= 0:
            raise ValueError("learning rates and clip norm must be positive")
        if self.lr_halving_period_epochs < 1:
            raise ValueError("lr_halving_period_epochs must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> ModelConfig:
        return cls(**data)


@dataclass(frozen=True)
class Prediction:
    """Result of one forward pass.

    ``attention[k, i]`` is the hop-k weight on memory slot i; the slots
    line up index-for-index with ``memory_slots``. With the attention
    softmax enabled each row is a probability distribution; in
    linear-start mode the rows are raw inner-product scores.
    """

    answer_token: str
    distribution: np.ndarray
    attention: np.ndarray
    memory_slots: tuple[Triple, ...]
    vocab: Vocabulary

    @property
    def confidence(self) -> float:
        return float(self.distribution.max())


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    phase: str  # "linear" or "softmax"
    lr: float
    train_loss: float
    val_loss: float
    val_acc: float

    def format_line(self) -> str:
        return (
            f"epoch={self.epoch} phase={self.phase} lr={self.lr:.6g} "
            f"train_loss={self.train_loss:.4f} val_loss={self.val_loss:.4f} "
            f"val_acc={self.val_acc:.4f}"
        )


@dataclass
class TrainReport:
    """Per-epoch history plus where the linear-start phase ended."""

    records: list[EpochRecord] = field(default_factory=list)
    linear_start_end_epoch: int | None = None
    total_epochs: int = 0
    final_val_acc: float = 0.0
    stop_reason: str = ""

    def first_epoch_reaching(self, val_acc: float) -> int | None:
        for record in self.records:
            if record.val_acc >= val_acc:
                return record.epoch
        return None

    def to_json_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "linear_start_end_epoch": self.linear_start_end_epoch,
            "total_epochs": self.total_epochs,
            "final_val_acc": self.final_val_acc,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> TrainReport:
        return cls(
            records=[EpochRecord(**r) for r in data["records"]],
            linear_start_end_epoch=data["linear_start_end_epoch"],
            total_epochs=data["total_epochs"],
            final_val_acc=data["final_val_acc"],
            stop_reason=data["stop_reason"],
        )


def _softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _masked_softmax(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    neg = np.where(mask > 0, scores, -np.inf)
    shifted = neg - neg.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    e = np.where(mask > 0, e, 0.0)
    return e / e.sum(axis=-1, keepdims=True)


class MemoryNetwork:
    """The K-hop attention model. See the module docstring for the math."""

    def __init__(
        self,
        vocab: Vocabulary,
        config: ModelConfig,
        embeddings: list[np.ndarray],
        softmax_enabled: bool = True,
        meta: dict | None = None,
    ):
        if len(embeddings) != config.hops + 1:
            raise ValueError(f"expected {config.hops + 1} embedding matrices")
        expected = (len(vocab), config.embed_dim)
        for i, matrix in enumerate(embeddings):
            if matrix.shape != expected:
                raise ValueError(f"embedding {i} has shape {matrix.shape}, expected {expected}")
            if not np.isfinite(matrix).all():
                raise ValueError(f"embedding {i} contains non-finite entries")
        self.vocab = vocab
        self.config = config
        self.embeddings = embeddings
        self.softmax_enabled = softmax_enabled
        self.meta = dict(meta or {})

    # -- construction ------------------------------------------------------

    @classmethod
    def init(cls, config: ModelConfig, vocab: Vocabulary) -> MemoryNetwork:
        """Fresh model with Gaussian(0, 0.1) parameters, seeded from the config.

        With linear start enabled the attention softmax begins disabled.
        """
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
        shape = (len(vocab), config.embed_dim)
        embeddings = [rng.normal(0.0, 0.1, size=shape) for _ in range(config.hops + 1)]
        return cls(vocab, config, embeddings, softmax_enabled=not config.linear_start)

    # Tied views. Hop index k is 0-based.
    def memory_key_matrix(self, k: int) -> np.ndarray:
        return self.embeddings[k]

    def memory_value_matrix(self, k: int) -> np.ndarray:
        return self.embeddings[k + 1]

    @property
    def question_matrix(self) -> np.ndarray:
        return self.embeddings[0]

    @property
    def output_matrix(self) -> np.ndarray:
        return self.embeddings[-1].T

    @property
    def n_hops(self) -> int:
        return self.config.hops

    def copy(self) -> MemoryNetwork:
        return MemoryNetwork(
            self.vocab,
            self.config,
            [e.copy() for e in self.embeddings],
            self.softmax_enabled,
            dict(self.meta),
        )

    # -- encoding ----------------------------------------------------------

    def encode_batch(
        self, batch: Sequence[Example]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense bag-of-words arrays for a batch.

        Returns (question (B,V), memory (B,S,V), mask (B,S)) where S is the
        largest slot count in the batch; shorter examples are zero-padded
        and masked out. Out-of-vocabulary tokens are skipped, keeping the
        slot axis aligned with each example's triple list.
        """
        n = len(batch)
        vsize = len(self.vocab)
        slots = max(len(e.triples) for e in batch)
        q = np.zeros((n, vsize), dtype=np.float64)
        mem = np.zeros((n, slots, vsize), dtype=np.float64)
        mask = np.zeros((n, slots), dtype=np.float64)
        for b, example in enumerate(batch):
            for token in example.question:
                i = self.vocab.get(token)
                if i is not None:
                    q[b, i] += 1.0
            for s, triple in enumerate(example.triples):
                mask[b, s] = 1.0
                for token in triple:
                    i = self.vocab.get(token)
                    if i is not None:
                        mem[b, s, i] += 1.0
        return q, mem, mask

    def answer_indices(self, batch: Sequence[Example]) -> np.ndarray:
        idx = np.empty(len(batch), dtype=np.int64)
        for b, example in enumerate(batch):
            i = self.vocab.get(example.answer)
            if i is None:
                raise KeyError(f"answer {example.answer!r} is not in the vocabulary")
            idx[b] = i
        return idx

    # -- forward / backward ------------------------------------------------

    def _forward_arrays(self, q: np.ndarray, mem: np.ndarray, mask: np.ndarray) -> dict:
        """Batched forward pass; returns every intermediate needed by backprop."""
        n, slots, vsize = mem.shape
        mem2d = mem.reshape(n * slots, vsize)
        u = q @ self.embeddings[0]  # (B, d)
        us = [u]
        keys, values, attn = [], [], []
        for k in range(self.config.hops):
            m = (mem2d @ self.embeddings[k]).reshape(n, slots, -1)
            c = (mem2d @ self.embeddings[k + 1]).reshape(n, slots, -1)
            scores = (m @ u[:, :, None])[:, :, 0]  # (B, S)
            if self.softmax_enabled:
                p = _masked_softmax(scores, mask)
            else:
                p = scores * mask
            o = (p[:, None, :] @ c)[:, 0, :]  # (B, d)
            u = u + o
            keys.append(m)
            values.append(c)
            attn.append(p)
            us.append(u)
        logits = u @ self.embeddings[-1].T  # (B, V)
        probs = _softmax(logits)
        return {
            "q": q,
            "mem2d": mem2d,
            "mask": mask,
            "us": us,
            "keys": keys,
            "values": values,
            "attn": attn,
            "probs": probs,
        }

    def _backward_arrays(self, cache: dict, answers: np.ndarray) -> list[np.ndarray]:
        """Exact gradients of the mean cross-entropy loss for a cached forward."""
        probs = cache["probs"]
        mem2d = cache["mem2d"]
        mask = cache["mask"]
        n = probs.shape[0]
        grads = [np.zeros_like(e) for e in self.embeddings]

        dlogits = probs.copy()
        dlogits[np.arange(n), answers] -= 1.0
        dlogits /= n
        grads[-1] += dlogits.T @ cache["us"][-1]
        du = dlogits @ self.embeddings[-1]  # (B, d)

        for k in range(self.config.hops - 1, -1, -1):
            m, c, p = cache["keys"][k], cache["values"][k], cache["attn"][k]
            u_in = cache["us"][k]
            do = du  # u_out = u_in + o, identity path handled below
            dp = (c @ do[:, :, None])[:, :, 0]  # (B, S)
            dc = p[:, :, None] * do[:, None, :]  # (B, S, d)
            grads[k + 1] += mem2d.T @ dc.reshape(-1, dc.shape[-1])
            if self.softmax_enabled:
                dscores = p * (dp - (dp * p).sum(axis=1, keepdims=True))
            else:
                dscores = dp * mask
            dm = dscores[:, :, None] * u_in[:, None, :]  # (B, S, d)
            grads[k] += mem2d.T @ dm.reshape(-1, dm.shape[-1])
            du = du + (dscores[:, None, :] @ m)[:, 0, :]

        grads[0] += cache["q"].T @ du
        return grads

    def forward(self, example: Example) -> Prediction:
        """Single-example inference with per-hop attention.

        Memory slot i is triple i; attention columns align with the
        example's triple order. Out-of-vocabulary tokens were expected to
        be resolved upstream and are silently skipped here.
        """
        q, mem, mask = self.encode_batch([example])
        cache = self._forward_arrays(q, mem, mask)
        distribution = cache["probs"][0]
        attention = np.stack([p[0] for p in cache["attn"]])
        answer = self.vocab.token(int(np.argmax(distribution)))
        return Prediction(
            answer_token=answer,
            distribution=distribution,
            attention=attention,
            memory_slots=example.triples,
            vocab=self.vocab,
        )

    def batch_loss(self, batch: Sequence[Example]) -> float:
        q, mem, mask = self.encode_batch(batch)
        cache = self._forward_arrays(q, mem, mask)
        answers = self.answer_indices(batch)
        picked = cache["probs"][np.arange(len(batch)), answers]
        return float(-np.log(np.maximum(picked, LOSS_FLOOR)).mean())

    def gradients(self, batch: Sequence[Example]) -> list[np.ndarray]:
        """Analytic gradients of the mean batch loss for every free matrix."""
        if not batch:
            raise ValueError("gradient batch is empty")
        q, mem, mask = self.encode_batch(batch)
        cache = self._forward_arrays(q, mem, mask)
        answers = self.answer_indices(batch)
        return self._backward_arrays(cache, answers)


def loss(prediction: Prediction, answer: str) -> float:
    """Cross-entropy of the true answer: -log p(answer), floored at 1e-12.

    The floor keeps the value finite when the model assigns (numerically)
    zero probability. Raises KeyError for answers outside the vocabulary.
    """
    i = prediction.vocab.get(answer)
    if i is None:
        raise KeyError(f"answer {answer!r} is not in the vocabulary")
    return float(-np.log(max(float(prediction.distribution[i]), LOSS_FLOOR)))


def sgd_step(model: MemoryNetwork, grads: Sequence[np.ndarray], lr: float) -> None:
    """Clip the global gradient norm, then apply one SGD update in place."""
    total = 0.0
    for g in grads:
        if not np.isfinite(g).all():
            raise TrainingError("non-finite gradient encountered; aborting update")
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    scale = 1.0
    clip = model.config.grad_clip_norm
    if norm > clip:
        scale = clip / norm
    for matrix, g in zip(model.embeddings, grads):
        matrix -= lr * scale * g


def split_validation(
    examples: Sequence[Example], fraction: float, seed: int
) -> tuple[list[Example], list[Example]]:
    """Deterministic train/validation split; validation may be empty."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    order = rng.permutation(len(examples))
    n_val = int(round(fraction * len(examples)))
    n_val = min(n_val, len(examples) - 1)
    val = [examples[int(i)] for i in order[:n_val]]
    train = [examples[int(i)] for i in order[n_val:]]
    return train, val


def _evaluate_split(model: MemoryNetwork, examples: Sequence[Example]) -> tuple[float, float]:
    """(mean loss, accuracy) over a split, computed in batch-size chunks."""
    total_loss = 0.0
    correct = 0
    step = model.config.batch_size
    for start in range(0, len(examples), step):
        chunk = examples[start : start + step]
        q, mem, mask = model.encode_batch(chunk)
        cache = model._forward_arrays(q, mem, mask)
        answers = model.answer_indices(chunk)
        probs = cache["probs"]
        picked = probs[np.arange(len(chunk)), answers]
        total_loss += float(-np.log(np.maximum(picked, LOSS_FLOOR)).sum())
        correct += int((probs.argmax(axis=1) == answers).sum())
    n = len(examples)
    return total_loss / n, correct / n


def train(
    model: MemoryNetwork,
    examples: Sequence[Example],
    config: ModelConfig | None = None,
    progress: Callable[[EpochRecord], None] | None = None,
) -> TrainReport:
    """SGD training with linear start and a halving learning-rate schedule.

    Phase 1 (if ``config.linear_start``): attention softmax disabled,
    learning rate ``linear_start_lr``, until validation loss fails to
    improve for one epoch. Phase 2: softmax enabled, learning rate starts
    at ``lr_initial`` and halves every ``lr_halving_period_epochs``.
    Training stops at ``max_epochs`` total or once validation accuracy
    reaches 0.99. With an empty validation split (fraction 0), training
    metrics stand in for validation metrics.

    Updates use the batch-summed loss gradient (mean gradient times batch
    size); the learning rates and the clip norm are calibrated to that
    scale.
    """
    cfg = config or model.config
    if not examples:
        raise ValueError("training dataset is empty")
    train_set, val_set = split_validation(examples, cfg.validation_fraction, cfg.seed)
    # Without a real validation split the training set stands in for the
    # reported metrics, but the accuracy-based early stop is disabled.
    has_validation = bool(val_set)
    acc_stop = 0.99 if has_validation else np.inf
    if not val_set:
        val_set = list(train_set)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 2])))
    report = TrainReport()

    def run_epoch(epoch: int, phase: str, lr: float) -> EpochRecord:
        order = rng.permutation(len(train_set))
        loss_sum = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_set[int(i)] for i in order[start : start + cfg.batch_size]]
            q, mem, mask = model.encode_batch(batch)
            cache = model._forward_arrays(q, mem, mask)
            answers = model.answer_indices(batch)
            picked = cache["probs"][np.arange(len(batch)), answers]
            loss_sum += float(-np.log(np.maximum(picked, LOSS_FLOOR)).sum())
            grads = model._backward_arrays(cache, answers)
            summed = [g * len(batch) for g in grads]
            sgd_step(model, summed, lr)
        val_loss, val_acc = _evaluate_split(model, val_set)
        record = EpochRecord(
            epoch=epoch,
            phase=phase,
            lr=lr,
            train_loss=loss_sum / len(train_set),
            val_loss=val_loss,
            val_acc=val_acc,
        )
        report.records.append(record)
        if progress is not None:
            progress(record)
        return record

    epoch = 0
    stop_reason = ""

    if cfg.linear_start:
        model.softmax_enabled = False
        best_val = np.inf
        while epoch < cfg.max_epochs:
            epoch += 1
            record = run_epoch(epoch, "linear", cfg.linear_start_lr)
            if record.val_acc >= acc_stop:
                stop_reason = "val_acc"
                break
            if record.val_loss >= best_val:
                break
            best_val = record.val_loss
        report.linear_start_end_epoch = epoch
        model.softmax_enabled = True
        if epoch >= cfg.max_epochs and not stop_reason:
            stop_reason = "max_epochs"

    phase_epoch = 0
    while not stop_reason and epoch < cfg.max_epochs:
        epoch += 1
        phase_epoch += 1
        lr = cfg.lr_initial * 0.5 ** ((phase_epoch - 1) // cfg.lr_halving_period_epochs)
        record = run_epoch(epoch, "softmax", lr)
        if record.val_acc >= acc_stop:
            stop_reason = "val_acc"
        elif epoch >= cfg.max_epochs:
            stop_reason = "max_epochs"

    report.total_epochs = epoch
    report.final_val_acc = report.records[-1].val_acc if report.records else 0.0
    report.stop_reason = stop_reason or "max_epochs"
    return report


# -- checkpoint serialization ------------------------------------------------
#
# Layout (all little-endian):
#   bytes 0..3   magic "ATMN"
#   bytes 4..7   uint32 header length H
#   bytes 8..8+H UTF-8 JSON header: format_version, config, vocab,
#                softmax_enabled, meta, matrices (name + shape, in file order)
#   then each matrix as row-major float64, in header order, nothing after.


def save_model(model: MemoryNetwork, path: str | Path, meta: dict | None = None) -> None:
    """Write a self-describing checkpoint; identical models yield identical bytes."""
    merged_meta = dict(model.meta)
    if meta:
        merged_meta.update(meta)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": model.config.to_json_dict(),
        "vocab": list(model.vocab.tokens),
        "softmax_enabled": model.softmax_enabled,
        "meta": merged_meta,
        "matrices": [
            {"name": f"embedding_{i}", "shape": list(m.shape)}
            for i, m in enumerate(model.embeddings)
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    for matrix in model.embeddings:
        buf.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_model(path: str | Path) -> MemoryNetwork:
    """Read a checkpoint written by ``save_model``.

    Raises CorruptCheckpointError for unreadable or truncated files and
    IncompatibleCheckpointError for version or shape mismatches.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != CHECKPOINT_MAGIC:
        raise CorruptCheckpointError(f"{path}: not a model checkpoint")
    (header_len,) = struct.unpack("<I", raw[4:8])
    header_end = 8 + header_len
    if len(raw) < header_end:
        raise CorruptCheckpointError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(raw[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: unreadable checkpoint header: {exc}") from exc
    version = header.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise IncompatibleCheckpointError(
            f"{path}: checkpoint format version {version}, expected {CHECKPOINT_VERSION}"
        )
    try:
        config = ModelConfig.from_json_dict(header["config"])
        vocab = Vocabulary(header["vocab"])
        specs = header["matrices"]
        softmax_enabled = bool(header["softmax_enabled"])
        meta = dict(header.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpointError(f"{path}: malformed checkpoint header: {exc}") from exc
    if len(specs) != config.hops + 1:
        raise IncompatibleCheckpointError(
            f"{path}: {len(specs)} matrices for {config.hops} hops"
        )
    expected_shape = [len(vocab), config.embed_dim]
    matrices = []
    offset = header_end
    for spec in specs:
        shape = list(spec.get("shape", []))
        if shape != expected_shape:
            raise IncompatibleCheckpointError(
                f"{path}: matrix {spec.get('name')} has shape {shape}, "
                f"expected {expected_shape} from config and vocabulary"
            )
        count = shape[0] * shape[1]
        end = offset + count * 8
        if len(raw) < end:
            raise CorruptCheckpointError(f"{path}: truncated checkpoint payload")
        matrix = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape).copy()
        matrices.append(matrix)
        offset = end
    if offset != len(raw):
        raise CorruptCheckpointError(f"{path}: {len(raw) - offset} unexpected trailing bytes")
    try:
        return MemoryNetwork(vocab, config, matrices, softmax_enabled, meta)
    except ValueError as exc:
        raise IncompatibleCheckpointError(f"{path}: {exc}") from exc
