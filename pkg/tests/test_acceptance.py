"""Acceptance suite: one test per release criterion.

Each test prints an ``ACCEPTANCE <name>: PASS|FAIL`` line (visible with
``pytest -s`` or in captured output). The two full-size trainings are
shared session fixtures, so the whole suite runs in a few minutes on a
laptop CPU. Everything is seeded; reruns reproduce identical numbers.
"""

import hashlib
import subprocess
import sys
from dataclasses import replace

import numpy as np
from fastapi.testclient import TestClient

from asktable.core import Vocabulary
from asktable.datagen import generate_dataset
from asktable.disambig import disambiguate, load_embeddings
from asktable.evaluation import evaluate
from asktable.memnet import MemoryNetwork, ModelConfig
from asktable.resources import default_embeddings_path, default_testset_path
from asktable.service import ServiceState, create_app

from conftest import TrainingRun

CLI = [sys.executable, "-m", "asktable.cli"]


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _tiny_examples(rng: np.random.Generator, vocab_tokens, n_slots=2):
    from asktable.core import Example, Triple

    def pick():
        return vocab_tokens[int(rng.integers(len(vocab_tokens)))]

    triples = tuple(Triple(pick(), pick(), pick()) for _ in range(n_slots))
    question = tuple(pick() for _ in range(int(rng.integers(2, 6))))
    answer = triples[int(rng.integers(n_slots))].value
    return Example(triples=triples, question=question, answer=answer)


def test_gradient_correctness():
    # Tiny model: |V|=10, d=4, 2 memory slots; hops 1 and 3; attention
    # softmax on and off; >= 100 random parameter probes per setting,
    # central differences with eps=1e-4, max relative error < 1e-3.
    tokens = tuple(f"t{i}" for i in range(10))
    vocab = Vocabulary(tokens)
    eps = 1e-4
    worst = 0.0
    for hops in (1, 3):
        for softmax_enabled in (True, False):
            config = ModelConfig(hops=hops, embed_dim=4, seed=13, linear_start=False)
            model = MemoryNetwork.init(config, vocab)
            model.softmax_enabled = softmax_enabled
            rng = np.random.default_rng(100 + hops)
            batch = [_tiny_examples(rng, tokens) for _ in range(3)]
            grads = model.gradients(batch)
            for _ in range(110):
                k = int(rng.integers(len(model.embeddings)))
                i = int(rng.integers(model.embeddings[k].shape[0]))
                j = int(rng.integers(model.embeddings[k].shape[1]))
                keep = model.embeddings[k][i, j]
                model.embeddings[k][i, j] = keep + eps
                up = model.batch_loss(batch)
                model.embeddings[k][i, j] = keep - eps
                down = model.batch_loss(batch)
                model.embeddings[k][i, j] = keep
                numeric = (up - down) / (2 * eps)
                analytic = grads[k][i, j]
                rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-8)
                worst = max(worst, rel)
    _verdict("gradient-correctness", worst < 1e-3, f"max relative error {worst:.3e}")


def test_normalization_invariants():
    # 1,000 random models/inputs: answer distribution and every
    # softmax-enabled attention row sum to 1 +- 1e-6.
    rng = np.random.default_rng(7)
    worst_dist = 0.0
    worst_attn = 0.0
    for trial in range(1000):
        size = int(rng.integers(5, 20))
        tokens = tuple(f"w{i}" for i in range(size))
        vocab = Vocabulary(tokens)
        hops = int(rng.integers(1, 4))
        config = ModelConfig(hops=hops, embed_dim=int(rng.integers(2, 8)),
                             seed=int(trial), linear_start=False)
        model = MemoryNetwork.init(config, vocab)
        example = _tiny_examples(rng, tokens, n_slots=int(rng.integers(1, 5)))
        prediction = model.forward(example)
        worst_dist = max(worst_dist, abs(prediction.distribution.sum() - 1.0))
        assert (prediction.distribution >= 0).all()
        row_err = np.abs(prediction.attention.sum(axis=1) - 1.0).max()
        worst_attn = max(worst_attn, float(row_err))
        assert (prediction.attention >= 0).all()
    ok = worst_dist < 1e-6 and worst_attn < 1e-6
    _verdict("normalization-invariants", ok,
             f"max |dist sum - 1| {worst_dist:.2e}, max |attn row sum - 1| {worst_attn:.2e}")


def test_oracle_equivalence(simple_run: TrainingRun, composite_run: TrainingRun):
    # 500 held-out in-distribution examples per task: the trained model
    # agrees with the exact lookup oracle on >= 95% (simple) / 90%
    # (composite) of answers. Generated answers equal their unique oracle
    # lookup (property-tested in test_datagen), so oracle agreement is
    # measured as held-out answer accuracy.
    agreements = {}
    for name, run, needed in (
        ("simple", simple_run, 0.95),
        ("composite", composite_run, 0.90),
    ):
        held_out_spec = replace(run.base_spec, n_examples=500, seed=777)
        held_out = generate_dataset(held_out_spec)
        hits = sum(
            run.model.forward(example).answer_token == example.answer
            for example in held_out
        )
        agreements[name] = (hits / 500, needed)
    ok = all(rate >= needed for rate, needed in agreements.values())
    detail = ", ".join(f"{k}: {rate:.3f} (need {needed})" for k, (rate, needed) in agreements.items())
    _verdict("oracle-equivalence", ok, detail)


def test_table1_reproduction(simple_run: TrainingRun, composite_run: TrainingRun):
    # Convergence inside the epoch budgets and perturbed-set error inside
    # the tolerance bands.
    simple_epoch = simple_run.report.first_epoch_reaching(0.95)
    composite_epoch = composite_run.report.first_epoch_reaching(0.90)
    simple_error = evaluate(simple_run.model, simple_run.testset).overall_error
    composite_error = evaluate(composite_run.model, composite_run.testset).overall_error
    checks = [
        simple_epoch is not None and simple_epoch <= 40,
        composite_epoch is not None and composite_epoch <= 110,
        simple_run.report.final_val_acc >= 0.95,
        composite_run.report.final_val_acc >= 0.90,
        0.35 <= simple_error <= 0.65,
        0.45 <= composite_error <= 0.75,
    ]
    detail = (
        f"simple: val acc 0.95 at epoch {simple_epoch} (<=40), error {simple_error:.3f} "
        f"in [0.35, 0.65]; composite: val acc 0.90 at epoch {composite_epoch} (<=110), "
        f"error {composite_error:.3f} in [0.45, 0.75]"
    )
    _verdict("table1-reproduction", all(checks), detail)


def test_error_analysis(simple_run: TrainingRun, composite_run: TrainingRun):
    # Unseen-column samples >= 7/8 wrong; inadequate samples 8/8 wrong
    # with mean confidence > 0.5.
    details = []
    ok = True
    for name, run in (("simple", simple_run), ("composite", composite_run)):
        result = evaluate(run.model, run.testset)
        unseen_errors, unseen_total = result.per_type["unseen_column"]
        inad_errors, inad_total = result.per_type["inadequate"]
        confidences = [s.confidence for s in result.per_sample if s.perturbation == "inadequate"]
        mean_confidence = float(np.mean(confidences))
        ok = ok and unseen_errors >= 7 and unseen_total == 8
        ok = ok and inad_errors == 8 and inad_total == 8 and mean_confidence > 0.5
        details.append(
            f"{name}: unseen {unseen_errors}/8 wrong, inadequate {inad_errors}/8 wrong "
            f"at mean confidence {mean_confidence:.3f}"
        )
    _verdict("error-analysis", ok, "; ".join(details))


def test_bow_invariance(simple_run: TrainingRun):
    # Reorder-perturbed samples get exactly the prediction of their
    # unperturbed originals: order invariance is exact, not statistical.
    reordered = [e for e in simple_run.testset if e.perturbation == "reorder_words"]
    assert len(reordered) == 8
    exact = 0
    for example in reordered:
        # Any ordering is "the original": BoW only sees the multiset.
        original = replace(example, question=tuple(sorted(example.question)), perturbation=None)
        a = simple_run.model.forward(example)
        b = simple_run.model.forward(original)
        if a.answer_token == b.answer_token and np.array_equal(a.distribution, b.distribution):
            exact += 1
    _verdict("bow-invariance", exact == 8, f"{exact}/8 predictions identical")


def test_disambiguation_fixture(simple_run: TrainingRun):
    # The out-of-vocabulary word "emigration" resolves to the table label
    # "emigration_total" at threshold 0.8; raising the threshold never
    # turns a dropped token into a mapped one.
    table = load_embeddings(default_embeddings_path())
    vocab = simple_run.model.vocab
    mapped, report = disambiguate(["emigration"], vocab, table, threshold=0.8)
    resolved = mapped == ["emigration_total"] and report[0].similarity >= 0.8
    tokens = ["emigration", "outflow", "people", "qqqq", "town", "salzburg"]
    mapped_sets = []
    for threshold in (0.5, 0.8, 0.95):
        _, sweep_report = disambiguate(tokens, vocab, table, threshold=threshold)
        mapped_sets.append({r.token for r in sweep_report if r.status == "mapped"})
    monotone = mapped_sets[0] >= mapped_sets[1] >= mapped_sets[2]
    _verdict(
        "disambiguation-fixture",
        resolved and monotone,
        f"emigration -> emigration_total at sim {report[0].similarity:.3f}, "
        f"mapped set sizes {[len(s) for s in mapped_sets]} over thresholds (0.5, 0.8, 0.95)",
    )


def test_determinism(tmp_path):
    # gen, train and eval runs with fixed seeds produce byte-identical
    # dataset files, checkpoints and reports.
    def sha(path):
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def run(*args):
        result = subprocess.run(
            CLI + [str(a) for a in args], capture_output=True, text=True, timeout=300
        )
        assert result.returncode == 0, result.stderr
        return result

    hashes = {"gen": set(), "train": set(), "eval": set()}
    for attempt in ("a", "b"):
        data = tmp_path / f"data_{attempt}.jsonl"
        ckpt = tmp_path / f"model_{attempt}.ckpt"
        report = tmp_path / f"report_{attempt}.json"
        run("gen", "--task", "simple", "--n", "400", "--seed", "21", "--out", data)
        run("train", "--data", data, "--out", ckpt, "--seed", "21", "--max-epochs", "6")
        run("eval", "--model", ckpt, "--testset", default_testset_path("simple"),
            "--report", report)
        hashes["gen"].add(sha(data))
        hashes["train"].add(sha(ckpt))
        hashes["eval"].add(sha(report))
    ok = all(len(v) == 1 for v in hashes.values())
    detail = ", ".join(f"{k}: {len(v)} distinct hash(es)" for k, v in hashes.items())
    _verdict("determinism", ok, detail)


def test_api_contract(simple_run: TrainingRun):
    # All 32 held-out test questions round-trip through POST /api/ask with
    # well-formed payloads; attention shape is hops x n_triples throughout.
    state = ServiceState(
        model=simple_run.model,
        embeddings=load_embeddings(default_embeddings_path()),
        testset=list(simple_run.testset),
    )
    client = TestClient(create_app(state))
    entries = client.get("/api/test-questions").json()
    ok = len(entries) == 32
    checked = 0
    for entry in entries:
        response = client.post(
            "/api/ask", json={"table": entry["table"], "question": entry["question"]}
        )
        body = response.json()
        good = (
            response.status_code == 200
            and isinstance(body.get("answer"), str)
            and len(body["attention"]) == simple_run.model.n_hops
            and all(len(row) == len(body["triples"]) for row in body["attention"])
            and all(abs(sum(row) - 1.0) < 1e-6 for row in body["attention"])
            and body["disambiguation"]
        )
        ok = ok and good
        checked += 1
    _verdict("api-contract", ok and checked == 32, f"{checked}/32 round trips well-formed")
