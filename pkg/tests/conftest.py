"""Shared fixtures: canonical datasets and trained models.

The full-size trainings are session-scoped because several acceptance
criteria (Table-1 reproduction, error analysis, oracle agreement, API
contract) score the same two models.
"""

from __future__ import annotations

import pytest

from asktable.core import build_vocabulary
from asktable.datagen import composite_key_spec, generate_dataset, simple_key_spec
from asktable.evaluation import build_testset
from asktable.memnet import MemoryNetwork, ModelConfig, train

TRAIN_SEED = 1
MODEL_SEED = 1
SIMPLE_TRAIN_N = 5949
COMPOSITE_TRAIN_N = 18953
SIMPLE_EPOCH_BUDGET = 40
COMPOSITE_EPOCH_BUDGET = 110
BASE_POOL_N = 400
SIMPLE_BASE_SEED = 20250811
COMPOSITE_BASE_SEED = 20250812
TESTSET_SEED = 99


class TrainingRun:
    def __init__(self, spec, dataset, model, report, base_spec, base_pool, testset):
        self.spec = spec
        self.dataset = dataset
        self.model = model
        self.report = report
        self.base_spec = base_spec
        self.base_pool = base_pool
        self.testset = testset


def _run(make_spec, train_n, base_seed, max_epochs) -> TrainingRun:
    spec = make_spec(train_n, seed=TRAIN_SEED)
    dataset = generate_dataset(spec)
    vocab = build_vocabulary(dataset)
    config = ModelConfig(max_epochs=max_epochs, seed=MODEL_SEED)
    model = MemoryNetwork.init(config, vocab)
    report = train(model, dataset)
    base_spec = make_spec(BASE_POOL_N, seed=base_seed)
    base_pool = generate_dataset(base_spec)
    testset = build_testset(base_pool, base_spec, seed=TESTSET_SEED)
    return TrainingRun(spec, dataset, model, report, base_spec, base_pool, testset)


@pytest.fixture(scope="session")
def simple_run() -> TrainingRun:
    return _run(simple_key_spec, SIMPLE_TRAIN_N, SIMPLE_BASE_SEED, SIMPLE_EPOCH_BUDGET)


@pytest.fixture(scope="session")
def composite_run() -> TrainingRun:
    return _run(composite_key_spec, COMPOSITE_TRAIN_N, COMPOSITE_BASE_SEED, COMPOSITE_EPOCH_BUDGET)


@pytest.fixture(scope="session")
def small_model() -> MemoryNetwork:
    """A quickly trained simple-key model for service and CLI tests."""
    spec = simple_key_spec(2000, seed=5)
    dataset = generate_dataset(spec)
    vocab = build_vocabulary(dataset)
    model = MemoryNetwork.init(ModelConfig(max_epochs=25, seed=5), vocab)
    train(model, dataset)
    model.meta.update({"task": "simple_key", "train_examples": len(dataset)})
    return model
