#!/usr/bin/env python3
"""Capture frozen API responses for the web UI tests.

Trains the canonical simple-key model, asks the demo questions through
the real service, and writes the responses (plus the table they were
asked against) under frontend/test/fixtures/. Seeded end to end, so the
fixtures are reproducible.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fastapi.testclient import TestClient

from asktable.core import build_vocabulary
from asktable.datagen import generate_dataset, simple_key_spec
from asktable.disambig import load_embeddings
from asktable.memnet import MemoryNetwork, ModelConfig, train
from asktable.resources import default_embeddings_path, default_sample_tables_path
from asktable.service import ServiceState, create_app

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures"


def main() -> None:
    dataset = generate_dataset(simple_key_spec(5949, seed=1))
    model = MemoryNetwork.init(ModelConfig(max_epochs=40, seed=1), build_vocabulary(dataset))
    report = train(model, dataset)
    print(f"trained: {report.total_epochs} epochs, val acc {report.final_val_acc:.4f}")

    tables = json.loads(default_sample_tables_path().read_text())
    state = ServiceState(
        model=model,
        embeddings=load_embeddings(default_embeddings_path()),
        tables=tables,
    )
    client = TestClient(create_app(state))

    austria = next(t for t in tables if t["table_id"] == "austria")
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)

    ask = client.post(
        "/api/ask", json={"table_id": "austria", "question": "What is the immigration in Salzburg?"}
    )
    ask.raise_for_status()
    body = ask.json()
    assert body["answer"] == "170", body["answer"]
    summed = [sum(col) for col in zip(*body["attention"])]
    best = body["triples"][summed.index(max(summed))]
    assert best == ["row2", "immigration", "170"], best
    (FIXTURE_DIR / "ask_response.json").write_text(
        json.dumps({"table": austria, "response": body}, indent=2) + "\n"
    )
    print(f"ask_response.json: answer {body['answer']}, peak slot {best}")

    mapped = client.post(
        "/api/ask", json={"table_id": "austria", "question": "What is the emigration in Salzburg?"}
    )
    mapped.raise_for_status()
    mapped_body = mapped.json()
    assert any(e["status"] == "mapped" for e in mapped_body["disambiguation"])
    (FIXTURE_DIR / "ask_response_disambiguated.json").write_text(
        json.dumps({"table": austria, "response": mapped_body}, indent=2) + "\n"
    )
    print("ask_response_disambiguated.json: mapped tokens",
          [e["token"] for e in mapped_body["disambiguation"] if e["status"] == "mapped"])


if __name__ == "__main__":
    main()
