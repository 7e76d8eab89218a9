"""Regenerate the engine exports used by the frontend contract tests.

Produces a 20-generation x 50-token graph response (with and without a
node selection) plus the matching generations listing, straight off the
HTTP API so the fixtures are real wire bytes.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from fastapi.testclient import TestClient

from genlattice.api import SessionStore, create_app

OPENERS = [
    "in the heart of the ancient forest there stands a",
    "long ago the people of the valley spoke of a",
    "every traveler who crosses the high pass remembers the",
    "few sailors ever return from the strait of the",
]
SUBJECTS = ["tower", "grove", "beacon", "market", "shrine", "harbor",
            "archive", "mill"]
MIDDLES = [
    "where the wind carries songs of the old kingdom across",
    "whose keeper tends a fire that never burns low beside",
    "and beneath its stones a hidden stream still flows toward",
    "where merchants trade lanterns and maps of the coast near",
]
PLACES = ["the silver river", "the sleeping hills", "the glass desert",
          "the iron cliffs"]
ENDINGS = [
    "and those who listen closely can hear the bells of morning calling "
    "them home to rest",
    "but none who seek it twice will ever find the same door open on the "
    "second night",
    "so the elders keep its name out of every written record to protect "
    "the young ones",
    "and the stars above it turn more slowly than they do above any other "
    "place known",
]


def corpus_texts() -> list[str]:
    rng = random.Random(9)
    texts = []
    for _ in range(20):
        words = " ".join([
            rng.choice(OPENERS), rng.choice(SUBJECTS), rng.choice(MIDDLES),
            rng.choice(PLACES), rng.choice(ENDINGS),
        ]).split()
        while len(words) < 50:
            words.append(rng.choice(["indeed", "forever", "quietly", "still"]))
        texts.append(" ".join(words[:50]))
    return texts


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)

    client = TestClient(create_app(SessionStore()))
    sid = client.post("/sessions").json()["session_id"]
    resp = client.post(f"/sessions/{sid}/prompts", json={
        "prompt_text": "tell me about a place in the old kingdom",
        "prompt_id": "p0",
        "generations": [{"text": t} for t in corpus_texts()],
    })
    assert resp.status_code == 202, resp.text

    plain = client.get(f"/sessions/{sid}/graph?threshold=0.5&lambda=0.5&seed=42")
    graph = plain.json()

    # pick a node visited by a strict subset of generations
    lattice = graph["views"][0]["lattice"]
    by_gens = {}
    for trav in lattice["traversals"]:
        for nid in trav["path"]:
            by_gens.setdefault(nid, set()).add(trav["gen"])
    total = len(lattice["traversals"])
    target = next(nid for nid in by_gens
                  if 2 <= len(by_gens[nid]) <= total - 2)

    selected = client.get(
        f"/sessions/{sid}/graph?threshold=0.5&lambda=0.5&seed=42"
        f"&selection={target}")
    gens = client.get(f"/sessions/{sid}/generations?selection={target}")

    (out_dir / "graph_20x50.json").write_text(
        json.dumps(graph, indent=1) + "\n", "utf-8")
    (out_dir / "graph_20x50_selected.json").write_text(
        json.dumps(selected.json(), indent=1) + "\n", "utf-8")
    (out_dir / "generations_20x50_selected.json").write_text(
        json.dumps(gens.json(), indent=1) + "\n", "utf-8")
    print(f"wrote fixtures to {out_dir} (selected node: {target})")


if __name__ == "__main__":
    main()
