from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, settings

from genlattice.embedding import ContextEmbedder, HashedTrigramEmbedder
from genlattice.segmentation import RawGeneration

settings.register_profile(
    "ci", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

NOUNS = [
    "dragon", "castle", "forest", "river", "merchant", "child", "storm",
    "lantern", "wolf", "garden", "mountain", "sailor", "letter", "city",
    "shadow", "harvest", "bridge", "oracle", "pirate", "meadow", "tower",
    "crystal", "serpent", "village", "library", "comet", "harbor", "ember",
]
VERBS = [
    "guards", "crosses", "discovers", "remembers", "builds", "follows",
    "ignites", "watches", "carries", "awakens", "shelters", "traces",
    "summons", "repairs", "chases", "paints",
]
ADJECTIVES = [
    "ancient", "quiet", "gleaming", "restless", "hidden", "crimson",
    "weathered", "luminous", "forgotten", "brave", "hollow", "distant",
]
FILLERS = ["the", "a", "of", "in", "and", "with", "over", "under", "near"]


def template_pool(n_templates: int, rng: random.Random) -> list[list[str]]:
    """Sentence skeletons mixing fixed fillers and open slots (N/V/A)."""
    pool = []
    for _ in range(n_templates):
        length = rng.randint(5, 9)
        template = ["the", "N", "V"]
        while len(template) < length:
            template.append(rng.choice(["N", "V", "A", *FILLERS]))
        pool.append(template)
    return pool


def synthetic_corpus(seed: int, n_generations: int, n_templates: int,
                     lexicon_size: int, prompt_id: str = "prompt-0",
                     id_prefix: str = "gen") -> list[RawGeneration]:
    """Template-grammar sampler: small pools -> repetitive, large -> diverse."""
    rng = random.Random(seed)
    nouns = NOUNS[: max(2, min(lexicon_size, len(NOUNS)))]
    verbs = VERBS[: max(2, min(lexicon_size // 2 + 1, len(VERBS)))]
    adjectives = ADJECTIVES[: max(2, min(lexicon_size // 2 + 1, len(ADJECTIVES)))]
    templates = template_pool(n_templates, random.Random(seed + 1))
    out = []
    for i in range(n_generations):
        template = rng.choice(templates)
        words = []
        for slot in template:
            if slot == "N":
                words.append(rng.choice(nouns))
            elif slot == "V":
                words.append(rng.choice(verbs))
            elif slot == "A":
                words.append(rng.choice(adjectives))
            else:
                words.append(slot)
        out.append(RawGeneration(
            id=f"{id_prefix}-{i}", prompt_id=prompt_id, text=" ".join(words)))
    return out


def random_unicode_text(rng: random.Random, max_len: int = 80) -> str:
    alphabet = (
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
        ".,!?;:'\"()-—éüñ中文\U0001f409 \t\n "
    )
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


@pytest.fixture(scope="session")
def fallback_embedder() -> ContextEmbedder:
    return ContextEmbedder(HashedTrigramEmbedder())
