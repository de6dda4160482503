import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"

sys.path.insert(0, str(TESTS_DIR))

from collex.mapping import Concept, ConceptInventory, EmbeddingStore, TrigramEmbedder


@pytest.fixture
def small_inventory() -> ConceptInventory:
    return ConceptInventory(
        [
            Concept("C001", "Fever", ("fever", "high temperature")),
            Concept("C002", "Headache", ("headache", "head pain")),
            Concept("C003", "Cough", ("cough", "dry cough")),
            Concept("C004", "Fatigue", ("fatigue", "tired")),
            Concept("C005", "Loss of taste", ("loss of taste", "taste loss")),
            Concept("C006", "Sore throat", ("sore throat", "throat pain")),
        ]
    )


@pytest.fixture
def trigram_store(small_inventory) -> EmbeddingStore:
    store = EmbeddingStore(48, embedder=TrigramEmbedder(48))
    for _, name in small_inventory.all_names():
        store.vector(name)
    return store
