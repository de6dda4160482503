import math
import random
import string

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collex.errors import (
    ConfigurationError,
    DegenerateVectorError,
    InsufficientDataError,
    InventoryError,
    MissingEmbeddingError,
)
from collex.mapping import (
    BOTH,
    LEXICAL,
    SEMANTIC,
    Concept,
    ConceptInventory,
    EmbeddingStore,
    MappingCandidate,
    SemanticIndex,
    ThresholdConfig,
    TrigramEmbedder,
    cosine,
    elbow,
    ensemble_map,
    fuzzy_similarity,
    levenshtein,
    lexical_top1,
    load_candidates,
    save_candidates,
    semantic_top1,
    threshold_sweep,
)

from oracles import levenshtein_matrix, second_difference_elbow

words = st.text(alphabet=string.ascii_lowercase + " '", max_size=20)


class TestLevenshtein:
    @pytest.mark.parametrize(
        "a,b,d",
        [
            ("kitten", "sitting", 3),
            ("fever", "fever", 0),
            ("abdominal cramp", "abdominal cramps", 1),
            ("", "abc", 3),
            ("abc", "", 3),
            ("", "", 0),
            ("flaw", "lawn", 2),
        ],
    )
    def test_known_distances(self, a, b, d):
        assert levenshtein(a, b) == d
        assert levenshtein_matrix(a, b) == d

    @given(words, words)
    @settings(max_examples=400)
    def test_matches_full_matrix_oracle(self, a, b):
        assert levenshtein(a, b) == levenshtein_matrix(a, b)

    @given(words, words, words)
    @settings(max_examples=200)
    def test_metric_axioms(self, a, b, c):
        assert levenshtein(a, a) == 0
        assert levenshtein(a, b) == levenshtein(b, a)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    def test_unicode_scalar_values(self):
        assert levenshtein("naïve", "naive") == 1
        assert levenshtein("咳嗽", "咳") == 1


class TestFuzzySimilarity:
    def test_worked_value(self):
        assert fuzzy_similarity("abdominal cramps", "abdominal cramp") == 1 - 1 / 16
        assert fuzzy_similarity("abdominal cramps", "abdominal cramp") == 0.9375

    def test_identity_is_one(self):
        for x in ("", "a", "sore throat"):
            assert fuzzy_similarity(x, x) == 1.0

    def test_total_mismatch_is_zero(self):
        assert fuzzy_similarity("a", "b") == 0.0

    @given(words, words)
    @settings(max_examples=200)
    def test_range_and_identity_characterization(self, a, b):
        s = fuzzy_similarity(a, b)
        assert 0.0 <= s <= 1.0
        if a or b:
            assert (s == 1.0) == (a == b)


class TestCosine:
    def test_self_similarity(self):
        v = np.array([0.3, 0.4, 0.5])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_forty_five_degrees(self):
        got = cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert got == pytest.approx(0.70710678, abs=1e-8)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateVectorError):
            cosine(np.zeros(3), np.ones(3))


def brute_force_lexical(lemma, inventory):
    """Independent scan: plain loops, explicit tie-break bookkeeping."""
    best = None
    for concept in sorted(inventory.concepts, key=lambda c: c.concept_id):
        for name in sorted(set(concept.names())):
            m = max(len(lemma), len(name))
            score = 1.0 if m == 0 else 1.0 - levenshtein_matrix(lemma, name) / m
            if best is None or score > best[0]:
                best = (score, concept.concept_id)
    return best[1], max(0.0, best[0])


def brute_force_semantic(lemma, inventory, store):
    best = None
    lv = store.vector(lemma)
    for concept in sorted(inventory.concepts, key=lambda c: c.concept_id):
        for name in sorted(set(concept.names())):
            nv = store.vector(name)
            score = float(np.dot(nv, lv))
            if best is None or score > best[0]:
                best = (score, concept.concept_id)
    return best[1], min(1.0, max(0.0, best[0]))


def random_inventory(rng, n_concepts, max_names=3):
    concepts = []
    used = set()
    for i in range(n_concepts):
        names = []
        for _ in range(rng.randint(1, max_names)):
            while True:
                name = "".join(
                    rng.choice("abcdefg ") for _ in range(rng.randint(1, 12))
                ).strip()
                if name and name not in used:
                    used.add(name)
                    names.append(name)
                    break
        concepts.append(Concept(f"C{i:04d}", names[0], tuple(names[1:])))
    return ConceptInventory(concepts)


class TestLexicalTop1:
    def test_worked_example(self, small_inventory):
        cand = lexical_top1("abdominal cramps", ConceptInventory(
            [Concept("C900", "Abdominal cramps", ("abdominal cramp",))]
        ))
        assert cand.score == 0.9375

    def test_exact_synonym_scores_one(self, small_inventory):
        cand = lexical_top1("head pain", small_inventory)
        assert cand.concept_id == "C002"
        assert cand.score == 1.0
        assert cand.channel == LEXICAL

    def test_singleton_inventory(self):
        inv = ConceptInventory([Concept("C1", "Fever")])
        cand = lexical_top1("completely unrelated words", inv)
        assert cand.concept_id == "C1"

    def test_tie_breaks_to_smaller_concept_id(self):
        inv = ConceptInventory(
            [Concept("C2", "bbbb"), Concept("C1", "aaaa"), Concept("C3", "cccc")]
        )
        # all names at equal distance from the lemma
        cand = lexical_top1("dddd", inv)
        assert cand.concept_id == "C1"

    def test_matches_brute_force_on_random_instances(self, subtests=None):
        rng = random.Random(1234)
        for trial in range(40):
            inv = random_inventory(rng, rng.randint(1, 12))
            for _ in range(5):
                lemma = "".join(rng.choice("abcdefg ") for _ in range(rng.randint(1, 12))).strip() or "q"
                got = lexical_top1(lemma, inv)
                want_cid, want_score = brute_force_lexical(lemma, inv)
                assert (got.concept_id, got.score) == (want_cid, want_score)


class TestSemanticTop1:
    def test_identical_vector_scores_one(self, small_inventory):
        store = EmbeddingStore(4)
        rng = np.random.default_rng(0)
        for _, name in small_inventory.all_names():
            store.add(name, rng.normal(size=4))
        store.add("burning up", store.vector("fever"))
        cand = semantic_top1("burning up", small_inventory, store)
        assert cand.concept_id == "C001"
        assert cand.score == pytest.approx(1.0, abs=1e-12)
        assert cand.channel == SEMANTIC

    def test_known_angles(self):
        inv = ConceptInventory(
            [Concept("C1", "n1"), Concept("C2", "n2"), Concept("C3", "n3")]
        )
        store = EmbeddingStore(2)
        store.add("n1", [1.0, 0.0])
        store.add("n2", [math.cos(math.pi / 4), math.sin(math.pi / 4)])
        store.add("n3", [0.0, 1.0])
        store.add("query", [math.cos(math.pi / 8), math.sin(math.pi / 8)])
        # query at 22.5 degrees: nearest is n2 at 45-22.5 = 22.5 vs n1 at 22.5 - tie!
        # move query slightly toward n2
        store.add("query2", [math.cos(math.pi / 7), math.sin(math.pi / 7)])
        cand = semantic_top1("query2", inv, store)
        assert cand.concept_id == "C2"

    def test_exact_tie_breaks_to_smaller_concept_id(self):
        inv = ConceptInventory([Concept("C2", "x2"), Concept("C1", "x1")])
        store = EmbeddingStore(3)
        vec = [0.6, 0.8, 0.0]
        store.add("x1", vec)
        store.add("x2", vec)
        store.add("q", [0.0, 1.0, 0.0])
        cand = semantic_top1("q", inv, store)
        assert cand.concept_id == "C1"

    def test_missing_vectors_listed(self, small_inventory):
        store = EmbeddingStore(3)
        store.add("fever", [1, 0, 0])
        with pytest.raises(MissingEmbeddingError) as err:
            semantic_top1("anything", small_inventory, store)
        assert "headache" in err.value.terms

    def test_negative_cosine_clamped_to_zero(self):
        inv = ConceptInventory([Concept("C1", "n1")])
        store = EmbeddingStore(2)
        store.add("n1", [1.0, 0.0])
        store.add("q", [-1.0, 0.0])
        assert semantic_top1("q", inv, store).score == 0.0

    def test_matches_brute_force_on_random_instances(self):
        rng = random.Random(99)
        nprng = np.random.default_rng(99)
        for _ in range(25):
            inv = random_inventory(rng, rng.randint(1, 10))
            store = EmbeddingStore(8)
            for _, name in inv.all_names():
                store.add(name, nprng.normal(size=8))
            for k in range(4):
                lemma = f"lemma {k}"
                store.add(lemma, nprng.normal(size=8))
                got = semantic_top1(lemma, inv, store)
                want_cid, want_score = brute_force_semantic(lemma, inv, store)
                assert got.concept_id == want_cid
                assert got.score == pytest.approx(want_score, abs=1e-12)

    def test_scale_invariance_of_argmax(self, small_inventory):
        nprng = np.random.default_rng(5)
        raw = {name: nprng.normal(size=6) for _, name in small_inventory.all_names()}
        raw["mystery"] = nprng.normal(size=6)
        s1 = EmbeddingStore(6)
        s2 = EmbeddingStore(6)
        for term, vec in raw.items():
            s1.add(term, vec)
            s2.add(term, vec * 37.5)
        c1 = semantic_top1("mystery", small_inventory, s1)
        c2 = semantic_top1("mystery", small_inventory, s2)
        assert c1.concept_id == c2.concept_id


class TestEnsembleMap:
    def _stores(self, small_inventory):
        store = EmbeddingStore(16, embedder=TrigramEmbedder(16))
        return store

    def test_agreement_collapses_to_both(self, small_inventory):
        store = self._stores(small_inventory)
        out = ensemble_map("fever", small_inventory, store)
        assert len(out) == 1
        assert out[0].channel == BOTH
        assert out[0].concept_id == "C001"
        assert out[0].score == 1.0

    def test_disagreement_keeps_both_candidates(self):
        inv = ConceptInventory([Concept("CA", "alpha"), Concept("CB", "beta")])
        store = EmbeddingStore(2)
        store.add("alpha", [1.0, 0.0])
        store.add("beta", [0.0, 1.0])
        store.add("alphq", [0.0, 1.0])  # lexically alpha-like, semantically beta-like
        out = ensemble_map("alphq", inv, store, ThresholdConfig(0.8, 0.8))
        assert {c.channel for c in out} == {SEMANTIC, LEXICAL}
        by_channel = {c.channel: c.concept_id for c in out}
        assert by_channel[SEMANTIC] == "CB"
        assert by_channel[LEXICAL] == "CA"

    def test_both_below_tau_yields_empty(self, small_inventory):
        store = self._stores(small_inventory)
        out = ensemble_map("zzzzqqqq", small_inventory, store, ThresholdConfig(0.99, 0.99))
        assert out == []

    def test_single_surviving_channel(self):
        inv = ConceptInventory([Concept("CA", "alpha")])
        store = EmbeddingStore(2)
        store.add("alpha", [1.0, 0.0])
        store.add("alphq", [0.0, 1.0])  # cosine 0 with alpha
        out = ensemble_map("alphq", inv, store, ThresholdConfig(0.5, 0.5))
        assert [c.channel for c in out] == [LEXICAL]

    def test_output_never_longer_than_two(self, small_inventory, trigram_store):
        for lemma in ("fever", "head pain", "dry cough", "nonsense phrase"):
            out = ensemble_map(lemma, small_inventory, trigram_store, ThresholdConfig(0.0, 0.0))
            assert 1 <= len(out) <= 2
            if len(out) == 1 and out[0].channel == BOTH:
                assert out[0].concept_id


class TestThresholdSweep:
    def test_boundary_taus(self, small_inventory, trigram_store):
        lemmas = ["fever", "head pain", "zzz not here"]
        sweep = threshold_sweep(lemmas, small_inventory, trigram_store, [0.0, 1.0])
        assert sweep[LEXICAL][0.0] == len(lemmas)
        assert sweep[LEXICAL][1.0] == 2  # exact matches only
        assert sweep[SEMANTIC][0.0] == len(lemmas)

    def test_counts_non_increasing(self, small_inventory, trigram_store):
        lemmas = ["fever", "cough", "tired", "weird thing", "sore throat", "taste loss"]
        taus = [round(0.1 * k, 1) for k in range(11)]
        sweep = threshold_sweep(lemmas, small_inventory, trigram_store, taus)
        for channel in (SEMANTIC, LEXICAL):
            counts = [sweep[channel][t] for t in taus]
            assert counts == sorted(counts, reverse=True)
            # brute-force recount per tau
            from collex.mapping import channel_scores

            scores = channel_scores(lemmas, small_inventory, trigram_store)[channel]
            for t in taus:
                assert sweep[channel][t] == sum(1 for v in scores.values() if v >= t)

    def test_unsorted_taus_rejected(self, small_inventory, trigram_store):
        with pytest.raises(ConfigurationError):
            threshold_sweep(["fever"], small_inventory, trigram_store, [0.5, 0.1])


class TestElbow:
    def test_spec_sequence(self):
        taus = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
        counts = [1000, 980, 960, 940, 300, 280]
        sweep = dict(zip(taus, counts))
        assert elbow(sweep) == 0.8
        assert second_difference_elbow(taus, counts) == 0.8

    def test_linear_counts_tie_to_largest_tau(self):
        taus = [0.0, 0.25, 0.5, 0.75, 1.0]
        counts = [100, 80, 60, 40, 20]
        assert elbow(dict(zip(taus, counts))) == taus[-3]

    def test_step_function_cliff(self):
        # counts collapse between 0.6 and 0.8; the elbow is the last tau
        # before the drop, as in the worked sequence above
        taus = [0.2, 0.4, 0.6, 0.8, 1.0]
        counts = [50, 50, 50, 7, 7]
        sweep = dict(zip(taus, counts))
        want = second_difference_elbow(taus, counts)
        assert elbow(sweep) == want == 0.6

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            elbow({0.1: 5, 0.2: 3})

    def test_non_uniform_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            elbow({0.1: 5, 0.2: 4, 0.5: 1})


class TestStoreAndEmbedder:
    def test_round_trip(self, tmp_path):
        store = EmbeddingStore(3)
        store.add("fever", [3.0, 4.0, 0.0])  # normalized on add
        path = tmp_path / "emb.tsv"
        store.save(path)
        loaded = EmbeddingStore.load(path)
        assert loaded.dimension == 3
        np.testing.assert_allclose(loaded.vector("fever"), [0.6, 0.8, 0.0], atol=1e-12)

    def test_vectors_unit_normalized(self):
        store = EmbeddingStore(4)
        store.add("x", [2.0, 0.0, 0.0, 0.0])
        assert np.linalg.norm(store.vector("x")) == pytest.approx(1.0, abs=1e-9)

    def test_zero_vector_rejected(self):
        store = EmbeddingStore(2)
        with pytest.raises(DegenerateVectorError):
            store.add("x", [0.0, 0.0])

    def test_trigram_embedder_deterministic_and_unit(self):
        emb = TrigramEmbedder(32)
        v1, v2 = emb("sore throat"), emb("sore throat")
        np.testing.assert_array_equal(v1, v2)
        assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-9)
        assert not np.array_equal(v1, emb("headache"))

    def test_identical_terms_get_identical_fallback_vectors(self):
        store = EmbeddingStore(16, embedder=TrigramEmbedder(16))
        np.testing.assert_array_equal(store.vector("chills"), store.vector("chills"))


class TestInventoryIO:
    def test_round_trip(self, tmp_path, small_inventory):
        path = tmp_path / "inv.tsv"
        small_inventory.save(path)
        loaded = ConceptInventory.load(path)
        assert [c.concept_id for c in loaded.concepts] == [
            c.concept_id for c in small_inventory.concepts
        ]
        assert loaded.by_id["C006"].preferred_name == "Sore throat"
        assert "throat pain" in loaded.by_id["C006"].synonyms

    def test_name_index_covers_all_names(self, small_inventory):
        for c in small_inventory.concepts:
            for name in c.names():
                assert small_inventory.name_index[name] == c.concept_id

    def test_shared_name_across_concepts_rejected(self):
        with pytest.raises(InventoryError):
            ConceptInventory(
                [Concept("C1", "Fever", ("hot",)), Concept("C2", "Hotness", ("hot",))]
            )


def test_candidate_file_round_trip(tmp_path, small_inventory):
    cands = [
        MappingCandidate("fever", "C001", 1.0, BOTH),
        MappingCandidate("head pain", "C002", 0.9375, LEXICAL),
    ]
    path = tmp_path / "cands.tsv"
    save_candidates(path, cands, small_inventory, round_no=2)
    loaded = load_candidates(path)
    assert [(c.lemma, c.concept_id, c.channel, r) for c, r in loaded] == [
        ("fever", "C001", BOTH, 2),
        ("head pain", "C002", LEXICAL, 2),
    ]
    assert loaded[1][0].score == 0.9375
