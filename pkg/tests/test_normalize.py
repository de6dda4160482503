import math
import string
import unicodedata

import pytest
from hypothesis import given, settings, strategies as st

from collex.errors import EmptyInputError, RuleCycleError
from collex.normalize import (
    LemmaTable,
    RewriteRule,
    RuleSet,
    SuffixLemmatizer,
    aggregate,
    apply_rules,
    default_rules,
    frequency_filter,
    lemmatize,
    normalize_surface,
    render_stats_text,
    summarize,
)

from oracles import quantile_linear


@pytest.fixture(scope="module")
def rules():
    return default_rules()


@pytest.fixture(scope="module")
def lemmatizer():
    return SuffixLemmatizer.default()


class TestApplyRules:
    def test_hard_to_becomes_cant(self, rules):
        assert apply_rules("hard to breathe", rules) == "can't breathe"

    def test_pronoun_deleted(self, rules):
        assert apply_rules("my head hurt", rules) == "head hurt"

    def test_padding_protects_word_interior(self, rules):
        assert apply_rules("reissues", rules) == "reissues"

    def test_multi_pass_convergence(self, rules):
        assert apply_rules("could barely walk", rules) == "can't walk"

    def test_parentheses_removed(self, rules):
        assert apply_rules("fever (very high) daily", rules) == "fever daily"

    def test_punctuation_removed_except_comma_asterisk(self, rules):
        assert apply_rules("fever!! f*ver, chills...", rules) == "fever f*ver, chills"

    def test_degree_sign_rewritten(self, rules):
        assert apply_rules("fever of 102 °", rules) == "fever of 102 degree"

    def test_intensifier_deleted(self, rules):
        assert apply_rules("so very tired", rules) == "tired"

    def test_longest_source_wins_within_rule(self, rules):
        # "most of" fires as a unit instead of leaving a dangling "of"
        assert apply_rules("most of day", rules) == "day"

    def test_comma_is_whole_word_boundary(self, rules):
        assert apply_rules("my fever, my chills", rules) == "fever, chills"

    def test_cycle_detection(self):
        # every pass grows the text, so no fixpoint is ever reached
        growing = RuleSet([RewriteRule(("ow",), "ow ow")])
        with pytest.raises(RuleCycleError) as err:
            apply_rules("ow", growing)
        assert "ow" in str(err.value)

    def test_self_mapping_rule_rejected(self):
        with pytest.raises(ValueError):
            RewriteRule(("fever",), "fever")

    @given(st.text(alphabet=string.printable, max_size=60))
    @settings(max_examples=300)
    def test_idempotent(self, rules, phrase):
        once = apply_rules(phrase, rules)
        assert apply_rules(once, rules) == once

    @given(st.text(max_size=60))
    @settings(max_examples=300)
    def test_never_introduces_forbidden_punctuation(self, rules, phrase):
        out = apply_rules(phrase, rules)
        for ch in out:
            if unicodedata.category(ch).startswith("P"):
                assert ch in ",*'", f"unexpected punctuation {ch!r} in {out!r}"


class TestLemmatizer:
    @pytest.mark.parametrize(
        "word,lemma",
        [
            # regular inflections the suffix rules must handle
            ("headaches", "headache"),
            ("aches", "ache"),
            ("fevers", "fever"),
            ("chills", "chill"),
            ("cramps", "cramp"),
            ("rashes", "rash"),
            ("itches", "itch"),
            ("allergies", "allergy"),
            ("coughing", "cough"),
            ("coughed", "cough"),
            ("running", "run"),
            ("swelling", "swell"),
            ("throbbing", "throb"),
            ("sniffing", "sniff"),
            ("buzzing", "buzz"),
            ("noses", "nose"),
            ("sneezes", "sneeze"),
            ("classes", "class"),
            ("vomited", "vomit"),
            ("stopped", "stop"),
            # exceptions table
            ("aching", "ache"),
            ("sneezing", "sneeze"),
            ("wheezing", "wheeze"),
            ("tired", "tired"),
            ("feet", "foot"),
            ("lost", "lose"),
            # invariant forms
            ("fever", "fever"),
            ("dizziness", "dizziness"),
            ("virus", "virus"),
            ("arthritis", "arthritis"),
            ("gas", "gas"),
            ("string", "string"),
        ],
    )
    def test_word_lemma_oracle_table(self, lemmatizer, word, lemma):
        assert lemmatizer.lemma(word) == lemma

    def test_numeric_token_becomes_number(self, lemmatizer):
        assert lemmatizer.lemma("5") == "number"
        assert lemmatizer.lemma("102") == "number"


class TestLemmatize:
    def test_plural_phrase(self, rules, lemmatizer):
        assert lemmatize("headaches", lemmatizer, rules) == "headache"

    def test_number_token_dropped(self, rules, lemmatizer):
        assert lemmatize("lost 5 taste", lemmatizer, rules) == "lose taste"
        assert lemmatize("number", lemmatizer, rules) == ""

    def test_identity_on_base_form(self, rules, lemmatizer):
        assert lemmatize("fever", lemmatizer, rules) == "fever"

    def test_rules_reapplied_after_lemmas(self, rules, lemmatizer):
        # "issues" lemmatizes to "issue", which the rules rewrite again
        assert lemmatize("breathing issues", lemmatizer, rules) == "breathe problem"


class TestNormalizeSurface:
    def test_comma_splits_compound_symptoms(self, rules, lemmatizer):
        assert normalize_surface("Fevers, chills", rules, lemmatizer) == ["fever", "chill"]

    def test_degenerate_surface_drops(self, rules, lemmatizer):
        assert normalize_surface("my, the", rules, lemmatizer) == []

    def test_single_lemma(self, rules, lemmatizer):
        assert normalize_surface("so tired", rules, lemmatizer) == ["tired"]


class TestAggregate:
    def test_counts_sum_per_lemma(self):
        table = aggregate(
            [("sore head", "sore head", "h1"), ("sore head", "sore heads", "h2")]
        )
        rec = table.get("sore head")
        assert rec.count == 2
        assert rec.surface_forms == {"sore head": 1, "sore heads": 1}

    def test_empty_stream(self):
        assert len(aggregate([])) == 0

    def test_three_distinct_lemmas(self):
        table = aggregate(
            [("a", "a", "t1"), ("b", "b", "t2"), ("c", "c", "t3")]
        )
        assert len(table) == 3
        assert sorted(table.counts()) == [1, 1, 1]

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["x", "y", "z"]),
                st.sampled_from(["sx", "sy"]),
                st.integers(0, 99).map(str),
            ),
            max_size=200,
        )
    )
    def test_conserves_total_mention_count(self, triples):
        table = aggregate(triples)
        assert sum(table.counts()) == len(triples)

    def test_sample_ids_capped_and_deterministic(self):
        triples = [("l", "s", f"t{i}") for i in range(200)]
        t1 = aggregate(triples, seed=7)
        t2 = aggregate(triples, seed=7)
        assert len(t1.get("l").sample_tweet_ids) == 50
        assert t1.get("l").sample_tweet_ids == t2.get("l").sample_tweet_ids

    def test_save_load_round_trip(self, tmp_path):
        table = aggregate(
            [("fever", "Fe;ver", "t:1"), ("fever", "fever", "t2"), ("chill", "chill", "t3")]
        )
        path = tmp_path / "lemmas.tsv"
        table.save(path)
        loaded = LemmaTable.load(path)
        assert loaded.get("fever").surface_forms == {"Fe;ver": 1, "fever": 1}
        assert loaded.get("chill").count == 1


class TestFrequencyFilter:
    def test_strict_threshold(self):
        table = aggregate(
            [("a", "a", str(i)) for i in range(9)]
            + [("b", "b", str(i)) for i in range(10)]
            + [("c", "c", str(i)) for i in range(11)]
        )
        kept = frequency_filter(table, 10)
        assert sorted(kept.records) == ["b", "c"]

    def test_min_count_one_is_identity(self):
        table = aggregate([("a", "a", "1"), ("b", "b", "2")])
        assert sorted(frequency_filter(table, 1).records) == sorted(table.records)

    def test_empty_table(self):
        assert len(frequency_filter(aggregate([]), 10)) == 0

    def test_monotone_in_min_count(self):
        table = aggregate([("a", "a", str(i)) for i in range(7)] + [("b", "b", "1")])
        sizes = [len(frequency_filter(table, k)) for k in range(1, 10)]
        assert sizes == sorted(sizes, reverse=True)


class TestSummarize:
    def _table_with_counts(self, counts):
        triples = []
        for k, c in enumerate(counts):
            triples += [(f"l{k}", f"l{k}", str(i)) for i in range(c)]
        return aggregate(triples)

    def test_known_distribution(self):
        counts = [1, 2, 3, 4, 100]
        stats = summarize(self._table_with_counts(counts))
        mean = sum(counts) / len(counts)
        var = sum((c - mean) ** 2 for c in counts) / len(counts)
        assert stats.mean == mean == 22
        assert stats.median == quantile_linear(sorted(counts), 0.5) == 3
        assert stats.q1 == quantile_linear(sorted(counts), 0.25) == 2
        assert stats.q3 == quantile_linear(sorted(counts), 0.75) == 4
        assert stats.minimum == 1 and stats.maximum == 100
        assert stats.std_dev == pytest.approx(math.sqrt(var), abs=1e-12)

    def test_degenerate_single_count(self):
        stats = summarize(self._table_with_counts([7]))
        assert stats.mean == stats.median == stats.minimum == stats.maximum == 7
        assert stats.std_dev == 0

    def test_equal_counts_zero_spread(self):
        stats = summarize(self._table_with_counts([4, 4, 4]))
        assert stats.std_dev == 0
        assert stats.minimum == stats.q1 == stats.median == stats.q3 == stats.maximum == 4

    def test_empty_table_raises(self):
        with pytest.raises(EmptyInputError):
            summarize(aggregate([]))

    @given(st.lists(st.integers(1, 500), min_size=1, max_size=40))
    @settings(max_examples=100)
    def test_quartiles_match_linear_interpolation_oracle(self, counts):
        stats = summarize(self._table_with_counts([c for c in counts]))
        s = sorted(float(c) for c in counts)
        assert stats.q1 == pytest.approx(quantile_linear(s, 0.25), abs=1e-9)
        assert stats.median == pytest.approx(quantile_linear(s, 0.50), abs=1e-9)
        assert stats.q3 == pytest.approx(quantile_linear(s, 0.75), abs=1e-9)
        assert stats.minimum <= stats.q1 <= stats.median <= stats.q3 <= stats.maximum

    def test_two_column_report_layout(self):
        all_stats = summarize(self._table_with_counts([1, 3, 12]))
        kept = summarize(self._table_with_counts([12]))
        text = render_stats_text(
            [("All lemmatized entities", all_stats), (">= 10 occurrences", kept)]
        )
        lines = text.splitlines()
        assert lines[0].split("\t") == ["", "All lemmatized entities", ">= 10 occurrences"]
        assert lines[1].startswith("Mean\t")
        assert any(line.startswith("Median [Interquartile Range]\t") for line in lines)
        median_line = next(l for l in lines if l.startswith("Median"))
        assert median_line.split("\t")[1] == "3 [2, 7.5]"
