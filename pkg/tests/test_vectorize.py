from __future__ import annotations

import math
import random

import pytest

from convrec.model import UserProfile, HistoryEntry
from convrec.vectorize import (
    EmptyCorpus,
    FeatureVector,
    build_model,
    cosine,
    vectorize_history,
    vectorize_item,
    vectorize_preferences,
)

from conftest import make_item


def corpus_of_four():
    return [
        make_item("i1", ("genre", "comedy"), ("actor", "x")),
        make_item("i2", ("genre", "comedy"), ("genre", "drama")),
        make_item("i3", ("genre", "drama"), ("actor", "x")),
        make_item("i4", ("genre", "horror"), ("actor", "x"), ("actor", "y")),
    ]


class TestBuildModel:
    def test_idf_spot_value(self):
        model = build_model(corpus_of_four())
        # genre=comedy occurs in 2 of 4 documents
        assert model.df["genre=comedy"] == 2
        assert model.idf["genre=comedy"] == pytest.approx(math.log(2), abs=1e-12)

    def test_idf_zero_when_everywhere(self):
        items = [make_item(f"i{k}", ("genre", "comedy")) for k in range(4)]
        model = build_model(items)
        assert model.idf["genre=comedy"] == 0.0

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_model([])

    def test_df_matches_recount_oracle(self):
        rng = random.Random(11)
        items = [
            make_item(
                f"i{k}",
                *[("genre", f"g{rng.randrange(6)}") for _ in range(rng.randrange(1, 4))],
            )
            for k in range(30)
        ]
        model = build_model(items)
        for key, df in model.df.items():
            recount = sum(1 for item in items if key in item.feature_keys())
            assert df == recount
        assert set(model.df) == set(model.idf)


class TestVectorizeItem:
    def test_single_feature_normalizes_to_one(self):
        model = build_model(corpus_of_four())
        vec = vectorize_item(model, make_item("z", ("genre", "comedy")))
        assert vec.entries == {"genre=comedy": pytest.approx(1.0)}

    def test_all_zero_idf_gives_empty_vector(self):
        items = [make_item(f"i{k}", ("genre", "comedy")) for k in range(4)]
        model = build_model(items)
        assert not vectorize_item(model, make_item("z", ("genre", "comedy")))

    def test_two_feature_ratio(self):
        # idf(comedy) = ln 2, idf(actor=x unseen over 4 docs) = ln 4 = 2 ln 2,
        # so the normalized vector is (1, 2) / sqrt(5).
        items = [
            make_item("i1", ("genre", "comedy")),
            make_item("i2", ("genre", "comedy")),
            make_item("i3", ("genre", "drama")),
            make_item("i4", ("genre", "horror")),
        ]
        model = build_model(items)
        vec = vectorize_item(model, make_item("z", ("genre", "comedy"), ("actor", "x")))
        assert vec["genre=comedy"] == pytest.approx(1 / math.sqrt(5), abs=1e-12)
        assert vec["actor=x"] == pytest.approx(2 / math.sqrt(5), abs=1e-12)

    def test_spot_values_from_examples(self):
        items = [
            make_item("i1", ("genre", "comedy")),
            make_item("i2", ("genre", "comedy")),
            make_item("i3", ("genre", "drama")),
            make_item("i4", ("genre", "horror")),
        ]
        model = build_model(items)
        vec = vectorize_item(model, make_item("z", ("genre", "comedy"), ("actor", "x")))
        assert vec["genre=comedy"] == pytest.approx(0.4472, abs=1e-4)
        assert vec["actor=x"] == pytest.approx(0.8944, abs=1e-4)


class TestVectorizeHistory:
    def test_empty_history(self):
        model = build_model(corpus_of_four())
        assert not vectorize_history(model, UserProfile("u", []), {})

    def test_single_item_equals_item_vector(self):
        items = corpus_of_four()
        model = build_model(items)
        lookup = {it.item_id: it for it in items}
        profile = UserProfile("u", [HistoryEntry("i1")])
        assert vectorize_history(model, profile, lookup).entries == pytest.approx(
            vectorize_item(model, items[0]).entries)

    def test_disjoint_items_split_mass(self):
        items = [
            make_item("a", ("genre", "comedy")),
            make_item("b", ("genre", "drama")),
            make_item("c", ("actor", "x")),
            make_item("d", ("actor", "y")),
        ]
        model = build_model(items)
        lookup = {it.item_id: it for it in items}
        profile = UserProfile("u", [HistoryEntry("a", 1.0), HistoryEntry("b", 1.0)])
        vec = vectorize_history(model, profile, lookup)
        # Oracle: explicit sum of the two unit vectors, then normalize.
        assert vec["genre=comedy"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert vec["genre=drama"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_missing_items_skipped(self):
        items = corpus_of_four()
        model = build_model(items)
        lookup = {it.item_id: it for it in items}
        profile = UserProfile("u", [HistoryEntry("i1"), HistoryEntry("ghost")])
        with_ghost = vectorize_history(model, profile, lookup)
        without = vectorize_history(model, UserProfile("u", [HistoryEntry("i1")]), lookup)
        assert with_ghost.entries == pytest.approx(without.entries)


class TestVectorizePreferences:
    def test_empty(self):
        model = build_model(corpus_of_four())
        assert not vectorize_preferences(model, {})

    def test_single_entry(self):
        model = build_model(corpus_of_four())
        vec = vectorize_preferences(model, {"genre=comedy": 1.0})
        assert vec.entries == {"genre=comedy": pytest.approx(1.0)}

    def test_signs_preserved(self):
        model = build_model(corpus_of_four())
        # comedy and horror have different idf here (df 2 vs 1), so use two
        # features with equal idf to get the +-1/sqrt(2) of the spot example.
        vec = vectorize_preferences(model, {"genre=comedy": 1.0, "genre=drama": -1.0})
        assert vec["genre=comedy"] == pytest.approx(0.7071, abs=1e-4)
        assert vec["genre=drama"] == pytest.approx(-0.7071, abs=1e-4)


class TestCosine:
    def test_identity(self):
        v = FeatureVector({"x": 1.0})
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(FeatureVector({"x": 1.0}), FeatureVector({"y": 1.0})) == 0.0

    def test_partial_overlap(self):
        a = FeatureVector({"x": 1.0, "y": 1.0})
        b = FeatureVector({"x": 1.0})
        assert cosine(a, b) == pytest.approx(0.70711, abs=1e-5)

    def test_empty_vector_is_zero(self):
        assert cosine(FeatureVector({}), FeatureVector({"x": 1.0})) == 0.0
        assert cosine(FeatureVector({}), FeatureVector({})) == 0.0


def _random_vector(rng: random.Random, signed: bool = True) -> FeatureVector:
    n = rng.randrange(0, 8)
    entries = {}
    for _ in range(n):
        v = rng.uniform(0.05, 2.0)
        if signed and rng.random() < 0.4:
            v = -v
        entries[f"f{rng.randrange(12)}"] = v
    return FeatureVector(entries)


class TestVectorProperties:
    def test_cosine_symmetry_and_bound(self):
        rng = random.Random(23)
        for _ in range(500):
            a, b = _random_vector(rng), _random_vector(rng)
            c1, c2 = cosine(a, b), cosine(b, a)
            assert c1 == pytest.approx(c2, abs=1e-12)
            assert abs(c1) <= 1.0 + 1e-9

    def test_cosine_scale_invariance(self):
        rng = random.Random(29)
        for _ in range(300):
            a, b = _random_vector(rng), _random_vector(rng)
            lam = rng.uniform(0.01, 50.0)
            scaled = FeatureVector({k: lam * v for k, v in a.entries.items()})
            assert cosine(scaled, b) == pytest.approx(cosine(a, b), abs=1e-9)

    def test_outputs_unit_norm_or_empty(self):
        rng = random.Random(31)
        items = [
            make_item(f"i{k}", *[("c", f"v{rng.randrange(9)}")
                                 for _ in range(rng.randrange(0, 4))])
            for k in range(25)
        ]
        model = build_model(items)
        lookup = {it.item_id: it for it in items}
        for item in items:
            vec = vectorize_item(model, item)
            assert not vec or vec.norm() == pytest.approx(1.0, abs=1e-9)
        for _ in range(100):
            hist = [HistoryEntry(f"i{rng.randrange(25)}", rng.uniform(0, 5))
                    for _ in range(rng.randrange(0, 5))]
            vec = vectorize_history(model, UserProfile("u", hist), lookup)
            assert not vec or vec.norm() == pytest.approx(1.0, abs=1e-9)
        for _ in range(100):
            prefs = {f"c=v{rng.randrange(9)}": rng.uniform(-1, 1)
                     for _ in range(rng.randrange(0, 5))}
            vec = vectorize_preferences(model, prefs)
            assert not vec or vec.norm() == pytest.approx(1.0, abs=1e-9)
