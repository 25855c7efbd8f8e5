"""TF-IDF feature space over the item corpus.

The model is built once at startup from the full item catalogue and then
treated as immutable. Items, user histories, and stated preferences are
all mapped into the same sparse vector space so that the re-ranker and
the explainer can compare them with cosine similarity.

Item features are tags, not text, so term frequency is binary (tf = 1)
and idf(f) = ln(n_docs / df(f)). A feature the model never saw is scored
as if it occurred in a single document: idf' = ln(n_docs).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .model import ItemProfile, UserProfile


class EmptyCorpus(ValueError):
    """The TF-IDF model needs at least one item to be built."""


@dataclass(frozen=True)
class TfIdfModel:
    n_docs: int
    df: dict[str, int]
    idf: dict[str, float]

    def idf_for(self, feature_key: str) -> float:
        # Unseen features are treated as maximally rare (df = 1).
        return self.idf.get(feature_key, math.log(self.n_docs))


@dataclass
class FeatureVector:
    """Sparse map feature-key -> weight; zero entries are never stored."""

    entries: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {k: v for k, v in self.entries.items() if v != 0.0}

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __getitem__(self, key: str) -> float:
        return self.entries.get(key, 0.0)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries.values()))

    def normalized(self) -> "FeatureVector":
        n = self.norm()
        if n == 0.0:
            return FeatureVector({})
        return FeatureVector({k: v / n for k, v in self.entries.items()})

    def dot(self, other: "FeatureVector") -> float:
        if len(other.entries) < len(self.entries):
            self, other = other, self
        return sum(v * other.entries.get(k, 0.0) for k, v in self.entries.items())


def build_model(corpus: Iterable[ItemProfile]) -> TfIdfModel:
    """Count document frequencies over the corpus and derive idf weights."""
    df: dict[str, int] = {}
    n_docs = 0
    for item in corpus:
        n_docs += 1
        for key in item.feature_keys():
            df[key] = df.get(key, 0) + 1
    if n_docs == 0:
        raise EmptyCorpus("cannot build a TF-IDF model from an empty corpus")
    idf = {key: math.log(n_docs / count) for key, count in df.items()}
    return TfIdfModel(n_docs, df, idf)


def vectorize_item(model: TfIdfModel, item: ItemProfile) -> FeatureVector:
    """Unit-norm idf vector of an item's feature tags (tf = 1 each)."""
    raw = {key: model.idf_for(key) for key in item.feature_keys()}
    return FeatureVector(raw).normalized()


def vectorize_history(
    model: TfIdfModel,
    profile: UserProfile,
    items: Mapping[str, ItemProfile],
) -> FeatureVector:
    """Score-weighted sum of the history items' vectors, unit-normalized.

    Entries without a score weigh 1.0; history items missing from
    ``items`` are skipped.
    """
    acc: dict[str, float] = {}
    for entry in profile.history:
        item = items.get(entry.item_id)
        if item is None:
            continue
        weight = 1.0 if entry.score is None else entry.score
        for key, v in vectorize_item(model, item).entries.items():
            acc[key] = acc.get(key, 0.0) + weight * v
    return FeatureVector(acc).normalized()


def vectorize_preferences(model: TfIdfModel, prefs: Mapping[str, float]) -> FeatureVector:
    """Signed, idf-scaled, unit-norm vector of stated feature preferences."""
    raw = {key: w * model.idf_for(key) for key, w in prefs.items()}
    return FeatureVector(raw).normalized()


def cosine(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine similarity in [-1, 1]; empty vectors compare as 0."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return a.dot(b) / (na * nb)
