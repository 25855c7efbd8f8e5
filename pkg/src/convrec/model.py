"""Core data types shared by every other module.

Four families of documents travel through the system: user profiles,
item profiles, recommendation lists, and learnt preference stores.
Everything here is a plain value type plus JSON (de)serialization with
validation; no behaviour beyond that lives in this module.

Wire format is UTF-8 JSON. Field names on the wire: user_id, history,
item, score, timestamp, item_id, title, features, category, value.
Unknown top-level fields on a user profile are preserved verbatim in
``extra`` and round-tripped back to the upstream recommender.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class MalformedDocument(ValueError):
    """Raw input is not valid JSON or has the wrong shape."""


class MissingField(MalformedDocument):
    """A required field is absent from an otherwise well-formed document."""

    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.name = name


def _canon(text: str) -> str:
    return text.strip().casefold()


@dataclass(frozen=True)
class Feature:
    """A categorical tag such as genre=comedy.

    Identity is the canonical key "category=value" with both parts
    case-folded and trimmed; two features are equal iff their keys are.
    """

    category: str
    value: str

    def __post_init__(self):
        object.__setattr__(self, "category", _canon(self.category))
        object.__setattr__(self, "value", _canon(self.value))
        if not self.category or not self.value:
            raise ValueError("feature category and value must be non-empty")

    @property
    def key(self) -> str:
        return f"{self.category}={self.value}"

    @classmethod
    def from_key(cls, key: str) -> "Feature":
        category, sep, value = key.partition("=")
        if not sep:
            raise ValueError(f"not a feature key: {key!r}")
        return cls(category, value)


@dataclass(frozen=True)
class HistoryEntry:
    """One consumed item: id plus optional recommender-native score and time."""

    item_id: str
    score: float | None = None
    timestamp: float | None = None

    def __post_init__(self):
        if not self.item_id:
            raise ValueError("history entry item_id must be non-empty")
        if self.timestamp is not None and self.timestamp < 0:
            raise ValueError("history entry timestamp must be >= 0")


@dataclass
class UserProfile:
    user_id: str
    history: list[HistoryEntry] = field(default_factory=list)
    # Opaque recommender-specific fields, passed through untouched.
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")


@dataclass
class ItemProfile:
    item_id: str
    title: str = ""
    features: frozenset[Feature] = frozenset()
    description: str | None = None

    def __post_init__(self):
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        self.features = frozenset(self.features)

    def feature_keys(self) -> set[str]:
        return {f.key for f in self.features}


@dataclass(frozen=True)
class Explanation:
    """Ranked common features between an item and the user, with scores."""

    item_id: str
    contributions: tuple[tuple[str, float], ...] = ()
    rendered: str | None = None

    def __post_init__(self):
        scores = [s for _, s in self.contributions]
        if any(s <= 0 for s in scores):
            raise ValueError("explanation contributions must be positive")
        if scores != sorted(scores, reverse=True):
            raise ValueError("explanation contributions must be sorted descending")


@dataclass
class ScoredItem:
    item_id: str
    rec_score: float
    final_score: float | None = None
    explanation: Explanation | None = None

    def __post_init__(self):
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        if self.final_score is not None and not 0.0 <= self.final_score <= 1.0:
            raise ValueError("final_score must lie in [0, 1]")


@dataclass
class RecommendationList:
    items: list[ScoredItem] = field(default_factory=list)

    def __post_init__(self):
        ids = [it.item_id for it in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError("recommendation list item_ids must be distinct")
        finals = [it.final_score for it in self.items]
        if all(f is not None for f in finals) and self.items:
            ranking = [(-it.final_score, it.item_id) for it in self.items]
            if ranking != sorted(ranking):
                raise ValueError("recommendation list must be sorted by final_score")

    def item_ids(self) -> list[str]:
        return [it.item_id for it in self.items]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class PreferenceEvent:
    """One preference statement from the dialogue, replayed at session close."""

    kind: str  # "feature" | "item"
    target: str  # feature key or item id
    polarity: int  # +1 | -1
    timestamp: float = 0.0

    def __post_init__(self):
        if self.kind not in ("feature", "item"):
            raise ValueError(f"unknown preference event kind: {self.kind!r}")
        if self.polarity not in (+1, -1):
            raise ValueError("polarity must be +1 or -1")


@dataclass
class PreferenceStore:
    """Permanent per-user feature weights in [-1, 1], zero entries removed."""

    user_id: str
    weights: dict[str, float] = field(default_factory=dict)
    last_updated: float = 0.0

    def __post_init__(self):
        for key, w in self.weights.items():
            if not -1.0 <= w <= 1.0:
                raise ValueError(f"weight out of [-1, 1] for {key}: {w}")
        self.weights = {k: w for k, w in self.weights.items() if w != 0.0}


@dataclass
class SessionProfile:
    """Amplified in-session copy of a preference store plus its event log."""

    session_id: str
    user_id: str
    temp_weights: dict[str, float] = field(default_factory=dict)
    events: list[PreferenceEvent] = field(default_factory=list)
    started_at: float = 0.0


# ---------------------------------------------------------------------------
# Parsing


def _load_json(raw) -> dict:
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw) if isinstance(raw, str) else raw
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("document root must be a JSON object")
    return doc


def _parse_history_entry(doc) -> HistoryEntry:
    if not isinstance(doc, dict):
        raise MalformedDocument("history entry must be an object")
    if "item" not in doc:
        raise MissingField("item")
    item = doc["item"]
    if not isinstance(item, str) or not item:
        raise MalformedDocument("history entry item must be a non-empty string")
    score = doc.get("score")
    if score is not None and not isinstance(score, (int, float)):
        raise MalformedDocument("history entry score must be a number")
    ts = doc.get("timestamp")
    if ts is not None and (not isinstance(ts, (int, float)) or ts < 0):
        raise MalformedDocument("history entry timestamp must be a number >= 0")
    return HistoryEntry(item, None if score is None else float(score),
                        None if ts is None else float(ts))


def parse_user_profile(raw) -> UserProfile:
    """Parse a user_profile document; unknown fields land in ``extra``."""
    doc = _load_json(raw)
    if "user_id" not in doc:
        raise MissingField("user_id")
    if "history" not in doc:
        raise MissingField("history")
    user_id = doc["user_id"]
    if not isinstance(user_id, str) or not user_id:
        raise MalformedDocument("user_id must be a non-empty string")
    history = doc["history"]
    if not isinstance(history, list):
        raise MalformedDocument("history must be a list")
    entries = [_parse_history_entry(h) for h in history]
    extra = {k: v for k, v in doc.items() if k not in ("user_id", "history")}
    return UserProfile(user_id, entries, extra)


def user_profile_to_dict(profile: UserProfile) -> dict:
    doc = dict(profile.extra)
    doc["user_id"] = profile.user_id
    doc["history"] = []
    for h in profile.history:
        entry = {"item": h.item_id}
        if h.score is not None:
            entry["score"] = h.score
        if h.timestamp is not None:
            entry["timestamp"] = h.timestamp
        doc["history"].append(entry)
    return doc


def _parse_feature(doc) -> Feature:
    if not isinstance(doc, dict):
        raise MalformedDocument("feature must be an object")
    if "category" not in doc:
        raise MissingField("category")
    if "value" not in doc:
        raise MissingField("value")
    category, value = doc["category"], doc["value"]
    if not isinstance(category, str) or not isinstance(value, str):
        raise MalformedDocument("feature category and value must be strings")
    if not category.strip() or not value.strip():
        raise MalformedDocument("feature category and value must be non-empty")
    return Feature(category, value)


def parse_item_profile(raw) -> ItemProfile:
    """Parse an item_profile; features are canonicalized and deduplicated."""
    doc = _load_json(raw)
    if "item_id" not in doc:
        raise MissingField("item_id")
    item_id = doc["item_id"]
    if not isinstance(item_id, str) or not item_id:
        raise MalformedDocument("item_id must be a non-empty string")
    title = doc.get("title", "")
    if not isinstance(title, str):
        raise MalformedDocument("title must be a string")
    features_doc = doc.get("features", [])
    if not isinstance(features_doc, list):
        raise MalformedDocument("features must be a list")
    features = frozenset(_parse_feature(f) for f in features_doc)
    description = doc.get("description")
    if description is not None and not isinstance(description, str):
        raise MalformedDocument("description must be a string")
    return ItemProfile(item_id, title, features, description)


def item_profile_to_dict(item: ItemProfile) -> dict:
    doc = {
        "item_id": item.item_id,
        "title": item.title,
        "features": [
            {"category": f.category, "value": f.value}
            for f in sorted(item.features, key=lambda f: f.key)
        ],
    }
    if item.description is not None:
        doc["description"] = item.description
    return doc


def parse_rec_list(raw) -> RecommendationList:
    """Parse an upstream rec_list: {"items": [{"item_id":..., "score":...}]}."""
    doc = _load_json(raw)
    if "items" not in doc:
        raise MissingField("items")
    items_doc = doc["items"]
    if not isinstance(items_doc, list):
        raise MalformedDocument("items must be a list")
    items = []
    for entry in items_doc:
        if not isinstance(entry, dict):
            raise MalformedDocument("rec_list entry must be an object")
        if "item_id" not in entry:
            raise MissingField("item_id")
        item_id = entry["item_id"]
        if not isinstance(item_id, str) or not item_id:
            raise MalformedDocument("rec_list item_id must be a non-empty string")
        score = entry.get("score", 0.0)
        if not isinstance(score, (int, float)):
            raise MalformedDocument("rec_list score must be a number")
        items.append(ScoredItem(item_id, float(score)))
    try:
        return RecommendationList(items)
    except ValueError as exc:
        raise MalformedDocument(str(exc)) from exc


def rec_list_to_dict(rec: RecommendationList) -> dict:
    return {"items": [{"item_id": it.item_id, "score": it.rec_score} for it in rec.items]}


def parse_preference_store(raw) -> PreferenceStore:
    doc = _load_json(raw)
    for name in ("user_id", "weights", "last_updated"):
        if name not in doc:
            raise MissingField(name)
    weights = doc["weights"]
    if not isinstance(weights, dict):
        raise MalformedDocument("weights must be an object")
    for key, w in weights.items():
        if not isinstance(w, (int, float)):
            raise MalformedDocument(f"weight for {key} must be a number")
    try:
        return PreferenceStore(
            doc["user_id"],
            {k: float(w) for k, w in weights.items()},
            float(doc["last_updated"]),
        )
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(str(exc)) from exc


def preference_store_to_dict(store: PreferenceStore) -> dict:
    return {
        "user_id": store.user_id,
        "weights": dict(store.weights),
        "last_updated": store.last_updated,
    }
