"""convrec: dialogue middleware that makes a REST recommender interactive."""

from .model import (
    Explanation,
    Feature,
    HistoryEntry,
    ItemProfile,
    PreferenceEvent,
    PreferenceStore,
    RecommendationList,
    ScoredItem,
    SessionProfile,
    UserProfile,
)

__version__ = "0.1.0"

__all__ = [
    "Explanation",
    "Feature",
    "HistoryEntry",
    "ItemProfile",
    "PreferenceEvent",
    "PreferenceStore",
    "RecommendationList",
    "ScoredItem",
    "SessionProfile",
    "UserProfile",
    "__version__",
]
