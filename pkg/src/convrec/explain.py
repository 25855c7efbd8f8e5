"""Per-item justifications and the profile presentation view.

An explanation lists the features an item shares with the user, scored
by their per-axis dot-product contribution to the item/user similarity,
so the listed scores are literally the parts of the cosine numerator.
Features whose product is negative (item has it, user dislikes it) are
never offered as justification; dislikes surface in the profile view.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .model import Explanation, ScoredItem
from .vectorize import FeatureVector


@dataclass(frozen=True)
class ProfileEntry:
    feature_key: str
    weight: float
    source: str  # "history" | "stated" | "both"


def explain(
    item_id: str,
    item_vec: FeatureVector,
    profile_vec: FeatureVector,
    pref_vec: FeatureVector,
    beta: float = 0.5,
    k_explain: int = 3,
) -> Explanation:
    """Top shared features between an item and the blended user vector.

    The user side is normalize(beta * history_vec + (1 - beta) * pref_vec).
    Only features present in both vectors with a positive product count;
    an empty contribution list is a valid result for a cold user.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if k_explain < 1:
        raise ValueError("k_explain must be positive")
    blended = {k: beta * v for k, v in profile_vec.entries.items()}
    for k, v in pref_vec.entries.items():
        blended[k] = blended.get(k, 0.0) + (1.0 - beta) * v
    combined = FeatureVector(blended).normalized()
    contributions = []
    for key, iv in item_vec.entries.items():
        product = iv * combined[key]
        if product > 0.0:
            contributions.append((key, product))
    contributions.sort(key=lambda kv: (-kv[1], kv[0]))
    return Explanation(item_id, tuple(contributions[:k_explain]))


def needs_explanation(item: ScoredItem) -> bool:
    """True iff the item does not already carry an explanation."""
    return item.explanation is None


def profile_view(
    history_weights: Mapping[str, float],
    stated_weights: Mapping[str, float],
    k: int,
) -> list[ProfileEntry]:
    """Union of history-derived and stated preferences for presentation.

    Keys in both take the weight of larger magnitude and source "both".
    Sorted by |weight| descending (ties by key), truncated to k entries.
    """
    if k < 1:
        raise ValueError("k must be positive")
    entries = []
    for key in set(history_weights) | set(stated_weights):
        if key in history_weights and key in stated_weights:
            h, s = history_weights[key], stated_weights[key]
            entries.append(ProfileEntry(key, h if abs(h) >= abs(s) else s, "both"))
        elif key in history_weights:
            entries.append(ProfileEntry(key, history_weights[key], "history"))
        else:
            entries.append(ProfileEntry(key, stated_weights[key], "stated"))
    entries.sort(key=lambda e: (-abs(e.weight), e.feature_key))
    return entries[:k]
