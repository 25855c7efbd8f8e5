"""Session and permanent preference profiles.

A session opens with an amplified copy of the user's (decayed) permanent
weights. Preferences stated during the conversation update the session
copy with a large step (w_session) and are logged as events; at session
close the events are replayed against the permanent store with a smaller
step (w_perm), so one conversation nudges the long-term profile without
overwriting it. Stored weights fade exponentially with the time since
the store was last written; decay happens at read time and is never
persisted.

All weight updates are additive and clamped to [-1, 1]. Entries that
reach exactly 0 in a session, or fall below the prune threshold in a
store, are removed.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass

from .model import ItemProfile, PreferenceEvent, PreferenceStore, SessionProfile

SECONDS_PER_DAY = 86400.0


class EmptyFeatureSet(ValueError):
    """Item-level preference on an item with no features; event logged, no weights touched."""


class ClockSkewWarning(UserWarning):
    """now precedes the store's last update; weights returned undecayed."""


@dataclass(frozen=True)
class UpmConfig:
    w_session: float = 0.6
    w_perm: float = 0.2
    decay_per_day: float = 0.01
    epsilon_prune: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.w_session <= 1.0:
            raise ValueError("w_session must lie in (0, 1]")
        if not 0.0 < self.w_perm <= 1.0:
            raise ValueError("w_perm must lie in (0, 1]")
        if self.w_perm >= self.w_session:
            raise ValueError("w_perm must be smaller than w_session")
        if self.decay_per_day < 0.0:
            raise ValueError("decay rate must be >= 0")


def _clamp(w: float) -> float:
    return max(-1.0, min(1.0, w))


def _bump(weights: dict[str, float], key: str, step: float) -> None:
    w = _clamp(weights.get(key, 0.0) + step)
    if w == 0.0:
        weights.pop(key, None)
    else:
        weights[key] = w


def get_permanent(store: PreferenceStore, now: float, cfg: UpmConfig) -> PreferenceStore:
    """Read-time view of a store with exponential decay applied.

    Every weight is multiplied by e^(-rate * days_since_update); entries
    below the prune threshold disappear. last_updated is left untouched
    because the decayed view is never written back.
    """
    if now < store.last_updated:
        warnings.warn(
            f"store for {store.user_id} was updated in the future; returning undecayed",
            ClockSkewWarning,
        )
        return PreferenceStore(store.user_id, dict(store.weights), store.last_updated)
    days = (now - store.last_updated) / SECONDS_PER_DAY
    factor = math.exp(-cfg.decay_per_day * days)
    weights = {k: w * factor for k, w in store.weights.items()}
    weights = {k: w for k, w in weights.items() if abs(w) >= cfg.epsilon_prune}
    return PreferenceStore(store.user_id, weights, store.last_updated)


def open_session(
    session_id: str,
    permanent: PreferenceStore,
    now: float,
    cfg: UpmConfig,
) -> SessionProfile:
    """Start a session from the decayed permanent weights, empty event log."""
    decayed = get_permanent(permanent, now, cfg)
    return SessionProfile(
        session_id=session_id,
        user_id=permanent.user_id,
        temp_weights=dict(decayed.weights),
        events=[],
        started_at=now,
    )


def apply_feature_preference(
    session: SessionProfile,
    feature_key: str,
    polarity: int,
    now: float,
    cfg: UpmConfig,
) -> SessionProfile:
    """Record a like (+1) or dislike (-1) for one feature."""
    if polarity not in (+1, -1):
        raise ValueError("polarity must be +1 or -1")
    weights = dict(session.temp_weights)
    _bump(weights, feature_key, cfg.w_session * polarity)
    event = PreferenceEvent("feature", feature_key, polarity, now)
    return SessionProfile(
        session.session_id, session.user_id, weights,
        session.events + [event], session.started_at,
    )


def apply_item_preference(
    session: SessionProfile,
    item: ItemProfile,
    polarity: int,
    now: float,
    cfg: UpmConfig,
) -> SessionProfile:
    """Record a preference for a whole item.

    The update mass w_session is split evenly across the item's features
    so feature-rich items do not dominate the profile. The event is
    logged before the feature check, so an item without features still
    raises EmptyFeatureSet with the event in place on the raised session.
    """
    if polarity not in (+1, -1):
        raise ValueError("polarity must be +1 or -1")
    event = PreferenceEvent("item", item.item_id, polarity, now)
    updated = SessionProfile(
        session.session_id, session.user_id, dict(session.temp_weights),
        session.events + [event], session.started_at,
    )
    keys = sorted(item.feature_keys())
    if not keys:
        exc = EmptyFeatureSet(f"item {item.item_id} has no features")
        exc.session = updated
        raise exc
    step = cfg.w_session * polarity / len(keys)
    for key in keys:
        _bump(updated.temp_weights, key, step)
    return updated


def close_session(
    session: SessionProfile,
    permanent: PreferenceStore,
    now: float,
    cfg: UpmConfig,
    item_features: Mapping[str, ItemProfile] | None = None,
) -> PreferenceStore:
    """Merge a session into the permanent store by replaying its events.

    Replay starts from the decayed permanent weights and applies every
    event in order with step weight w_perm instead of w_session. Item
    events need the item's features again; ``item_features`` supplies
    them (events whose item cannot be resolved leave the weights alone).
    """
    item_features = item_features or {}
    merged = dict(get_permanent(permanent, now, cfg).weights)
    for event in session.events:
        if event.kind == "feature":
            _bump(merged, event.target, cfg.w_perm * event.polarity)
        else:
            item = item_features.get(event.target)
            keys = sorted(item.feature_keys()) if item is not None else []
            if not keys:
                continue
            step = cfg.w_perm * event.polarity / len(keys)
            for key in keys:
                _bump(merged, key, step)
    merged = {k: w for k, w in merged.items() if abs(w) >= cfg.epsilon_prune}
    return PreferenceStore(permanent.user_id, merged, now)
