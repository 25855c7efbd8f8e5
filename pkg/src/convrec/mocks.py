"""Reference implementations of the three upstream services.

A single process serves the recommender, user data, and item data
contracts over a bundled synthetic catalogue (60 items tagged with
genre, actor, and director features; 10 users with seeded histories),
which is enough to run and test the whole middleware end to end without
any real recommender.

The recommender itself is a content-based cosine scorer over the same
TF-IDF space the middleware uses. It is deliberately simple and
deterministic; with --score-scale hundred it reports scores multiplied
by 100 to exercise downstream score normalization.
"""

from __future__ import annotations

import json
import threading
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .model import (
    ItemProfile,
    MalformedDocument,
    RecommendationList,
    ScoredItem,
    UserProfile,
    item_profile_to_dict,
    parse_item_profile,
    parse_user_profile,
    rec_list_to_dict,
    user_profile_to_dict,
)
from .vectorize import (
    FeatureVector,
    TfIdfModel,
    build_model,
    cosine,
    vectorize_history,
    vectorize_item,
)

SCORE_SCALES = ("unit", "hundred")


def bundled_corpus_path() -> Path:
    return Path(resources.files("convrec").joinpath("data/corpus.json"))


def load_corpus(path=None) -> tuple[list[ItemProfile], list[UserProfile]]:
    """Read a corpus file: {"items": [item_profile...], "users": [user_profile...]}."""
    doc = json.loads(Path(path or bundled_corpus_path()).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "items" not in doc or "users" not in doc:
        raise MalformedDocument("corpus file needs items and users lists")
    items = [parse_item_profile(it) for it in doc["items"]]
    users = [parse_user_profile(u) for u in doc["users"]]
    return items, users


def mock_recommend(
    profile: UserProfile,
    items: dict[str, ItemProfile],
    model: TfIdfModel,
    item_vecs: dict[str, FeatureVector],
) -> RecommendationList:
    """Content-based scores over the catalogue, history items excluded.

    score(i) = cosine(history vector, item vector) clipped at 0, so an
    empty history yields the full catalogue at score 0 in item_id order.
    """
    user_vec = vectorize_history(model, profile, items)
    seen = {h.item_id for h in profile.history}
    scored = [
        ScoredItem(item_id, max(0.0, cosine(user_vec, item_vecs[item_id])))
        for item_id in items
        if item_id not in seen
    ]
    scored.sort(key=lambda it: (-it.rec_score, it.item_id))
    return RecommendationList(scored)


class MockBackend:
    """Shared in-memory state behind the mock HTTP endpoints."""

    def __init__(self, items, users, score_scale: str = "unit"):
        if score_scale not in SCORE_SCALES:
            raise ValueError(f"score scale must be one of {SCORE_SCALES}")
        self.items = {it.item_id: it for it in items}
        self.users = {u.user_id: u for u in users}
        self.score_scale = score_scale
        self.model = build_model(items)
        self.item_vecs = {iid: vectorize_item(self.model, it) for iid, it in self.items.items()}
        self._user_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.update_count = 0

    def _user_lock(self, user_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._user_locks.setdefault(user_id, threading.Lock())

    def recommend(self, profile: UserProfile) -> RecommendationList:
        rec = mock_recommend(profile, self.items, self.model, self.item_vecs)
        if self.score_scale == "hundred":
            rec = RecommendationList(
                [ScoredItem(it.item_id, it.rec_score * 100.0) for it in rec.items]
            )
        return rec

    def apply_user_update(self, posted: UserProfile) -> UserProfile:
        """Append unseen history entries and merge extras, in memory."""
        with self._user_lock(posted.user_id):
            current = self.users.get(posted.user_id)
            if current is None:
                raise KeyError(posted.user_id)
            known = {h.item_id for h in current.history}
            merged = list(current.history) + [
                h for h in posted.history if h.item_id not in known
            ]
            extra = dict(current.extra)
            extra.update(posted.extra)
            updated = UserProfile(posted.user_id, merged, extra)
            self.users[posted.user_id] = updated
            self.update_count += 1
            return updated


def create_mock_app(backend: MockBackend) -> FastAPI:
    app = FastAPI(title="convrec mock services")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/recommend/get")
    async def recommend_get(request: Request):
        try:
            profile = parse_user_profile(await request.body())
        except MalformedDocument as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return JSONResponse(rec_list_to_dict(backend.recommend(profile)))

    @app.get("/user/get/{uid}")
    def user_get(uid: str):
        user = backend.users.get(uid)
        if user is None:
            raise HTTPException(status_code=404, detail=f"unknown user {uid}")
        return JSONResponse(user_profile_to_dict(user))

    @app.post("/user/update")
    async def user_update(request: Request):
        try:
            posted = parse_user_profile(await request.body())
        except MalformedDocument as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            backend.apply_user_update(posted)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown user {posted.user_id}")
        return {"status": "ok"}

    @app.get("/item/get/{iid}")
    def item_get(iid: str):
        item = backend.items.get(iid)
        if item is None:
            raise HTTPException(status_code=404, detail=f"unknown item {iid}")
        return JSONResponse(item_profile_to_dict(item))

    @app.get("/item/desc/{iid}")
    def item_desc(iid: str):
        item = backend.items.get(iid)
        if item is None or item.description is None:
            raise HTTPException(status_code=404, detail=f"no description for {iid}")
        return {"item_id": iid, "description": item.description}

    @app.get("/item/all")
    def item_all():
        payload = [item_profile_to_dict(backend.items[iid]) for iid in sorted(backend.items)]
        return JSONResponse({"items": payload})

    return app
