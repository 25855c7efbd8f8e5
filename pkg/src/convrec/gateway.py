"""The middleware service: chat API over a non-interactive recommender.

One process hosts the session endpoints, loads the three setup files
(configuration, workspace, messages), builds the TF-IDF model from the
item catalogue at startup, and orchestrates each turn: classify the
utterance, run the dialogue policy, call the upstream services, re-rank
with the session's learnt preferences, explain, and render the reply.

Sessions live in memory; permanent preference stores are one JSON file
per user, written atomically. Requests for the same session are
serialized on a per-session lock, store reads/writes on a per-user lock,
so concurrent sessions for different users never contend.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import dialogue, prefs, questions
from .clients import NotFound, ServiceClients, UpstreamUnavailable
from .dialogue import (
    Action,
    ActionKind,
    DialogueState,
    MessageCatalog,
    PolicyConfig,
    UnknownItemReference,
    Workspace,
    render,
)
from .explain import explain, needs_explanation, profile_view
from .model import (
    HistoryEntry,
    ItemProfile,
    MalformedDocument,
    RecommendationList,
    ScoredItem,
    UserProfile,
    parse_item_profile,
)
from .prefs import EmptyFeatureSet, UpmConfig
from .rerank import RerankConfig, rerank
from .storage import PersistenceFailure, StoreDirectory
from .vectorize import build_model, vectorize_history, vectorize_item, vectorize_preferences

logger = logging.getLogger(__name__)

CONFIG_ENV = "IRF_CONFIG"
PROFILE_VIEW_LIMIT = 10

# Keys the gateway renders beyond the core policy set.
GATEWAY_MESSAGE_KEYS = dialogue.REQUIRED_MESSAGE_KEYS + (
    "explain_none",
    "profile_empty",
    "item_details_nodesc",
    "ack_answer_skip",
    "verb_like",
    "verb_dislike",
    "service_unavailable",
    "item_unknown",
    "error_generic",
    "session_ended",
    "rec_empty",
)


class SessionNotFound(KeyError):
    pass


@dataclass(frozen=True)
class GatewayConfig:
    recommender_base_url: str
    user_service_base_url: str
    item_service_base_url: str
    workspace_path: str
    messages_path: str
    persistence_path: str
    user_update_enabled: bool = True
    item_desc_enabled: bool = True
    n_recommendations: int = 10
    alpha: float = 0.5
    beta: float = 0.5
    w_session: float = 0.6
    w_perm: float = 0.2
    decay_per_day: float = 0.01  # "lambda" in the config file
    k_explain: int = 3
    ask_threshold: int = 5
    corpus_snapshot_path: str | None = None
    request_timeout_ms: int = 2000

    def __post_init__(self):
        for url in (self.recommender_base_url, self.user_service_base_url,
                    self.item_service_base_url):
            if not url.startswith(("http://", "https://")):
                raise ValueError(f"service URL must be absolute: {url!r}")
        if self.n_recommendations < 1:
            raise ValueError("n_recommendations must be positive")
        if self.request_timeout_ms < 1:
            raise ValueError("request_timeout_ms must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.k_explain < 1:
            raise ValueError("k_explain must be positive")
        if self.ask_threshold < 2:
            raise ValueError("ask_threshold must be at least 2")


_CONFIG_KEY_MAP = {"lambda": "decay_per_day"}


def load_config(path) -> GatewayConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise MalformedDocument("config file must be a JSON object")
    kwargs = {_CONFIG_KEY_MAP.get(k, k): v for k, v in doc.items()}
    try:
        return GatewayConfig(**kwargs)
    except TypeError as exc:
        raise MalformedDocument(f"bad config field: {exc}") from exc


@dataclass
class Reply:
    text: str
    payload_type: str | None = None
    payload: dict | None = None


@dataclass
class Session:
    session_id: str
    user_id: str
    state: DialogueState
    profile: prefs.SessionProfile
    created_at: float
    merged_count: int | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class Gateway:
    def __init__(self, config: GatewayConfig, clock=time.time):
        self.config = config
        self.clock = clock
        self.workspace: Workspace = dialogue.load_workspace(config.workspace_path)
        self.catalog: MessageCatalog = dialogue.load_messages(
            config.messages_path, required=GATEWAY_MESSAGE_KEYS)
        self.stores = StoreDirectory(config.persistence_path)
        self.clients = ServiceClients(
            config.recommender_base_url,
            config.user_service_base_url,
            config.item_service_base_url,
            config.request_timeout_ms,
        )
        self.upm = UpmConfig(config.w_session, config.w_perm, config.decay_per_day)
        self.policy = PolicyConfig(config.ask_threshold)
        self.rerank_cfg = RerankConfig(config.alpha)
        self._items: dict[str, ItemProfile] = {}
        self._vecs = {}
        self._missing_items: set[str] = set()
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self.model = build_model(self._bootstrap_corpus())

    def _bootstrap_corpus(self) -> list[ItemProfile]:
        """Load the full item catalogue once, for the TF-IDF model."""
        if self.config.corpus_snapshot_path:
            doc = json.loads(Path(self.config.corpus_snapshot_path).read_text(encoding="utf-8"))
            items = [parse_item_profile(it) for it in doc["items"]]
        else:
            items = self.clients.fetch_all_items()
        for item in items:
            self._items[item.item_id] = item
        logger.info("TF-IDF corpus bootstrapped with %d items", len(items))
        return items

    def close(self) -> None:
        self.clients.close()

    # -- item cache -------------------------------------------------------

    def _get_item(self, item_id: str) -> ItemProfile | None:
        if item_id in self._items:
            return self._items[item_id]
        if item_id in self._missing_items:
            return None
        try:
            item = self.clients.fetch_item(item_id)
        except NotFound:
            self._missing_items.add(item_id)
            return None
        self._items[item_id] = item
        return item

    def _get_vec(self, item_id: str):
        if item_id not in self._vecs:
            item = self._get_item(item_id)
            if item is None:
                return None
            self._vecs[item_id] = vectorize_item(self.model, item)
        return self._vecs[item_id]

    # -- session lifecycle ------------------------------------------------

    def open_session(self, user_id: str) -> Session:
        self.clients.fetch_user(user_id)  # 404s for unknown users
        now = self.clock()
        with self.stores.lock_for(user_id):
            permanent = self.stores.load(user_id, now)
        session_id = secrets.token_hex(16)
        profile = prefs.open_session(session_id, permanent, now, self.upm)
        session = Session(session_id, user_id, DialogueState(), profile, now)
        with self._sessions_lock:
            self._sessions[session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        with self._sessions_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session

    def close_session(self, session_id: str) -> int:
        """Merge and persist, then drop the session from the registry."""
        session = self.get_session(session_id)
        with session.lock:
            merged = session.merged_count
            if merged is None:
                merged = self._merge_and_persist(session)
        with self._sessions_lock:
            self._sessions.pop(session_id, None)
        return merged

    def _merge_and_persist(self, session: Session) -> int:
        now = self.clock()
        with self.stores.lock_for(session.user_id):
            permanent = self.stores.load(session.user_id, now)
            merged = prefs.close_session(
                session.profile, permanent, now, self.upm, self._items)
            try:
                self.stores.save(merged)
            except PersistenceFailure:
                logger.warning("store save failed for %s; retrying once", session.user_id)
                self.stores.save(merged)
        session.merged_count = len(merged.weights)
        session.state.phase = dialogue.Phase.ENDED
        return session.merged_count

    # -- turn handling ------------------------------------------------------

    def handle_message(self, session_id: str, text: str) -> Reply:
        session = self.get_session(session_id)
        with session.lock:
            nlu = dialogue.classify(text, self.workspace)
            actions, state = dialogue.next_action(session.state, nlu, self.policy)
            session.state = state
            try:
                return self._execute(session, actions, text)
            except UpstreamUnavailable as exc:
                logger.warning("upstream unavailable: %s", exc)
                return Reply(render("service_unavailable", {}, self.catalog))
            except (UnknownItemReference, NotFound):
                return Reply(render("item_unknown", {}, self.catalog))
            except Exception:
                logger.exception("turn failed for session %s", session_id)
                return Reply(render("error_generic", {}, self.catalog))

    def _execute(self, session: Session, actions: list[Action], raw_text: str) -> Reply:
        parts: list[str] = []
        payload_type: str | None = None
        payload: dict | None = None
        for action in actions:
            if action.kind == ActionKind.RECOMMEND:
                block, payload = self._do_recommend(session)
                parts.append(block)
                payload_type = "rec_list"
            elif action.kind == ActionKind.EXPLAIN:
                block, payload = self._do_explain(session, action, raw_text)
                parts.append(block)
                payload_type = "explanation"
            elif action.kind == ActionKind.SHOW_PROFILE:
                block, payload = self._do_profile(session)
                parts.append(block)
                payload_type = "profile"
            elif action.kind == ActionKind.ITEM_DETAILS:
                parts.append(self._do_details(session, action, raw_text))
            elif action.kind == ActionKind.RECORD_FEATURE_PREF:
                parts.append(self._do_feature_pref(session, action))
            elif action.kind == ActionKind.RECORD_ITEM_PREF:
                parts.append(self._do_item_pref(session, action, raw_text))
            elif action.kind == ActionKind.APPLY_ANSWER:
                block, extra_payload = self._do_answer(session, action)
                parts.append(block)
                if extra_payload is not None:
                    payload_type, payload = "rec_list", extra_payload
            elif action.kind == ActionKind.CLOSE_SESSION:
                merged = self._merge_and_persist(session)
                parts.append(render("goodbye", {"n_merged": str(merged)}, self.catalog))
            elif action.kind == ActionKind.HELP:
                key = "fallback" if action.fallback else "help"
                parts.append(render(key, {}, self.catalog))
            elif action.kind == ActionKind.SESSION_ENDED_NOTICE:
                parts.append(render("session_ended", {}, self.catalog))
        return Reply("\n".join(parts), payload_type, payload)

    # -- individual actions -------------------------------------------------

    def recommend_flow(self, session: Session) -> RecommendationList:
        """Fetch, truncate, re-rank with session preferences, explain."""
        profile = self.clients.fetch_user(session.user_id)
        upstream = self.clients.fetch_recommendations(profile)
        kept = [it for it in upstream.items[: self.config.n_recommendations]
                if self._get_item(it.item_id) is not None]
        item_vecs = {it.item_id: self._get_vec(it.item_id) for it in kept}
        pref_vec = vectorize_preferences(self.model, session.profile.temp_weights)
        reranked = rerank(RecommendationList(kept), pref_vec, item_vecs, self.rerank_cfg)
        profile_vec = vectorize_history(self.model, profile, self._history_items(profile))
        for item in reranked.items:
            if needs_explanation(item):
                item.explanation = explain(
                    item.item_id, item_vecs[item.item_id], profile_vec, pref_vec,
                    self.config.beta, self.config.k_explain)
        session.state.candidates = reranked
        session.state.last_list_shown = reranked
        return reranked

    def _history_items(self, profile: UserProfile) -> dict[str, ItemProfile]:
        items = {}
        for entry in profile.history:
            item = self._get_item(entry.item_id)
            if item is not None:
                items[entry.item_id] = item
        return items

    def _do_recommend(self, session: Session) -> tuple[str, dict]:
        reranked = self.recommend_flow(session)
        if not reranked.items:
            return render("rec_empty", {}, self.catalog), {"items": []}
        parts = [render("rec_header", {"n": str(len(reranked.items))}, self.catalog)]
        payload_items = []
        for rank, item in enumerate(reranked.items, start=1):
            title = self._items[item.item_id].title
            parts.append(render("rec_item_line", {
                "rank": str(rank), "title": title, "score": f"{item.final_score:.2f}",
            }, self.catalog))
            payload_items.append(self._item_payload(item, title))
        payload = {"items": payload_items}
        question_action, state = dialogue.propose_question(
            session.state, self._candidate_items(session), self.policy)
        session.state = state
        if question_action is not None:
            prompt = self._question_prompt(question_action.question.feature_key)
            parts.append(prompt)
            payload["question"] = {
                "feature": question_action.question.feature_key,
                "prompt": prompt,
            }
        return "\n".join(parts), payload

    def _item_payload(self, item: ScoredItem, title: str) -> dict:
        features = []
        if item.explanation is not None:
            features = [
                {"feature": key, "score": round(score, 4)}
                for key, score in item.explanation.contributions
            ]
        return {
            "item_id": item.item_id,
            "title": title,
            "final_score": round(item.final_score, 4),
            "explanation": {"features": features},
        }

    def _candidate_items(self, session: Session) -> list[ItemProfile]:
        return [self._items[it.item_id] for it in session.state.candidates.items
                if it.item_id in self._items]

    def _question_prompt(self, feature_key: str) -> str:
        category, _, value = feature_key.partition("=")
        return render("ask_question", {
            "feature": feature_key, "category": category, "value": value,
        }, self.catalog)

    def _feature_phrase(self, feature_key: str) -> str:
        category, _, value = feature_key.partition("=")
        return f"{value} ({category})"

    def _resolve_item(self, session: Session, ordinal: int | None, raw_text: str) -> ScoredItem:
        """Ordinal or exact-title reference against the last shown list."""
        shown = session.state.last_list_shown
        if shown is None or not shown.items:
            raise UnknownItemReference("no list has been shown yet")
        if ordinal is not None:
            if not 1 <= ordinal <= len(shown.items):
                raise UnknownItemReference(f"ordinal {ordinal} out of range")
            return shown.items[ordinal - 1]
        text = raw_text.casefold()
        for item in shown.items:
            profile = self._items.get(item.item_id)
            if profile is not None and profile.title and profile.title.casefold() in text:
                return item
        raise UnknownItemReference(f"no shown item matches {raw_text!r}")

    def _do_explain(self, session: Session, action: Action, raw_text: str) -> tuple[str, dict]:
        item = self._resolve_item(session, action.ordinal, raw_text)
        title = self._items[item.item_id].title
        contributions = item.explanation.contributions if item.explanation else ()
        payload = {
            "item_id": item.item_id,
            "title": title,
            "features": [
                {"feature": key, "score": round(score, 4)} for key, score in contributions
            ],
        }
        if not contributions:
            return render("explain_none", {"title": title}, self.catalog), payload
        phrases = ", ".join(self._feature_phrase(key) for key, _ in contributions)
        return render("explain_line", {"title": title, "features": phrases}, self.catalog), payload

    def _do_profile(self, session: Session) -> tuple[str, dict]:
        profile = self.clients.fetch_user(session.user_id)
        history_vec = vectorize_history(self.model, profile, self._history_items(profile))
        entries = profile_view(history_vec.entries, session.profile.temp_weights,
                               PROFILE_VIEW_LIMIT)
        payload = {"entries": [
            {"feature": e.feature_key, "weight": round(e.weight, 4), "source": e.source}
            for e in entries
        ]}
        if not entries:
            return render("profile_empty", {}, self.catalog), payload
        parts = [render("profile_header", {}, self.catalog)]
        for e in entries:
            parts.append(render("profile_line", {
                "feature": self._feature_phrase(e.feature_key),
                "weight": f"{e.weight:+.2f}",
                "source": e.source,
            }, self.catalog))
        return "\n".join(parts), payload

    def _do_details(self, session: Session, action: Action, raw_text: str) -> str:
        item = self._resolve_item(session, action.ordinal, raw_text)
        profile = self._get_item(item.item_id)
        features = ", ".join(
            self._feature_phrase(k) for k in sorted(profile.feature_keys()))
        description = None
        if self.config.item_desc_enabled:
            try:
                description = self.clients.fetch_item_description(item.item_id)
            except NotFound:
                description = None
        if description is None:
            return render("item_details_nodesc",
                          {"title": profile.title, "features": features}, self.catalog)
        return render("item_details", {
            "title": profile.title, "features": features, "description": description,
        }, self.catalog)

    def _ack(self, polarity: int, target: str) -> str:
        verb_key = "verb_like" if polarity > 0 else "verb_dislike"
        verb = render(verb_key, {}, self.catalog)
        return render("ack_preference", {"verb": verb, "target": target}, self.catalog)

    def _do_feature_pref(self, session: Session, action: Action) -> str:
        now = self.clock()
        for key in action.feature_keys:
            session.profile = prefs.apply_feature_preference(
                session.profile, key, action.polarity, now, self.upm)
        phrases = ", ".join(self._feature_phrase(k) for k in action.feature_keys)
        return self._ack(action.polarity, phrases)

    def _do_item_pref(self, session: Session, action: Action, raw_text: str) -> str:
        item = self._resolve_item(session, action.ordinal, raw_text)
        profile = self._get_item(item.item_id)
        now = self.clock()
        try:
            session.profile = prefs.apply_item_preference(
                session.profile, profile, action.polarity, now, self.upm)
        except EmptyFeatureSet as exc:
            session.profile = exc.session  # event stays logged
        if self.config.user_update_enabled:
            user = self.clients.fetch_user(session.user_id)
            user.history.append(HistoryEntry(item.item_id, float(action.polarity), now))
            self.clients.push_user_update(user)
        return self._ack(action.polarity, profile.title)

    def _do_answer(self, session: Session, action: Action) -> tuple[str, dict | None]:
        feature = action.feature_keys[0]
        if action.answer == questions.INDIFFERENT:
            return render("ack_answer_skip", {}, self.catalog), None
        kept, polarity = questions.apply_answer(
            self._candidate_items(session), feature, action.answer)
        now = self.clock()
        session.profile = prefs.apply_feature_preference(
            session.profile, feature, polarity, now, self.upm)
        kept_ids = {item.item_id for item in kept}
        filtered = RecommendationList(
            [it for it in session.state.candidates.items if it.item_id in kept_ids])
        pref_vec = vectorize_preferences(self.model, session.profile.temp_weights)
        item_vecs = {it.item_id: self._get_vec(it.item_id) for it in filtered.items}
        reranked = rerank(filtered, pref_vec, item_vecs, self.rerank_cfg)
        session.state.candidates = reranked
        session.state.last_list_shown = reranked
        parts = [self._ack(polarity, self._feature_phrase(feature))]
        payload_items = []
        for rank, it in enumerate(reranked.items, start=1):
            title = self._items[it.item_id].title
            parts.append(render("rec_item_line", {
                "rank": str(rank), "title": title, "score": f"{it.final_score:.2f}",
            }, self.catalog))
            payload_items.append(self._item_payload(it, title))
        return "\n".join(parts), {"items": payload_items}


# ---------------------------------------------------------------------------
# HTTP surface

from pydantic import BaseModel


class OpenSessionBody(BaseModel):
    user_id: str


class MessageBody(BaseModel):
    text: str


def create_app(config: GatewayConfig, clock=time.time):
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    gateway = Gateway(config, clock)
    app = FastAPI(title="convrec gateway")
    app.state.gateway = gateway
    # the browser chat client is served from a different origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/session", status_code=201)
    def open_session(body: OpenSessionBody):
        try:
            session = gateway.open_session(body.user_id)
        except NotFound:
            raise HTTPException(status_code=404, detail=f"unknown user {body.user_id}")
        except UpstreamUnavailable as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        return {"session_id": session.session_id}

    @app.post("/session/{sid}/message")
    def message(sid: str, body: MessageBody):
        try:
            reply = gateway.handle_message(sid, body.text)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")
        return {"reply": reply.text, "payload_type": reply.payload_type,
                "payload": reply.payload}

    @app.delete("/session/{sid}")
    def close(sid: str):
        try:
            merged = gateway.close_session(sid)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail="unknown session")
        except PersistenceFailure as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return {"merged_features": merged}

    return app
