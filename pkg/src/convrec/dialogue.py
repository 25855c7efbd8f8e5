"""Deterministic dialogue handling: NLU, policy, and response rendering.

Utterances are classified against a workspace file of intent patterns and
entity synonyms: entities are extracted first by longest match, then the
entity-substituted token sequence is matched against the intent patterns.
There is no learned component; identical input always classifies the same
way, and every string classifies to something (worst case "fallback").

The conversation itself is a small state machine over four phases (idle,
recommending, awaiting an elicitation answer, ended). The policy maps
(state, intent) to actions the gateway executes; it never performs I/O
itself, which is why the proactive elicitation follow-up to a refreshed
recommendation list lives in propose_question rather than next_action.

Responses are rendered from a messages file of templates with {slot}
placeholders; no user-facing sentence is hard-coded in the program.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .model import MalformedDocument, RecommendationList
from .questions import ElicitationQuestion, select_question_feature

logger = logging.getLogger(__name__)

FALLBACK_INTENT = "fallback"

# Entity types with built-in meaning; every other type is a feature category.
ORDINAL_ENTITY = "ordinal"

# Message keys the dialogue policy renders replies from.
REQUIRED_MESSAGE_KEYS = (
    "rec_header",
    "rec_item_line",
    "explain_line",
    "profile_header",
    "profile_line",
    "item_details",
    "ask_question",
    "ack_preference",
    "help",
    "goodbye",
    "fallback",
)

_PLACEHOLDER = re.compile(r"\{([a-z0-9_]+)\}")
# Dropped from utterances before matching; apostrophes stay ("don't").
_STRIP_CHARS = re.compile(r"[^\w\s'&-]|[{}_]")


# Sequence-level wildcard: matches any run of tokens, including none.
WILDCARD = object()


def _compile_token(tok: str):
    """Pattern tokens match one utterance token; '*' inside a token is glob-like."""
    if tok == "*":
        return WILDCARD
    return re.compile("^" + re.escape(tok).replace(r"\*", ".*") + "$")


class UnknownMessageKey(KeyError):
    pass


class MissingSlot(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


class UnknownItemReference(ValueError):
    """An ordinal or title did not resolve against the last shown list."""


@dataclass(frozen=True)
class EntityMatch:
    entity_type: str
    value: str  # canonical value
    span: str  # surface text that matched


@dataclass(frozen=True)
class NluResult:
    intent: str
    confidence: float
    entities: tuple[EntityMatch, ...] = ()

    def feature_keys(self) -> list[str]:
        return [
            f"{e.entity_type}={e.value}"
            for e in self.entities
            if e.entity_type != ORDINAL_ENTITY
        ]

    def ordinal(self) -> int | None:
        for e in self.entities:
            if e.entity_type == ORDINAL_ENTITY:
                return int(e.value)
        return None


class Workspace:
    """Intent patterns plus entity synonyms, precompiled for matching."""

    def __init__(self, intents: dict[str, list[str]], entities: dict[str, dict[str, list[str]]]):
        if not intents:
            raise ValueError("workspace must define at least one intent")
        self.intents: dict[str, list[list]] = {}
        for name, patterns in intents.items():
            if not patterns:
                raise ValueError(f"intent {name!r} has no patterns")
            tokenized = [
                [_compile_token(tok) for tok in p.casefold().split()] for p in patterns
            ]
            if any(not t for t in tokenized):
                raise ValueError(f"intent {name!r} has an empty pattern")
            self.intents[name] = tokenized
        self.entities: dict[str, dict[str, list[str]]] = {}
        synonym_map: dict[str, tuple[str, str]] = {}
        for etype, values in entities.items():
            canon_values = {}
            for canonical, synonyms in values.items():
                canonical = canonical.casefold()
                folded = [s.casefold().strip() for s in synonyms if s.strip()]
                if canonical not in folded:
                    folded.append(canonical)
                canon_values[canonical] = folded
                for syn in folded:
                    if syn in synonym_map and synonym_map[syn] != (etype, canonical):
                        logger.warning("synonym %r is ambiguous; keeping first binding", syn)
                        continue
                    synonym_map[syn] = (etype, canonical)
            self.entities[etype] = canon_values
        self._synonym_map = synonym_map
        if synonym_map:
            ordered = sorted(synonym_map, key=len, reverse=True)
            self._extractor = re.compile(
                r"\b(?:" + "|".join(re.escape(s) for s in ordered) + r")\b"
            )
        else:
            self._extractor = None
        # Literal keyword stems per intent for the partial-overlap fallback.
        self._keywords: dict[str, dict[str, re.Pattern]] = {}
        for name, patterns in self.intents.items():
            stems: dict[str, re.Pattern] = {}
            for tokens in patterns:
                for tok in tokens:
                    if tok is WILDCARD:
                        continue
                    stem = tok.pattern
                    bare = stem.replace(".*", "").replace("^", "").replace("$", "")
                    if not bare or (bare.startswith(r"\{") and bare.endswith(r"\}")):
                        continue
                    stems.setdefault(stem, tok)
            self._keywords[name] = stems


def load_workspace(path) -> Workspace:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "intents" not in doc or "entities" not in doc:
        raise MalformedDocument("workspace file needs intents and entities objects")
    return Workspace(doc["intents"], doc["entities"])


def _extract_entities(ws: Workspace, text: str) -> tuple[str, list[EntityMatch]]:
    """Longest-match, non-overlapping, left-to-right entity extraction.

    Returns the text with each match replaced by an {entity_type}
    placeholder, plus the matches themselves.
    """
    if ws._extractor is None:
        return text, []
    matches = []
    out = []
    last = 0
    for m in ws._extractor.finditer(text):
        etype, canonical = ws._synonym_map[m.group(0)]
        matches.append(EntityMatch(etype, canonical, m.group(0)))
        out.append(text[last:m.start()])
        out.append("{" + etype + "}")
        last = m.end()
    out.append(text[last:])
    return "".join(out), matches


def _match_from(pattern: list, tokens: list[str], i: int) -> bool:
    if not pattern:
        return True
    head, rest = pattern[0], pattern[1:]
    if head is WILDCARD:
        return any(_match_from(rest, tokens, j) for j in range(i, len(tokens) + 1))
    if i >= len(tokens):
        return False
    return bool(head.match(tokens[i])) and _match_from(rest, tokens, i + 1)


def _pattern_matches(pattern: list, tokens: list[str]) -> bool:
    # A pattern matches if it covers some contiguous token window.
    return any(_match_from(pattern, tokens, start) for start in range(len(tokens) + 1))


def classify(utterance: str, ws: Workspace) -> NluResult:
    """Total, deterministic intent + entity classification.

    Exact pattern matches score 1.0; keyword-overlap fallbacks score in
    (0, 1); anything else is the fallback intent at 0.0.
    """
    text = _STRIP_CHARS.sub(" ", utterance.casefold().strip())
    substituted, entities = _extract_entities(ws, text)
    tokens = substituted.split()
    if tokens:
        for name, patterns in ws.intents.items():
            if any(_pattern_matches(p, tokens) for p in patterns):
                return NluResult(name, 1.0, tuple(entities))
        best_name, best_score = None, 0.0
        for name, stems in ws._keywords.items():
            if not stems:
                continue
            hit = sum(
                1 for matcher in stems.values()
                if any(matcher.match(t) for t in tokens)
            )
            score = hit / len(stems)
            if score > best_score:
                best_name, best_score = name, score
        if best_name is not None and best_score > 0.0:
            return NluResult(best_name, 0.9 * best_score, tuple(entities))
    return NluResult(FALLBACK_INTENT, 0.0, tuple(entities))


# ---------------------------------------------------------------------------
# Dialogue policy


class Phase(str, Enum):
    IDLE = "idle"
    RECOMMENDING = "recommending"
    AWAITING_ANSWER = "awaiting_answer"
    ENDED = "ended"


class ActionKind(Enum):
    RECOMMEND = "recommend"
    EXPLAIN = "explain"
    SHOW_PROFILE = "show_profile"
    ITEM_DETAILS = "item_details"
    RECORD_FEATURE_PREF = "record_feature_pref"
    RECORD_ITEM_PREF = "record_item_pref"
    APPLY_ANSWER = "apply_answer"
    ASK_QUESTION = "ask_question"
    CLOSE_SESSION = "close_session"
    HELP = "help"
    SESSION_ENDED_NOTICE = "session_ended_notice"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    feature_keys: tuple[str, ...] = ()
    polarity: int = 0
    ordinal: int | None = None  # 1-based reference into the last shown list
    answer: str | None = None
    question: ElicitationQuestion | None = None
    # True when HELP comes from an unclassifiable utterance rather than a
    # recognized intent the state cannot use right now.
    fallback: bool = False


@dataclass
class DialogueState:
    phase: Phase = Phase.IDLE
    candidates: RecommendationList = field(default_factory=RecommendationList)
    asked: set[str] = field(default_factory=set)
    turn_count: int = 0
    last_list_shown: RecommendationList | None = None
    pending_feature: str | None = None


@dataclass(frozen=True)
class PolicyConfig:
    # Minimum candidate count before the system volunteers a question.
    ask_threshold: int = 5


_ANSWER_INTENTS = {
    "answer_yes": "yes",
    "answer_no": "no",
    "answer_indifferent": "indifferent",
}


def next_action(
    state: DialogueState, nlu: NluResult, cfg: PolicyConfig
) -> tuple[list[Action], DialogueState]:
    """Map (state, intent) to the actions the gateway should execute.

    Pure and deterministic. A get_recommendations turn yields only the
    recommend action here; once the gateway has refreshed the candidate
    list it calls propose_question for the elicitation follow-up.
    """
    if state.phase == Phase.AWAITING_ANSWER and state.pending_feature is None:
        raise ValueError("awaiting an answer with no pending question")
    state = replace(state, turn_count=state.turn_count + 1,
                    asked=set(state.asked), candidates=state.candidates)
    if state.phase == Phase.ENDED:
        return [Action(ActionKind.SESSION_ENDED_NOTICE)], state

    intent = nlu.intent
    if intent in _ANSWER_INTENTS:
        if state.phase != Phase.AWAITING_ANSWER:
            return [Action(ActionKind.HELP)], state
        feature = state.pending_feature
        state.phase = Phase.RECOMMENDING
        state.pending_feature = None
        return [
            Action(ActionKind.APPLY_ANSWER, feature_keys=(feature,),
                   answer=_ANSWER_INTENTS[intent])
        ], state

    # Any non-answer intent abandons a pending question.
    if state.phase == Phase.AWAITING_ANSWER:
        state.phase = Phase.RECOMMENDING
        state.pending_feature = None

    if intent == "get_recommendations":
        state.phase = Phase.RECOMMENDING
        return [Action(ActionKind.RECOMMEND)], state
    if intent == "explain_item":
        return [Action(ActionKind.EXPLAIN, ordinal=nlu.ordinal())], state
    if intent == "show_profile":
        return [Action(ActionKind.SHOW_PROFILE)], state
    if intent == "item_details":
        return [Action(ActionKind.ITEM_DETAILS, ordinal=nlu.ordinal())], state
    if intent in ("like_feature", "dislike_feature"):
        features = tuple(nlu.feature_keys())
        if not features:
            return [Action(ActionKind.HELP)], state
        polarity = +1 if intent == "like_feature" else -1
        return [
            Action(ActionKind.RECORD_FEATURE_PREF, feature_keys=features, polarity=polarity)
        ], state
    if intent in ("like_item", "dislike_item"):
        polarity = +1 if intent == "like_item" else -1
        return [
            Action(ActionKind.RECORD_ITEM_PREF, ordinal=nlu.ordinal(), polarity=polarity)
        ], state
    if intent == "end_session":
        state.phase = Phase.ENDED
        return [Action(ActionKind.CLOSE_SESSION)], state
    return [Action(ActionKind.HELP, fallback=intent == FALLBACK_INTENT)], state


def propose_question(
    state: DialogueState, candidate_items, cfg: PolicyConfig
) -> tuple[Action | None, DialogueState]:
    """Proactive elicitation rule, applied after a recommend refresh.

    Fires when the candidate list has at least ask_threshold items and
    some unasked feature splits it with positive information gain. The
    chosen feature is marked asked immediately so it is never repeated.
    """
    if len(candidate_items) < cfg.ask_threshold:
        return None, state
    question = select_question_feature(candidate_items, state.asked)
    if question is None:
        return None, state
    state = replace(state, asked=set(state.asked) | {question.feature_key},
                    pending_feature=question.feature_key,
                    phase=Phase.AWAITING_ANSWER)
    return Action(ActionKind.ASK_QUESTION, feature_keys=(question.feature_key,),
                  question=question), state


# ---------------------------------------------------------------------------
# Response rendering


class MessageCatalog:
    """Template strings keyed by message name, with {slot} placeholders."""

    def __init__(self, templates: dict[str, str]):
        for key, template in templates.items():
            if not isinstance(template, str):
                raise ValueError(f"message {key!r} must be a string template")
            stripped = _PLACEHOLDER.sub("", template)
            if "{" in stripped or "}" in stripped:
                raise ValueError(f"message {key!r} contains stray braces")
        self.templates = dict(templates)

    def __contains__(self, key: str) -> bool:
        return key in self.templates


def load_messages(path, required=REQUIRED_MESSAGE_KEYS) -> MessageCatalog:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise MalformedDocument("messages file must be a JSON object")
    missing = [key for key in required if key not in doc]
    if missing:
        raise MalformedDocument(f"messages file lacks required keys: {missing}")
    return MessageCatalog(doc)


def render(key: str, slots: dict[str, str], catalog: MessageCatalog) -> str:
    """Fill a template; refuses to leave any placeholder unresolved."""
    if key not in catalog.templates:
        raise UnknownMessageKey(key)

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            raise MissingSlot(name)
        return str(slots[name])

    return _PLACEHOLDER.sub(fill, catalog.templates[key])
