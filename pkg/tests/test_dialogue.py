from __future__ import annotations

import pytest

from convrec.dialogue import (
    ActionKind,
    DialogueState,
    MessageCatalog,
    MissingSlot,
    Phase,
    PolicyConfig,
    UnknownMessageKey,
    Workspace,
    classify,
    load_messages,
    load_workspace,
    next_action,
    propose_question,
    render,
)
from convrec.model import RecommendationList, ScoredItem

from conftest import MESSAGES_PATH, WORKSPACE_PATH, make_item

CFG = PolicyConfig(ask_threshold=5)


@pytest.fixture(scope="module")
def ws() -> Workspace:
    return load_workspace(WORKSPACE_PATH)


def tiny_workspace() -> Workspace:
    return Workspace(
        intents={
            "get_recommendations": ["recommend*"],
            "like_feature": ["i love {genre}"],
        },
        entities={"genre": {"comedy": ["comedy", "comedies"]}},
    )


class TestClassify:
    def test_exact_pattern_match(self):
        nlu = classify("recommend me something", tiny_workspace())
        assert (nlu.intent, nlu.confidence, nlu.entities) == (
            "get_recommendations", 1.0, ())

    def test_entity_then_pattern(self):
        nlu = classify("i love comedy movies", tiny_workspace())
        assert nlu.intent == "like_feature"
        assert nlu.confidence == 1.0
        assert [(e.entity_type, e.value) for e in nlu.entities] == [("genre", "comedy")]

    def test_gibberish_falls_back(self):
        nlu = classify("asdf qwerty", tiny_workspace())
        assert (nlu.intent, nlu.confidence, nlu.entities) == ("fallback", 0.0, ())

    def test_totality_never_raises(self, ws):
        for utterance in ["", "   ", "?!.", "{genre}", "yes no maybe", "a" * 500,
                          "émigré Ω ≈ comedy"]:
            result = classify(utterance, ws)
            assert result.intent

    def test_determinism(self, ws):
        for utterance in ["recommend me something", "i love comedy", "why the 2nd one"]:
            assert classify(utterance, ws) == classify(utterance, ws)

    def test_longest_match_extraction(self, ws):
        nlu = classify("i love mara quinn", ws)
        assert [(e.entity_type, e.value) for e in nlu.entities] == [
            ("actor", "mara quinn")]
        assert nlu.entities[0].span == "mara quinn"

    def test_partial_keyword_overlap_confidence(self, ws):
        nlu = classify("watch please", ws)
        assert nlu.intent == "get_recommendations"
        assert 0.0 < nlu.confidence < 1.0

    def test_placeholder_injection_is_neutralized(self, ws):
        nlu = classify("{genre} one", ws)
        assert all(e.entity_type != "genre" for e in nlu.entities)


class TestPolicy:
    def test_idle_recommend(self, ws):
        actions, state = next_action(DialogueState(), classify("recommend me something", ws), CFG)
        assert [a.kind for a in actions] == [ActionKind.RECOMMEND]
        assert state.phase == Phase.RECOMMENDING
        assert state.turn_count == 1

    def test_recommend_then_question_with_diverse_candidates(self, ws):
        items = [make_item(f"i{k}", ("genre", f"g{k % 2}"), ("actor", f"a{k}"))
                 for k in range(6)]
        state = DialogueState(
            phase=Phase.RECOMMENDING,
            candidates=RecommendationList(
                [ScoredItem(it.item_id, 1.0) for it in items]),
        )
        actions, state = next_action(state, classify("recommend me something", ws), CFG)
        assert [a.kind for a in actions] == [ActionKind.RECOMMEND]
        ask, state = propose_question(state, items, CFG)
        assert ask is not None and ask.kind == ActionKind.ASK_QUESTION
        assert state.phase == Phase.AWAITING_ANSWER
        assert state.pending_feature == ask.question.feature_key
        assert ask.question.feature_key in state.asked

    def test_no_question_below_threshold(self):
        items = [make_item("i0", ("genre", "a")), make_item("i1", ("genre", "b"))]
        ask, state = propose_question(DialogueState(phase=Phase.RECOMMENDING), items, CFG)
        assert ask is None and state.phase == Phase.RECOMMENDING

    def test_no_question_when_all_gains_zero(self):
        items = [make_item(f"i{k}", ("genre", "same")) for k in range(6)]
        ask, _ = propose_question(DialogueState(phase=Phase.RECOMMENDING), items, CFG)
        assert ask is None

    def test_out_of_context_answer_is_help(self, ws):
        actions, state = next_action(DialogueState(), classify("yes", ws), CFG)
        assert [a.kind for a in actions] == [ActionKind.HELP]
        assert state.phase == Phase.IDLE

    def test_answer_in_context(self, ws):
        state = DialogueState(phase=Phase.AWAITING_ANSWER, pending_feature="genre=comedy")
        actions, state = next_action(state, classify("yes", ws), CFG)
        assert [a.kind for a in actions] == [ActionKind.APPLY_ANSWER]
        assert actions[0].feature_keys == ("genre=comedy",)
        assert actions[0].answer == "yes"
        assert state.phase == Phase.RECOMMENDING
        assert state.pending_feature is None

    def test_non_answer_abandons_pending_question(self, ws):
        state = DialogueState(phase=Phase.AWAITING_ANSWER, pending_feature="genre=comedy")
        actions, state = next_action(state, classify("show my profile", ws), CFG)
        assert [a.kind for a in actions] == [ActionKind.SHOW_PROFILE]
        assert state.phase == Phase.RECOMMENDING
        assert state.pending_feature is None

    def test_feature_pref_actions(self, ws):
        actions, _ = next_action(DialogueState(), classify("i love comedy", ws), CFG)
        assert actions[0].kind == ActionKind.RECORD_FEATURE_PREF
        assert actions[0].feature_keys == ("genre=comedy",)
        assert actions[0].polarity == +1
        actions, _ = next_action(DialogueState(), classify("i hate horror", ws), CFG)
        assert actions[0].polarity == -1

    def test_feature_pref_without_entity_is_help(self):
        ws = tiny_workspace()
        actions, _ = next_action(DialogueState(), classify("i love  ", ws), CFG)
        assert actions[0].kind == ActionKind.HELP

    def test_item_actions_carry_ordinal(self, ws):
        actions, _ = next_action(DialogueState(), classify("why the second one", ws), CFG)
        assert actions[0].kind == ActionKind.EXPLAIN
        assert actions[0].ordinal == 2
        actions, _ = next_action(DialogueState(), classify("i like the first one", ws), CFG)
        assert actions[0].kind == ActionKind.RECORD_ITEM_PREF
        assert (actions[0].ordinal, actions[0].polarity) == (1, +1)

    def test_close_from_any_phase(self, ws):
        for phase, pending in ((Phase.IDLE, None), (Phase.RECOMMENDING, None),
                               (Phase.AWAITING_ANSWER, "genre=x")):
            state = DialogueState(phase=phase, pending_feature=pending)
            actions, state = next_action(state, classify("goodbye", ws), CFG)
            assert [a.kind for a in actions] == [ActionKind.CLOSE_SESSION]
            assert state.phase == Phase.ENDED

    def test_after_ended_only_notice(self, ws):
        state = DialogueState(phase=Phase.ENDED)
        for text in ["recommend me something", "yes", "goodbye"]:
            actions, state = next_action(state, classify(text, ws), CFG)
            assert [a.kind for a in actions] == [ActionKind.SESSION_ENDED_NOTICE]

    def test_determinism(self, ws):
        nlu = classify("recommend me something", ws)
        a1, s1 = next_action(DialogueState(), nlu, CFG)
        a2, s2 = next_action(DialogueState(), nlu, CFG)
        assert a1 == a2 and s1 == s2


class TestRender:
    def test_single_substitution(self):
        catalog = MessageCatalog({"rec_header": "Here are {n} picks for you:"})
        assert render("rec_header", {"n": "5"}, catalog) == "Here are 5 picks for you:"

    def test_no_placeholders_verbatim(self):
        catalog = MessageCatalog({"help": "No slots here."})
        assert render("help", {}, catalog) == "No slots here."

    def test_missing_slot(self):
        catalog = MessageCatalog({"x": "{a} and {b}"})
        with pytest.raises(MissingSlot) as err:
            render("x", {"a": "x"}, catalog)
        assert err.value.name == "b"

    def test_unknown_key(self):
        with pytest.raises(UnknownMessageKey):
            render("nope", {}, MessageCatalog({}))

    def test_no_unresolved_braces_in_output(self):
        catalog = load_messages(MESSAGES_PATH)
        out = render("rec_item_line", {"rank": "1", "title": "T", "score": "0.50"}, catalog)
        assert "{" not in out and "}" not in out

    def test_stray_braces_rejected_at_load(self):
        with pytest.raises(ValueError):
            MessageCatalog({"bad": "some { stray"})

    def test_bundled_messages_have_required_keys(self):
        catalog = load_messages(MESSAGES_PATH)
        assert "rec_header" in catalog and "goodbye" in catalog
