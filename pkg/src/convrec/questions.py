"""Preference elicitation over the current candidate list.

The next question is the feature whose presence/absence split of the
candidates yields the highest information gain: with n candidates of
which x contain the feature (y = n - x),

    IG = log2(n) - (x/n) * log2(x) - (y/n) * log2(y)

with empty branches contributing nothing. Candidates are weighted
uniformly. A yes/no answer both filters the candidate list and emits a
feature preference for the re-ranker; "indifferent" only retires the
feature for the rest of the session.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

from .model import ItemProfile

logger = logging.getLogger(__name__)

YES = "yes"
NO = "no"
INDIFFERENT = "indifferent"


class EmptyCandidates(ValueError):
    """Information gain is undefined over an empty candidate list."""


@dataclass(frozen=True)
class ElicitationQuestion:
    feature_key: str
    gain: float
    candidate_count: int


def information_gain(candidates: Sequence[ItemProfile], feature_key: str) -> float:
    """Entropy reduction from splitting the candidates on one feature."""
    n = len(candidates)
    if n == 0:
        raise EmptyCandidates("no candidates to split")
    x = sum(1 for item in candidates if feature_key in item.feature_keys())
    y = n - x
    # Accumulate the branch terms before subtracting so the result is
    # bit-identical under the x <-> y swap (ties must break on the key).
    split = 0.0
    if x > 0:
        split += (x / n) * math.log2(x)
    if y > 0:
        split += (y / n) * math.log2(y)
    return math.log2(n) - split


def select_question_feature(
    candidates: Sequence[ItemProfile],
    exclude: frozenset[str] | set[str] = frozenset(),
) -> ElicitationQuestion | None:
    """Highest-gain feature over the candidates, or None if nothing splits.

    Ties break by ascending feature key. Features already asked (the
    exclude set) are skipped, and lists with fewer than two candidates
    never produce a question.
    """
    if len(candidates) < 2:
        return None
    feature_keys = set()
    for item in candidates:
        feature_keys.update(item.feature_keys())
    best: ElicitationQuestion | None = None
    for key in sorted(feature_keys - set(exclude)):
        gain = information_gain(candidates, key)
        if gain > 0.0 and (best is None or gain > best.gain):
            best = ElicitationQuestion(key, gain, len(candidates))
    return best


def apply_answer(
    candidates: Sequence[ItemProfile],
    feature_key: str,
    answer: str,
) -> tuple[list[ItemProfile], int | None]:
    """Filter candidates by the user's answer and emit a polarity.

    yes keeps items with the feature (+1), no keeps items without it (-1),
    indifferent changes nothing and emits no polarity. A filter that would
    empty the list is skipped; the preference polarity is still emitted.
    """
    if answer not in (YES, NO, INDIFFERENT):
        raise ValueError(f"unknown answer: {answer!r}")
    if answer == INDIFFERENT:
        return list(candidates), None
    polarity = +1 if answer == YES else -1
    keep_present = answer == YES
    kept = [
        item for item in candidates
        if (feature_key in item.feature_keys()) == keep_present
    ]
    if not kept:
        logger.warning(
            "answer %s on %s would empty the candidate list; filter skipped",
            answer, feature_key,
        )
        return list(candidates), polarity
    return kept, polarity
