"""Post-processing re-ranker.

Blends the upstream recommender's scores with the similarity between
each item and the preferences learnt in the current session, so stated
preferences show up in the very next recommendation list.

Upstream scores arrive in whatever scale the recommender uses, so they
are min-max normalized onto [0, 1] first (all-equal lists map to 1.0).
Cosine similarity is mapped onto [0, 1] via (c + 1) / 2 before blending.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, replace

from .model import RecommendationList
from .vectorize import FeatureVector, cosine

_EMPTY = FeatureVector({})


@dataclass(frozen=True)
class RerankConfig:
    # Weight of the recommender score; 1 - alpha goes to preference similarity.
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def rerank(
    rec: RecommendationList,
    pref_vec: FeatureVector,
    item_vecs: Mapping[str, FeatureVector],
    cfg: RerankConfig,
) -> RecommendationList:
    """Blend scores and re-sort; ties break by ascending item_id.

    Items without a vector in ``item_vecs`` are treated as empty vectors
    (similarity term 0.5 after shifting). rec_score is preserved on every
    output item and final_score is populated.
    """
    if not rec.items:
        return RecommendationList([])
    scores = [it.rec_score for it in rec.items]
    lo, hi = min(scores), max(scores)
    span = hi - lo
    out = []
    for it in rec.items:
        r = 1.0 if span == 0.0 else (it.rec_score - lo) / span
        sim = cosine(pref_vec, item_vecs.get(it.item_id, _EMPTY))
        s = (sim + 1.0) / 2.0
        final = cfg.alpha * r + (1.0 - cfg.alpha) * s
        out.append(replace(it, final_score=final))
    out.sort(key=lambda it: (-it.final_score, it.item_id))
    return RecommendationList(out)
