"""Candidate F1, posterior ranking and reciprocal rank of the best candidate."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..model import CandidateResult, CandidateResultSet, ViewSet
from ..truth import GroundTruth


def candidate_f1(cand: CandidateResult, crs: CandidateResultSet, gt: GroundTruth) -> tuple[float, float, float]:
    predicted = {crs.correspondence(cid).pair_key for cid in cand.correspondence_ids}
    hits = len(predicted & gt.matches)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(gt.matches) if gt.matches else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def rank_candidates(vs: ViewSet) -> list[int]:
    """View indices by descending probability; equal probabilities keep input order."""
    return [int(i) for i in np.argsort(-vs.probabilities, kind="stable")]


def rank_of_best(
    view_order: Sequence[Sequence[str]], crs: CandidateResultSet, gt: GroundTruth
) -> int:
    """1-based position of the first ranked view holding a highest-F1 candidate.

    ``view_order`` lists the candidate ids of each view, best view first.
    """
    f1 = {s.id: candidate_f1(s, crs, gt)[2] for s in crs.candidates}
    top = max(f1.values())
    for pos, members in enumerate(view_order, 1):
        if any(f1.get(cid) == top for cid in members):
            return pos
    raise ValueError("no ranked view contains a candidate of the result set")


def mrr(vs: ViewSet, crs: CandidateResultSet, gt: GroundTruth) -> float:
    order = [vs.candidate_ids[v] for v in rank_candidates(vs)]
    return 1.0 / rank_of_best(order, crs, gt)
