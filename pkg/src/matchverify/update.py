"""Bayesian update of a view distribution from oracle verdicts."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InconsistentAnswer, MalformedInput
from .model import ViewSet
from .objective import AnswerFamily


def _likelihood(vs: ViewSet, corr_id: str, verdict: bool, confidence: float) -> np.ndarray:
    if not 0.5 <= confidence <= 1.0:
        raise MalformedInput(f"confidence {confidence} outside [0.5, 1.0]")
    agrees = vs.column(corr_id) == bool(verdict)
    return np.where(agrees, confidence, 1.0 - confidence)


def _posterior(vs: ViewSet, weights: np.ndarray, what: str) -> ViewSet:
    joint = vs.probabilities * weights
    total = joint.sum()
    if total <= 0.0:
        raise InconsistentAnswer(f"{what} contradicts every view with non-zero probability")
    return vs.with_probabilities(joint / total)


def apply_answer(vs: ViewSet, answer) -> ViewSet:
    """Posterior after one verdict; ``answer`` needs corr_id, verdict, confidence.

    Rows are kept in place even when their probability drops to zero, so view
    indices stay stable across a run.
    """
    lik = _likelihood(vs, answer.corr_id, answer.verdict, answer.confidence)
    return _posterior(vs, lik, f"answer {answer.verdict} on {answer.corr_id}")


def apply_answers(vs: ViewSet, answers: Iterable) -> ViewSet:
    for a in answers:
        vs = apply_answer(vs, a)
    return vs


def apply_family(vs: ViewSet, family: AnswerFamily) -> ViewSet:
    for cid, verdict, conf in zip(family.corr_ids, family.verdicts, family.confidences):
        lik = _likelihood(vs, cid, verdict, conf)
        vs = _posterior(vs, lik, f"answer {verdict} on {cid}")
    return vs
