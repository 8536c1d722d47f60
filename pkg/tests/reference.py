"""Slow, obviously-correct implementations used as test oracles.

They enumerate every answer family and every subset explicitly and share no
code with the package beyond the ViewSet container.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def families(T, acc):
    for bits in itertools.product((False, True), repeat=len(T)):
        yield bits


def family_likelihoods(vs, T, acc, bits):
    out = []
    for v in range(vs.n_views):
        lik = 1.0
        for cid, b in zip(T, bits):
            truth = bool(vs.truth_matrix[v, vs.correspondence_ids.index(cid)])
            lik *= acc if truth == b else 1.0 - acc
        out.append(lik)
    return out


def neg_cond_entropy(vs, T, acc):
    """sum_A P(A) sum_v P(v|A) ln P(v|A), by plain Bayes over all 2^|T| families."""
    prior = [float(x) for x in vs.probabilities]
    total = 0.0
    for bits in families(T, acc):
        lik = family_likelihoods(vs, T, acc, bits)
        joint = [p * l for p, l in zip(prior, lik)]
        pa = sum(joint)
        if pa == 0:
            continue
        for j in joint:
            if j > 0:
                post = j / pa
                total += pa * post * math.log(post)
    return total


def prior_entropy(vs):
    return -sum(p * math.log(p) for p in vs.probabilities if p > 0)


def reduction(vs, T, acc):
    if not T:
        return 0.0
    return prior_entropy(vs) + neg_cond_entropy(vs, T, acc)


def brute_optimum(vs, costs, budget, acc):
    """Best expected reduction over every subset with cost <= budget."""
    ids = sorted(vs.correspondence_ids)
    best = 0.0
    for r in range(1, len(ids) + 1):
        for T in itertools.combinations(ids, r):
            if sum(costs[c] for c in T) <= budget:
                best = max(best, reduction(vs, list(T), acc))
    return best


def posterior(prior, rows, answers):
    """Product-form posterior; ``answers`` is a list of (column, verdict, confidence)."""
    w = np.array(prior, dtype=float)
    for col, verdict, conf in answers:
        w = w * np.where(rows[:, col] == verdict, conf, 1.0 - conf)
    return w / w.sum()
