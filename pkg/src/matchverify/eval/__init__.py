"""Metrics, demo data, synthetic fixtures and the experiment grid."""

from .metrics import candidate_f1, mrr, rank_candidates, rank_of_best

__all__ = ["candidate_f1", "mrr", "rank_candidates", "rank_of_best"]
