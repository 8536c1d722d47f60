"""Budgeted verification of probabilistic schema-matching results.

Pick the correspondences whose verdicts are expected to remove the most
uncertainty from a candidate result set, ask an oracle, and update the
distribution over candidates.
"""

from .engine import RunConfig, RunReport, run
from .errors import MatchVerifyError
from .model import (
    AttributeRef,
    CandidateResult,
    CandidateResultSet,
    Correspondence,
    ViewSet,
    build_view_set,
    load_crs,
    save_crs,
    validate_crs,
)
from .objective import PlanningAccuracy, entropy, expected_reduction, neg_conditional_entropy
from .selection import brute_select, greedy_select, random_select, select
from .update import apply_answer

__version__ = "0.1.0"

__all__ = [
    "AttributeRef",
    "CandidateResult",
    "CandidateResultSet",
    "Correspondence",
    "MatchVerifyError",
    "PlanningAccuracy",
    "RunConfig",
    "RunReport",
    "ViewSet",
    "apply_answer",
    "brute_select",
    "build_view_set",
    "entropy",
    "expected_reduction",
    "greedy_select",
    "load_crs",
    "neg_conditional_entropy",
    "random_select",
    "run",
    "save_crs",
    "select",
    "validate_crs",
]
