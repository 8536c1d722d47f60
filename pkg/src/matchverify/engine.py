"""The verification loop: split the budget into rounds, then select, ask, update."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal, TextIO

from .errors import MalformedInput, OracleError
from .eval.metrics import rank_candidates
from .model import CandidateResultSet, ViewSet, build_view_set, dumps_json
from .objective import DEFAULT_EXACT_CAP, PlanningAccuracy, derive_seed, entropy
from .oracle.base import Answer, Oracle
from .selection import CostModel, Strategy, cost_table, select
from .update import apply_answer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    total_budget: int
    rounds_k: int = 1
    strategy: Strategy = "greedy"
    planning_accuracy: float = 0.9
    seed: int = 0
    exact_cap: int = DEFAULT_EXACT_CAP
    stop_entropy: float | None = None
    allow_requery: bool = False
    on_oracle_error: Literal["abort", "skip"] = "abort"
    chars_per_token: int = 4

    def __post_init__(self) -> None:
        if self.total_budget < 0:
            raise MalformedInput("total_budget must be >= 0")
        if self.rounds_k < 1:
            raise MalformedInput("rounds_k must be >= 1")
        if not 0.5 < self.planning_accuracy <= 1.0:
            raise MalformedInput("planning_accuracy must lie in (0.5, 1.0]")
        if self.strategy not in ("greedy", "random", "brute"):
            raise MalformedInput(f"unknown strategy {self.strategy!r}")
        if self.on_oracle_error not in ("abort", "skip"):
            raise MalformedInput("on_oracle_error must be 'abort' or 'skip'")


@dataclass
class RoundRecord:
    index: int
    round_budget: int
    selected: list[str]
    costs: dict[str, int]
    expected_reduction: float
    answers: list[dict[str, Any]]
    skipped: list[str]
    entropy_before: float
    entropy_after: float
    spent: int
    remaining: int
    distribution: list[float]


@dataclass
class RunReport:
    config: dict[str, Any]
    correspondence_ids: list[str]
    view_candidates: list[list[str]]
    prior: list[float]
    rounds: list[RoundRecord] = field(default_factory=list)
    final_distribution: list[float] = field(default_factory=list)
    final_ranking: list[str] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def prior_entropy(self) -> float:
        return entropy(self.prior)

    @property
    def final_entropy(self) -> float:
        return entropy(self.final_distribution)

    @property
    def spent(self) -> int:
        return self.rounds[-1].spent if self.rounds else 0

    def entropy_trajectory(self) -> list[tuple[int, float]]:
        """(cumulative tokens spent, entropy) after every round, starting from the prior."""
        out = [(0, self.prior_entropy)]
        out += [(r.spent, r.entropy_after) for r in self.rounds]
        return out

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunReport:
        d = dict(d)
        d["rounds"] = [RoundRecord(**r) for r in d.get("rounds", [])]
        return cls(**d)

    def dumps(self) -> str:
        return dumps_json(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> RunReport:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _ranking(vs: ViewSet) -> list[str]:
    return [cid for v in rank_candidates(vs) for cid in vs.candidate_ids[v]]


def run(
    cfg: RunConfig,
    crs: CandidateResultSet,
    oracle: Oracle,
    events: TextIO | None = None,
) -> RunReport:
    """Spend ``cfg.total_budget`` tokens over ``cfg.rounds_k`` rounds.

    Each round gets an equal share plus whatever earlier rounds left unspent;
    the last round also gets the rounding remainder. Selection is replanned
    every round from the current posterior with the configured planning
    accuracy, and answers are applied one at a time in selection order.
    """
    vs = build_view_set(crs)
    costs = cost_table(crs, CostModel(chars_per_token=cfg.chars_per_token))
    acc = PlanningAccuracy(cfg.planning_accuracy)
    ids = list(vs.correspondence_ids)
    report = RunReport(
        config=asdict(cfg),
        correspondence_ids=ids,
        view_candidates=[list(c) for c in vs.candidate_ids],
        prior=vs.probabilities.tolist(),
    )

    share, remainder = divmod(cfg.total_budget, cfg.rounds_k)
    spent = 0
    carry = 0
    asked: set[str] = set()
    stop = "rounds exhausted"
    for r in range(cfg.rounds_k):
        h = entropy(vs.probabilities)
        pool = [c for c in ids if cfg.allow_requery or c not in asked]
        remaining = cfg.total_budget - spent
        if not pool:
            stop = "all correspondences asked"
            break
        if remaining < min(costs[c] for c in pool):
            stop = "budget exhausted"
            break
        if cfg.stop_entropy is not None and h <= cfg.stop_entropy:
            stop = "entropy threshold reached"
            break
        if h <= 0.0:
            stop = "distribution resolved"
            break

        round_budget = share + carry + (remainder if r == cfg.rounds_k - 1 else 0)
        sel = select(
            cfg.strategy,
            vs,
            pool,
            costs,
            round_budget,
            acc,
            mode="auto",
            exact_cap=cfg.exact_cap,
            seed=derive_seed(cfg.seed, r),
        )
        order = list(sel.chosen)
        answers: list[Answer] = []
        skipped: list[str] = []
        try:
            answers = oracle.verify_many([crs.correspondence(c) for c in order])
        except OracleError:
            if cfg.on_oracle_error == "abort":
                raise
            # fall back to one at a time so a single failure does not void the round
            for c in order:
                try:
                    answers.append(oracle.verify(crs.correspondence(c)))
                except OracleError as exc:
                    log.warning("skipping %s: %s", c, exc)
                    skipped.append(c)

        used = 0
        for a in answers:
            vs = apply_answer(vs, a)
            used += costs[a.corr_id]
            if events is not None:
                events.write(
                    json.dumps(
                        {"round": r, **a.to_dict(), "cost": costs[a.corr_id], "entropy": entropy(vs.probabilities)},
                        sort_keys=True,
                    )
                    + "\n"
                )
        asked.update(order)
        spent += used
        carry = round_budget - used
        report.rounds.append(
            RoundRecord(
                index=r,
                round_budget=round_budget,
                selected=order,
                costs={c: costs[c] for c in order},
                expected_reduction=sel.objective_value,
                answers=[a.to_dict() for a in answers],
                skipped=skipped,
                entropy_before=h,
                entropy_after=entropy(vs.probabilities),
                spent=spent,
                remaining=cfg.total_budget - spent,
                distribution=vs.probabilities.tolist(),
            )
        )
    report.stop_reason = stop
    report.final_distribution = vs.probabilities.tolist()
    report.final_ranking = _ranking(vs)
    return report

