"""Budgeted choice of which correspondences to verify next.

Three strategies share one contract: given a view set, the ids that may be
asked, their token costs and a budget, return a feasible set. ``brute``
enumerates every feasible subset, ``greedy`` is the partial-enumeration
greedy (all feasible sets of size <= 2, plus greedy growth from every
feasible 3-set by gain per token), ``random`` is the seeded baseline.

Ties are broken everywhere by (higher objective, lower cost, lexicographically
smaller sorted id tuple), with objectives within ``TIE_TOL`` treated as equal.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from .errors import InstanceTooLarge, MalformedInput
from .model import CandidateResultSet, Correspondence, ViewSet
from .objective import DEFAULT_EXACT_CAP, InformationObjective, Mode, PlanningAccuracy

TIE_TOL = 1e-12
BRUTE_MAX_ITEMS = 24

Strategy = Literal["brute", "greedy", "random"]


@dataclass(frozen=True)
class CostModel:
    """Token cost of verifying a correspondence.

    Explicit costs from the input win; otherwise the cost is the character
    count of every attribute name plus up to ``values_per_attribute`` sample
    values, divided by ``chars_per_token`` and rounded up (minimum 1).
    """

    chars_per_token: int = 4
    values_per_attribute: int = 3
    overrides: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.chars_per_token < 1:
            raise MalformedInput("chars_per_token must be >= 1")
        for cid, v in self.overrides.items():
            if not isinstance(v, int) or v < 0:
                raise MalformedInput(f"cost override for {cid!r} must be a non-negative integer")


def token_cost(c: Correspondence, m: CostModel = CostModel()) -> int:
    if c.id in m.overrides:
        return int(m.overrides[c.id])
    if c.cost is not None:
        return int(c.cost)
    chars = 0
    for a in (*c.source_attrs, *c.target_attrs):
        chars += len(a.name)
        chars += sum(len(v) for v in a.sample_values[: m.values_per_attribute])
    return max(1, math.ceil(chars / m.chars_per_token))


def cost_table(crs: CandidateResultSet, m: CostModel = CostModel()) -> dict[str, int]:
    return {c.id: token_cost(c, m) for c in crs.correspondences}


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple[str, ...]
    objective_value: float  # expected entropy reduction, nats
    cost_used: int
    strategy: Strategy
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "objective_value": self.objective_value,
            "cost_used": self.cost_used,
            "strategy": self.strategy,
            "evaluations": self.evaluations,
        }


class _Best:
    """Running argmax under the shared tie-break order."""

    def __init__(self) -> None:
        self.value = -math.inf
        self.cost = 0
        self.key: tuple[str, ...] = ()
        self.chosen: tuple[str, ...] | None = None

    def offer(self, value: float, cost: int, chosen: Sequence[str]) -> None:
        key = tuple(sorted(chosen))
        if self.chosen is None or value > self.value + TIE_TOL:
            better = True
        elif value >= self.value - TIE_TOL:
            better = (cost, key) < (self.cost, self.key)
        else:
            better = False
        if better:
            self.value, self.cost, self.key, self.chosen = value, cost, key, tuple(chosen)


def _prepare(
    candidates: Iterable[str], costs: Mapping[str, int], budget: int, vs: ViewSet
) -> list[str]:
    if budget < 0:
        raise MalformedInput("budget must be >= 0")
    ids = sorted(set(candidates))
    for cid in ids:
        vs.index(cid)
        if cid not in costs:
            raise MalformedInput(f"no cost for correspondence {cid!r}")
        if costs[cid] < 0:
            raise MalformedInput(f"negative cost for correspondence {cid!r}")
    return ids


def _objective(
    vs: ViewSet, acc: PlanningAccuracy | float, mode: Mode, exact_cap: int, seed: int
) -> InformationObjective:
    return InformationObjective(vs, acc, mode, exact_cap, seed)


def brute_select(
    vs: ViewSet,
    candidates: Iterable[str],
    costs: Mapping[str, int],
    budget: int,
    acc: PlanningAccuracy | float = 0.9,
    *,
    mode: Mode = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
    seed: int = 0,
    max_items: int = BRUTE_MAX_ITEMS,
) -> SelectionResult:
    """Optimal feasible set by exhaustive enumeration."""
    ids = _prepare(candidates, costs, budget, vs)
    if len(ids) > max_items:
        raise InstanceTooLarge(f"brute force over {len(ids)} correspondences exceeds the limit of {max_items}")
    obj = _objective(vs, acc, mode, exact_cap, seed)
    w = [int(costs[c]) for c in ids]
    best = _Best()
    best.offer(0.0, 0, ())

    # depth-first over subsets in lexicographic order; each child extends its
    # parent's family table by one correspondence instead of rebuilding it
    def visit(start: int, state, used: int) -> None:
        for i in range(start, len(ids)):
            cost = used + w[i]
            if cost > budget:
                continue
            child = obj.extend(state, ids[i])
            best.offer(obj.prior_entropy + obj.state_value(child), cost, child.ids)
            visit(i + 1, child, cost)

    visit(0, obj.root(), 0)
    assert best.chosen is not None
    return SelectionResult(best.chosen, max(0.0, best.value), best.cost, "brute", obj.calls)


def greedy_select(
    vs: ViewSet,
    candidates: Iterable[str],
    costs: Mapping[str, int],
    budget: int,
    acc: PlanningAccuracy | float = 0.9,
    *,
    mode: Mode = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
    seed: int = 0,
) -> SelectionResult:
    """Greedy selection with partial enumeration.

    The best feasible set of size at most two competes with the best set grown
    from every feasible 3-set. Growth repeatedly adds the remaining item with
    the largest gain per token (zero-cost items rank first), dropping items
    that no longer fit, until nothing fits or the budget is used up.
    """
    ids = _prepare(candidates, costs, budget, vs)
    obj = _objective(vs, acc, mode, exact_cap, seed)
    w = {c: int(costs[c]) for c in ids}

    small = _Best()
    small.offer(0.0, 0, ())
    for size in (1, 2):
        for combo in itertools.combinations(ids, size):
            cost = sum(w[c] for c in combo)
            if cost <= budget:
                small.offer(obj.reduction(combo), cost, combo)

    grown = _Best()
    for seed_set in itertools.combinations(ids, 3):
        used = sum(w[c] for c in seed_set)
        if used > budget:
            continue
        chosen = list(seed_set)
        value = obj.value(chosen)
        members = set(chosen)
        remaining = [c for c in ids if c not in members and w[c] <= budget - used]
        while remaining and used < budget:
            pick, pick_ratio, pick_value = None, -math.inf, value
            seen: dict[object, float] = {}
            for c in remaining:
                key = obj.key(c)
                if key is None:
                    new_value = value
                elif key in seen:
                    new_value = seen[key]
                else:
                    new_value = seen[key] = obj.value([*chosen, c])
                gain = max(0.0, new_value - value)
                ratio = math.inf if w[c] == 0 else gain / w[c]
                if pick is None or ratio > pick_ratio + TIE_TOL:
                    pick, pick_ratio, pick_value = c, ratio, new_value
            assert pick is not None
            chosen.append(pick)
            used += w[pick]
            value = pick_value
            remaining = [c for c in remaining if c != pick and w[c] <= budget - used]
        grown.offer(obj.prior_entropy + value, used, chosen)

    best = small
    if grown.chosen is not None:
        best.offer(grown.value, grown.cost, grown.chosen)
    assert best.chosen is not None
    return SelectionResult(best.chosen, max(0.0, best.value), best.cost, "greedy", obj.calls)


def random_select(
    vs: ViewSet,
    candidates: Iterable[str],
    costs: Mapping[str, int],
    budget: int,
    seed: int,
    acc: PlanningAccuracy | float = 0.9,
    *,
    mode: Mode = "auto",
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> SelectionResult:
    """Seeded shuffle, then first-fit in shuffled order."""
    ids = _prepare(candidates, costs, budget, vs)
    order = list(ids)
    random.Random(seed).shuffle(order)
    chosen: list[str] = []
    used = 0
    for c in order:
        if used + costs[c] <= budget:
            chosen.append(c)
            used += int(costs[c])
    obj = _objective(vs, acc, mode, exact_cap, seed)
    value = obj.reduction(chosen) if chosen else 0.0
    return SelectionResult(tuple(chosen), max(0.0, value), used, "random", obj.calls)


def select(
    strategy: Strategy,
    vs: ViewSet,
    candidates: Iterable[str],
    costs: Mapping[str, int],
    budget: int,
    acc: PlanningAccuracy | float = 0.9,
    *,
    mode: Mode = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
    seed: int = 0,
) -> SelectionResult:
    if strategy == "greedy":
        return greedy_select(vs, candidates, costs, budget, acc, mode=mode, exact_cap=exact_cap, seed=seed)
    if strategy == "brute":
        return brute_select(vs, candidates, costs, budget, acc, mode=mode, exact_cap=exact_cap, seed=seed)
    if strategy == "random":
        return random_select(vs, candidates, costs, budget, seed, acc, mode=mode, exact_cap=exact_cap)
    raise MalformedInput(f"unknown strategy {strategy!r}")
