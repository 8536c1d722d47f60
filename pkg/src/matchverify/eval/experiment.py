"""Grid runner: datasets x strategies x budgets x seeds, one engine run per cell."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.stats import spearmanr

from ..engine import RunConfig, RunReport, run
from ..errors import MalformedInput, MatchVerifyError
from ..model import CandidateResultSet, dumps_json, load_crs, validate_crs
from ..oracle import LLMConfig, OracleConfig, ReplayConfig, SimulatedConfig, make_oracle
from ..selection import CostModel, cost_table
from ..truth import GroundTruth, load_ground_truth
from .metrics import rank_of_best

log = logging.getLogger(__name__)

CELL_FIELDS = ("dataset", "strategy", "budget", "seed", "mrr", "final_entropy_nats", "rank_of_best", "wall_ms")
CURVE_FIELDS = ("dataset", "strategy", "budget", "seed", "round", "spent", "entropy_nats")


@dataclass(frozen=True)
class Dataset:
    name: str
    crs: CandidateResultSet
    truth: GroundTruth

    @classmethod
    def load(cls, name: str, crs_path: str | Path, truth_path: str | Path) -> Dataset:
        crs = validate_crs(load_crs(crs_path)).raise_for_errors()
        return cls(name, crs, load_ground_truth(truth_path))

    @property
    def total_cost(self) -> int:
        return sum(cost_table(self.crs, CostModel()).values())


@dataclass(frozen=True)
class ExperimentSpec:
    """Budgets are absolute tokens; ``budget_fractions`` are taken of each dataset's total cost."""

    datasets: tuple[Dataset, ...]
    strategies: tuple[str, ...] = ("greedy", "random")
    budgets: tuple[int, ...] = ()
    budget_fractions: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0,)
    rounds_k: int = 4
    planning_accuracy: float = 0.918
    oracle: OracleConfig = field(default_factory=SimulatedConfig)
    exact_cap: int = 16

    def __post_init__(self) -> None:
        if not self.datasets:
            raise MalformedInput("experiment needs at least one dataset")
        if not self.budgets and not self.budget_fractions:
            raise MalformedInput("experiment needs budgets or budget_fractions")
        if any(f < 0 for f in self.budget_fractions):
            raise MalformedInput("budget fractions must be >= 0")

    def budgets_for(self, ds: Dataset) -> list[int]:
        total = ds.total_cost
        out = list(self.budgets) + [int(f * total) for f in self.budget_fractions]
        return sorted(set(out))

    @property
    def n_cells(self) -> int:
        return sum(len(self.budgets_for(d)) for d in self.datasets) * len(self.strategies) * len(self.seeds)


@dataclass
class Cell:
    dataset: str
    strategy: str
    budget: int
    seed: int
    mrr: float | None = None
    final_entropy_nats: float | None = None
    rank_of_best: int | None = None
    wall_ms: float = 0.0
    error: str | None = None
    trajectory: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class ExperimentReport:
    cells: list[Cell]

    @property
    def failures(self) -> list[Cell]:
        return [c for c in self.cells if c.error is not None]

    def ok_cells(self) -> list[Cell]:
        return [c for c in self.cells if c.error is None]

    def aggregate(self) -> list[dict[str, Any]]:
        """Means over seeds for each (dataset, strategy, budget)."""
        groups: dict[tuple[str, str, int], list[Cell]] = defaultdict(list)
        for c in self.ok_cells():
            groups[(c.dataset, c.strategy, c.budget)].append(c)
        rows = []
        for (d, s, b), cs in sorted(groups.items()):
            ranks = np.array([c.rank_of_best for c in cs])
            rows.append(
                {
                    "dataset": d,
                    "strategy": s,
                    "budget": b,
                    "runs": len(cs),
                    "mean_mrr": float(np.mean([c.mrr for c in cs])),
                    "mean_final_entropy_nats": float(np.mean([c.final_entropy_nats for c in cs])),
                    "rank1_rate": float(np.mean(ranks == 1)),
                    "rank2_rate": float(np.mean(ranks <= 2)),
                    "mean_wall_ms": float(np.mean([c.wall_ms for c in cs])),
                }
            )
        return rows

    def entropy_budget_spearman(self, strategy: str | None = None) -> float:
        """Rank correlation of seed-averaged final entropy against budget, pooled over datasets."""
        rows = [r for r in self.aggregate() if strategy is None or r["strategy"] == strategy]
        if len(rows) < 2:
            return float("nan")
        # rank budgets within each dataset so datasets of different size pool cleanly
        xs, ys = [], []
        by_ds: dict[tuple[str, str], list[dict[str, Any]]] = defaultdict(list)
        for r in rows:
            by_ds[(r["dataset"], r["strategy"])].append(r)
        for grp in by_ds.values():
            grp.sort(key=lambda r: r["budget"])
            for pos, r in enumerate(grp):
                xs.append(pos)
                ys.append(r["mean_final_entropy_nats"])
        return float(spearmanr(xs, ys).statistic)

    def to_dict(self) -> dict[str, Any]:
        return {"cells": [asdict(c) for c in self.cells], "aggregate": self.aggregate()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentReport:
        cells = []
        for c in d["cells"]:
            c = dict(c)
            c["trajectory"] = [tuple(t) for t in c.get("trajectory", [])]
            cells.append(Cell(**c))
        return cls(cells)

    def cells_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CELL_FIELDS + ("error",))
        for c in self.cells:
            w.writerow([getattr(c, f) if getattr(c, f) is not None else "" for f in CELL_FIELDS] + [c.error or ""])
        return buf.getvalue()

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
        for c in self.ok_cells():
            for r, (spent, h) in enumerate(c.trajectory):
                w.writerow([c.dataset, c.strategy, c.budget, c.seed, r, spent, f"{h:.6f}"])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps_json(self.to_dict()), encoding="utf-8")
        (out / "cells.csv").write_text(self.cells_csv(), encoding="utf-8")
        (out / "curves.csv").write_text(self.curves_csv(), encoding="utf-8")


def _oracle_for(cfg: OracleConfig, ds: Dataset, seed: int):
    if isinstance(cfg, SimulatedConfig):
        return make_oracle(replace(cfg, seed=seed), ds.truth)
    return make_oracle(cfg, ds.truth)


def run_cell(spec: ExperimentSpec, ds: Dataset, strategy: str, budget: int, seed: int) -> Cell:
    cell = Cell(ds.name, strategy, budget, seed)
    t0 = time.perf_counter()
    try:
        cfg = RunConfig(
            total_budget=budget,
            rounds_k=spec.rounds_k,
            strategy=strategy,  # type: ignore[arg-type]
            planning_accuracy=spec.planning_accuracy,
            seed=seed,
            exact_cap=spec.exact_cap,
        )
        rep: RunReport = run(cfg, ds.crs, _oracle_for(spec.oracle, ds, seed))
        cell.rank_of_best = rank_of_best(ranked_views(rep), ds.crs, ds.truth)
        cell.mrr = 1.0 / cell.rank_of_best
        cell.final_entropy_nats = rep.final_entropy
        cell.trajectory = rep.entropy_trajectory()
    except (MatchVerifyError, ValueError) as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell %s/%s/%s/%s failed: %s", ds.name, strategy, budget, seed, cell.error)
    cell.wall_ms = (time.perf_counter() - t0) * 1000.0
    return cell


def ranked_views(rep: RunReport) -> list[list[str]]:
    probs = np.asarray(rep.final_distribution)
    return [rep.view_candidates[i] for i in np.argsort(-probs, kind="stable")]


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    cells = []
    for ds in spec.datasets:
        for strategy in spec.strategies:
            for budget in spec.budgets_for(ds):
                for seed in spec.seeds:
                    cells.append(run_cell(spec, ds, strategy, budget, seed))
    return ExperimentReport(cells)


def spec_from_dict(d: dict[str, Any], base_dir: str | Path = ".") -> ExperimentSpec:
    """Build a spec from JSON; dataset paths are relative to ``base_dir``."""
    from .synthetic import fixture_suite

    allowed = {
        "datasets", "synthetic", "strategies", "budgets", "budget_fractions", "seeds",
        "rounds_k", "planning_accuracy", "oracle", "exact_cap",
    }
    unknown = set(d) - allowed
    if unknown:
        raise MalformedInput(f"unknown experiment keys {sorted(unknown)}; valid keys: {sorted(allowed)}")
    base = Path(base_dir)
    datasets: list[Dataset] = []
    for entry in d.get("datasets", []):
        datasets.append(Dataset.load(entry["name"], base / entry["crs"], base / entry["ground_truth"]))
    if d.get("synthetic"):
        datasets += [Dataset(n, c, g) for n, c, g in fixture_suite(int(d["synthetic"]))]
    oracle_d = dict(d.get("oracle", {"kind": "simulated"}))
    kind = oracle_d.pop("kind", "simulated")
    oracle: OracleConfig
    if kind == "simulated":
        oracle = SimulatedConfig(**oracle_d)
    elif kind == "replay":
        oracle = ReplayConfig(**oracle_d)
    elif kind == "llm":
        oracle = LLMConfig(**oracle_d)
    else:
        raise MalformedInput(f"unknown oracle kind {kind!r}")
    seeds = d.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    return ExperimentSpec(
        datasets=tuple(datasets),
        strategies=tuple(d.get("strategies", ("greedy", "random"))),
        budgets=tuple(int(b) for b in d.get("budgets", ())),
        budget_fractions=tuple(float(f) for f in d.get("budget_fractions", ())),
        seeds=tuple(int(s) for s in seeds),
        rounds_k=int(d.get("rounds_k", 4)),
        planning_accuracy=float(d.get("planning_accuracy", 0.918)),
        oracle=oracle,
        exact_cap=int(d.get("exact_cap", 16)),
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    p = Path(path)
    return spec_from_dict(json.loads(p.read_text(encoding="utf-8")), p.parent)


def greedy_beats_random(report: ExperimentReport) -> tuple[int, int]:
    """(cells where greedy's seed-mean final entropy <= random's, cells compared)."""
    agg = {(r["dataset"], r["budget"], r["strategy"]): r["mean_final_entropy_nats"] for r in report.aggregate()}
    wins = total = 0
    for (d, b, s), h in agg.items():
        if s != "greedy" or (d, b, "random") not in agg:
            continue
        total += 1
        wins += h <= agg[(d, b, "random")] + 1e-12
    return wins, total


def rank_rates(report: ExperimentReport, strategy: str | None = None) -> tuple[float, float]:
    cs = [c for c in report.ok_cells() if strategy is None or c.strategy == strategy]
    if not cs:
        return float("nan"), float("nan")
    ranks = np.array([c.rank_of_best for c in cs])
    return float(np.mean(ranks == 1)), float(np.mean(ranks <= 2))


__all__: Sequence[str] = (
    "Cell", "Dataset", "ExperimentReport", "ExperimentSpec", "greedy_beats_random",
    "load_spec", "rank_rates", "run_cell", "run_experiment", "spec_from_dict",
)
