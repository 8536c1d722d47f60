import io
import json

import numpy as np
import pytest

from matchverify.engine import RunConfig, RunReport, run
from matchverify.errors import MalformedInput, OracleError, TranscriptMiss
from matchverify.eval.synthetic import make_fixture
from matchverify.model import build_view_set
from matchverify.objective import entropy
from matchverify.oracle import SimulatedConfig, SimulatedOracle
from matchverify.oracle.base import SequentialMixin
from matchverify.selection import cost_table
from matchverify.truth import GroundTruth

from .conftest import TOY_IDS, TOY_ROWS, toy_crs


def sim(truth, acc=0.9, seed=0):
    return SimulatedOracle(SimulatedConfig(acc, seed), truth)


def test_perfect_oracle_resolves_to_v1(crs, truth):
    total = sum(cost_table(crs).values())
    rep = run(RunConfig(total, 1, "greedy", 0.9), crs, sim(truth, 1.0))
    assert rep.final_distribution == pytest.approx([1.0, 0.0, 0.0])
    assert rep.final_entropy == 0.0
    assert rep.final_ranking[0] == "s1"


def test_zero_budget_echoes_prior(crs, truth):
    rep = run(RunConfig(0, 3), crs, sim(truth))
    assert rep.rounds == []
    assert rep.final_distribution == pytest.approx([0.55, 0.25, 0.20])
    assert rep.stop_reason == "budget exhausted"
    assert rep.final_ranking == ["s1", "s2", "s3"]


def test_same_seed_same_bytes(crs, truth):
    cfg = RunConfig(60, 4, "random", 0.8, seed=7)
    a = run(cfg, crs, sim(truth, 0.8, 7)).dumps()
    b = run(cfg, crs, sim(truth, 0.8, 7)).dumps()
    assert a == b


@pytest.mark.parametrize("strategy", ["greedy", "random", "brute"])
@pytest.mark.parametrize("budget, k", [(17, 1), (40, 3), (100, 4), (33, 5)])
def test_ledger_and_history(crs, truth, strategy, budget, k):
    rep = run(RunConfig(budget, k, strategy, 0.85, seed=2), crs, sim(truth, 0.85, 2))
    asked = [c for r in rep.rounds for c in r.selected]
    assert len(asked) == len(set(asked))
    costs = cost_table(crs)
    share, rem = divmod(budget, k)
    spent = carry = 0
    for r in rep.rounds:
        assert r.spent + r.remaining == budget
        assert r.round_budget == share + carry + (rem if r.index == k - 1 else 0)
        assert sum(r.costs.values()) <= r.round_budget
        assert r.costs == {c: costs[c] for c in r.selected}
        spent += sum(r.costs.values())
        carry = r.round_budget - sum(r.costs.values())
        assert r.spent == spent
        assert r.entropy_after == pytest.approx(entropy(r.distribution), abs=1e-12)
        assert [a["corr_id"] for a in r.answers] == r.selected
    assert rep.spent <= budget
    traj = rep.entropy_trajectory()
    assert traj[0] == (0, pytest.approx(entropy([0.55, 0.25, 0.20])))
    for prev, cur in zip(rep.rounds, rep.rounds[1:]):
        assert cur.entropy_before == pytest.approx(prev.entropy_after)


def test_stop_conditions(crs, truth):
    rep = run(RunConfig(1000, 10, "greedy", 0.9), crs, sim(truth, 0.9))
    assert rep.stop_reason in {"all correspondences asked", "distribution resolved", "budget exhausted"}
    # one unit-cost question per round; the first hard answer already drops below the threshold
    rep = run(RunConfig(10, 10, "greedy", 0.9, stop_entropy=0.9), toy_crs(cost=1), sim(truth, 1.0))
    assert rep.stop_reason == "entropy threshold reached"
    assert len(rep.rounds) == 1 and rep.rounds[-1].entropy_after <= 0.9
    rep = run(RunConfig(1000, 10, "random", 0.9), crs, sim(truth, 0.9))
    assert rep.stop_reason == "all correspondences asked"
    assert sorted(c for r in rep.rounds for c in r.selected) == list(TOY_IDS)


def test_requery_allowed(crs, truth):
    rep = run(RunConfig(1000, 4, "random", 0.9, allow_requery=True), crs, sim(truth, 0.9))
    asked = [c for r in rep.rounds for c in r.selected]
    assert len(asked) > len(set(asked))


class Flaky(SequentialMixin):
    def __init__(self, inner, bad):
        self.inner, self.bad = inner, bad

    def verify(self, c):
        if c.id in self.bad:
            raise TranscriptMiss(f"no entry for {c.id}")
        return self.inner.verify(c)


def test_oracle_error_policy(crs, truth):
    oracle = Flaky(sim(truth, 0.9), {"c3", "c5"})
    with pytest.raises(OracleError):
        run(RunConfig(1000, 1, "random", 0.9), crs, oracle)
    rep = run(RunConfig(1000, 1, "random", 0.9, on_oracle_error="skip"), crs, oracle)
    r = rep.rounds[0]
    assert sorted(r.skipped) == ["c3", "c5"]
    answered = [a["corr_id"] for a in r.answers]
    assert set(answered) == set(TOY_IDS) - {"c3", "c5"}
    # skipped correspondences are not charged
    assert r.spent == sum(cost_table(crs)[c] for c in answered)


def test_event_stream(crs, truth):
    buf = io.StringIO()
    rep = run(RunConfig(100, 2, "greedy", 0.9), crs, sim(truth, 0.9), events=buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert len(lines) == sum(len(r.answers) for r in rep.rounds)
    assert {"round", "corr_id", "verdict", "confidence", "cost", "entropy"} <= set(lines[0])


def test_report_round_trip(tmp_path, crs, truth):
    rep = run(RunConfig(50, 2, "greedy", 0.9), crs, sim(truth, 0.9))
    path = tmp_path / "r.json"
    rep.save(path)
    again = RunReport.load(path)
    assert again == rep
    assert again.dumps() == path.read_text()


def test_config_validation():
    for bad in (dict(total_budget=-1), dict(total_budget=1, rounds_k=0), dict(total_budget=1, planning_accuracy=0.5),
                dict(total_budget=1, strategy="best"), dict(total_budget=1, on_oracle_error="retry")):
        with pytest.raises(MalformedInput):
            RunConfig(**bad)


def test_realized_drop_tracks_expected_reduction():
    """Truth drawn from the prior, oracle accuracy equal to the planning accuracy."""
    crs = toy_crs(cost=1)
    rng = np.random.default_rng(0)
    drops, planned = [], set()
    for seed in range(600):
        v = int(rng.choice(3, p=[0.55, 0.25, 0.20]))
        truth = GroundTruth.for_crs(crs, [c for c, bit in zip(TOY_IDS, TOY_ROWS[v]) if bit])
        rep = run(RunConfig(2, 1, "greedy", 0.8, seed=seed), crs, sim(truth, 0.8, seed))
        r = rep.rounds[0]
        drops.append(r.entropy_before - r.entropy_after)
        planned.add(round(r.expected_reduction, 12))
    assert len(planned) == 1
    assert abs(np.mean(drops) - planned.pop()) <= 0.05


def test_synthetic_fixture_run_is_consistent():
    crs, gt = make_fixture(5)
    vs = build_view_set(crs)
    total = sum(cost_table(crs).values())
    rep = run(RunConfig(total, 4, "greedy", 0.918, seed=1), crs, sim(gt, 0.918, 1))
    assert rep.spent <= total
    assert len(rep.final_distribution) == vs.n_views
    assert sorted(rep.final_ranking) == sorted(s.id for s in crs.candidates)
