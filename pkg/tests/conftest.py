from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from matchverify.model import (
    AttributeRef,
    CandidateResult,
    CandidateResultSet,
    Correspondence,
    ViewSet,
    build_view_set,
)
from matchverify.truth import GroundTruth

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

DATA = Path(__file__).resolve().parent.parent / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"

# v1 = {c1,c2,c3,c4,c6}, v2 = {c1,c2,c4,c5,c6}, v3 = {c2,c3,c6}
TOY_ROWS = [
    [1, 1, 1, 1, 0, 1],
    [1, 1, 0, 1, 1, 1],
    [0, 1, 1, 0, 0, 1],
]
TOY_PRIOR = (0.55, 0.25, 0.20)
TOY_IDS = ("c1", "c2", "c3", "c4", "c5", "c6")


def attr(side, name, *values):
    return AttributeRef(side, name, tuple(values))


def corr(cid, src, tgt, cost=None):
    s = tuple(attr("source", n) for n in ([src] if isinstance(src, str) else src))
    t = tuple(attr("target", n) for n in ([tgt] if isinstance(tgt, str) else tgt))
    return Correspondence(cid, s, t, cost)


def toy_crs(cost=None) -> CandidateResultSet:
    corrs = (
        corr("c1", "ID", "EmployeeID", cost),
        corr("c2", "Email", "Email Address", cost),
        corr("c3", "Name", "First Name", cost),
        corr("c4", "Address", "Home Address", cost),
        corr("c5", "Name", "Last Name", cost),
        corr("c6", "Gender", "Sex", cost),
    )
    cands = tuple(
        CandidateResult(f"s{k + 1}", frozenset(c for c, bit in zip(TOY_IDS, row) if bit), p)
        for k, (row, p) in enumerate(zip(TOY_ROWS, TOY_PRIOR))
    )
    return CandidateResultSet("Employee", "EmployeeInfo", corrs, cands)


@pytest.fixture
def crs():
    return toy_crs()


@pytest.fixture
def vs():
    return build_view_set(toy_crs())


@pytest.fixture
def truth():
    return GroundTruth.for_crs(toy_crs(), ["c1", "c2", "c3", "c4", "c6"])


def random_view_set(rng: np.random.Generator, max_views=6, max_corr=8, min_views=2) -> ViewSet:
    """Random view set with distinct rows; columns may repeat or be constant."""
    n_v = int(rng.integers(min_views, max_views + 1))
    n_c = int(rng.integers(max(2, int(np.ceil(np.log2(n_v)))), max_corr + 1))
    while True:
        m = rng.random((n_v, n_c)) < 0.5
        if len({r.tobytes() for r in m}) == n_v:
            break
    p = rng.dirichlet(np.ones(n_v))
    return ViewSet([f"c{j + 1}" for j in range(n_c)], m, p)


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    lines = getattr(test_acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
