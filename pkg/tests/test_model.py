import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matchverify.errors import MalformedInput, UnknownCorrespondence
from matchverify.model import (
    AttributeRef,
    CandidateResult,
    CandidateResultSet,
    ViewSet,
    build_view_set,
    crs_from_dict,
    crs_to_dict,
    dumps_json,
    load_crs,
    marginal_probability,
    save_crs,
    validate_crs,
)

from .conftest import DATA, TOY_PRIOR, TOY_ROWS, corr, toy_crs


def test_toy_crs_is_clean(crs):
    report = validate_crs(crs)
    assert report.ok, report.errors
    assert report.warnings == []


def test_probability_sum_error():
    bad = toy_crs().with_probabilities([0.5, 0.5, 0.5])
    report = validate_crs(bad)
    assert not report.ok
    assert any("distribution sums to 1.5" in e for e in report.errors)
    with pytest.raises(MalformedInput):
        report.raise_for_errors()


def test_rounding_level_sum_is_renormalized():
    crs = toy_crs().with_probabilities([0.55, 0.25, 0.2 + 5e-7])
    report = validate_crs(crs)
    assert report.ok
    assert any("renormalized" in w for w in report.warnings)
    assert sum(report.crs.probabilities) == pytest.approx(1.0, abs=1e-12)


def test_attribute_used_twice_in_one_candidate():
    base = toy_crs()
    extra = corr("c7", "Email", "Sex")
    cands = (CandidateResult("s1", frozenset({"c2", "c7"}), 1.0),)
    crs = CandidateResultSet("a", "b", base.correspondences + (extra,), cands)
    errors = validate_crs(crs).errors
    assert any("Email" in e and "more than one correspondence" in e for e in errors)


def test_composite_members_count_for_reuse():
    c1 = corr("c1", "Name", ["First Name", "Last Name"])
    c2 = corr("c2", "Nick", "Last Name")
    crs = CandidateResultSet("a", "b", (c1, c2), (CandidateResult("s1", frozenset({"c1", "c2"}), 1.0),))
    assert any("Last Name" in e for e in validate_crs(crs).errors)


def test_reference_and_coverage_errors():
    base = toy_crs()
    cands = (CandidateResult("s1", frozenset({"c1", "zz"}), 1.0),)
    errors = validate_crs(CandidateResultSet("a", "b", base.correspondences, cands)).errors
    assert any("zz" in e for e in errors)
    assert any("not used by any candidate" in e for e in errors)


def test_zero_cost_is_a_warning():
    base = toy_crs()
    corrs = (corr("c1", "ID", "EmployeeID", 0),) + base.correspondences[1:]
    report = validate_crs(CandidateResultSet("a", "b", corrs, base.candidates))
    assert report.ok
    assert any("cost" in w for w in report.warnings)


def test_duplicate_ids_and_blank_names():
    base = toy_crs()
    report = validate_crs(CandidateResultSet("a", "b", base.correspondences + base.correspondences[:1], base.candidates))
    assert any("c1" in e for e in report.errors)
    with pytest.raises(MalformedInput):
        AttributeRef("source", "   ")


def test_view_set_matches_table(vs):
    assert vs.correspondence_ids == ("c1", "c2", "c3", "c4", "c5", "c6")
    assert vs.truth_matrix.astype(int).tolist() == TOY_ROWS
    assert vs.probabilities.tolist() == pytest.approx(list(TOY_PRIOR))


def test_single_candidate_gives_all_true_row():
    base = toy_crs()
    keep = base.correspondences[:2]
    crs = CandidateResultSet("a", "b", keep, (CandidateResult("s1", frozenset({"c1", "c2"}), 1.0),))
    vs = build_view_set(crs)
    assert vs.n_views == 1
    assert vs.truth_matrix.all()


def test_duplicate_candidates_merge():
    base = toy_crs()
    same = frozenset({"c1", "c2"})
    cands = (
        CandidateResult("s1", same, 0.3),
        CandidateResult("s2", same, 0.2),
        CandidateResult("s3", frozenset({"c2"}), 0.5),
    )
    crs = CandidateResultSet("a", "b", base.correspondences[:2], cands)
    report = validate_crs(crs)
    assert report.ok and report.warnings
    vs = build_view_set(crs)
    assert vs.n_views == 2
    assert vs.probabilities.tolist() == pytest.approx([0.5, 0.5])
    assert vs.candidate_ids[0] == ("s1", "s2")


def test_zero_probability_rows_dropped():
    crs = toy_crs().with_probabilities([0.75, 0.25, 0.0])
    vs = build_view_set(crs)
    assert vs.n_views == 2
    assert (vs.probabilities > 0).all()


def test_build_rejects_invalid_input():
    with pytest.raises(MalformedInput):
        build_view_set(toy_crs().with_probabilities([0.5, 0.5, 0.5]))


def test_marginals(vs):
    assert marginal_probability(vs, "c5") == pytest.approx(0.25)
    assert marginal_probability(vs, "c4") == pytest.approx(0.80)
    assert marginal_probability(vs, "c6") == pytest.approx(1.0)
    with pytest.raises(UnknownCorrespondence):
        marginal_probability(vs, "c9")


def test_views_are_not_a_product_of_marginals(vs):
    # the per-literal product does not recover P(v1)
    literals = [marginal_probability(vs, c) if bit else 1 - marginal_probability(vs, c) for c, bit in zip(vs.correspondence_ids, TOY_ROWS[0])]
    assert abs(np.prod(literals) - 0.55) > 0.05


def test_view_set_is_read_only(vs):
    with pytest.raises(ValueError):
        vs.probabilities[0] = 1.0
    with pytest.raises(AttributeError):
        vs.correspondence_ids = ()


def test_view_set_rejects_bad_distribution():
    with pytest.raises(MalformedInput):
        ViewSet(["c1"], [[True], [False]], [0.7, 0.7])


def test_json_round_trip(tmp_path, crs):
    path = tmp_path / "crs.json"
    save_crs(crs, path)
    again = load_crs(path)
    assert again == crs
    text = path.read_text(encoding="utf-8")
    assert text == dumps_json(crs_to_dict(crs))
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_shipped_fixture_loads():
    crs = load_crs(DATA / "toy_crs.json")
    assert validate_crs(crs).ok
    assert build_view_set(crs) == build_view_set(toy_crs())


def test_loader_accepts_bare_names_and_missing_cost():
    d = {
        "source_schema": "a",
        "target_schema": "b",
        "correspondences": [{"id": "c1", "source_attrs": ["x"], "target_attrs": [{"name": "y", "values": ["1"]}]}],
        "candidates": [{"id": "s1", "correspondences": ["c1"], "probability": 1}],
    }
    crs = crs_from_dict(d)
    assert crs.correspondences[0].cost is None
    assert crs.correspondences[0].target_attrs[0].sample_values == ("1",)
    with pytest.raises(MalformedInput):
        crs_from_dict({"source_schema": "a"})


@st.composite
def crs_strategy(draw):
    n = draw(st.integers(2, 6))
    corrs = tuple(corr(f"c{j}", f"s{j}", f"t{j}", draw(st.one_of(st.none(), st.integers(0, 50)))) for j in range(n))
    rows = draw(st.lists(st.frozensets(st.sampled_from([c.id for c in corrs]), min_size=1), min_size=1, max_size=5, unique=True))
    used = set().union(*rows)
    corrs = tuple(c for c in corrs if c.id in used)
    w = draw(st.lists(st.integers(1, 20), min_size=len(rows), max_size=len(rows)))
    cands = tuple(CandidateResult(f"s{k}", r, x / sum(w)) for k, (r, x) in enumerate(zip(rows, w)))
    return CandidateResultSet("src", "tgt", corrs, cands)


@given(crs_strategy())
def test_round_trip_property(crs):
    again = crs_from_dict(json.loads(dumps_json(crs_to_dict(crs))))
    assert again == crs
    assert build_view_set(again) == build_view_set(crs)


@given(crs_strategy())
def test_marginal_complement(crs):
    vs = build_view_set(crs)
    for j, c in enumerate(vs.correspondence_ids):
        neg = float(vs.probabilities[~vs.truth_matrix[:, j]].sum())
        assert marginal_probability(vs, c) + neg == pytest.approx(1.0, abs=1e-12)
