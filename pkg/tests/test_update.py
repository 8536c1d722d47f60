import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matchverify.errors import InconsistentAnswer, MalformedInput
from matchverify.objective import AnswerFamily, entropy
from matchverify.oracle.base import Answer
from matchverify.update import apply_answer, apply_answers, apply_family

from . import reference as ref
from .conftest import random_view_set


def ans(cid, verdict, conf):
    return Answer(cid, verdict, conf, "simulated")


def test_worked_posterior(vs):
    post = apply_answer(vs, ans("c4", True, 0.8))
    np.testing.assert_allclose(post.probabilities, [0.647, 0.294, 0.059], atol=5e-4)
    assert entropy(post.probabilities) == pytest.approx(0.809, abs=1e-3)
    # the input is untouched and view order is kept
    assert vs.probabilities.tolist() == pytest.approx([0.55, 0.25, 0.20])
    assert post.candidate_ids == vs.candidate_ids


def test_half_confidence_is_a_no_op(vs):
    post = apply_answer(vs, ans("c3", False, 0.5))
    np.testing.assert_allclose(post.probabilities, vs.probabilities, atol=1e-15)


def test_hard_evidence_zeroes_a_view(vs):
    post = apply_answer(vs, ans("c4", True, 1.0))
    assert post.probabilities[2] == 0.0
    np.testing.assert_allclose(post.probabilities[:2], [0.55 / 0.8, 0.25 / 0.8])
    assert entropy(post.probabilities) <= entropy(vs.probabilities)


def test_contradiction_raises(vs):
    with pytest.raises(InconsistentAnswer):
        apply_answer(vs, ans("c6", False, 1.0))


def test_bad_confidence_rejected(vs):
    class Raw:
        corr_id, verdict, confidence = "c1", True, 0.3

    with pytest.raises(MalformedInput):
        apply_answer(vs, Raw())


def test_family_of_one_matches_single_answer(vs):
    a = apply_answer(vs, ans("c3", True, 0.7))
    b = apply_family(vs, AnswerFamily(("c3",), (True,), (0.7,)))
    assert a == b


def test_two_hard_answers_pick_out_v1(vs):
    post = apply_family(vs, AnswerFamily(("c3", "c4"), (True, True), (1.0, 1.0)))
    assert post.probabilities.tolist() == [1.0, 0.0, 0.0]


@given(st.integers(0, 2**32 - 1))
def test_sequential_equals_product_form_and_order_invariant(seed):
    rng = np.random.default_rng(seed)
    vs = random_view_set(rng)
    k = int(rng.integers(1, len(vs.correspondence_ids) + 1))
    ids = list(rng.choice(vs.correspondence_ids, size=k, replace=False))
    answers = [ans(c, bool(rng.random() < 0.5), float(rng.uniform(0.5, 0.99))) for c in ids]
    post = apply_answers(vs, answers)
    expect = ref.posterior(
        vs.probabilities,
        vs.truth_matrix,
        [(vs.index(a.corr_id), a.verdict, a.confidence) for a in answers],
    )
    np.testing.assert_allclose(post.probabilities, expect, atol=1e-12)
    assert post.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert (post.probabilities >= 0).all()
    perm = [answers[i] for i in rng.permutation(len(answers))]
    np.testing.assert_allclose(apply_answers(vs, perm).probabilities, post.probabilities, atol=1e-12)


def test_martingale_on_toy(vs):
    T = ["c1", "c3", "c5"]
    mix = np.zeros(vs.n_views)
    for bits in itertools.product((False, True), repeat=3):
        f = AnswerFamily(T, bits, (0.8, 0.8, 0.8))
        w = ref.posterior(vs.probabilities, vs.truth_matrix, [(vs.index(c), b, 0.8) for c, b in zip(T, bits)])
        lik = np.prod([np.where(vs.truth_matrix[:, vs.index(c)] == b, 0.8, 0.2) for c, b in zip(T, bits)], axis=0)
        pa = float(vs.probabilities @ lik)
        np.testing.assert_allclose(apply_family(vs, f).probabilities, w, atol=1e-12)
        mix += pa * w
    np.testing.assert_allclose(mix, vs.probabilities, atol=1e-9)
