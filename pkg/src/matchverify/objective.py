"""Entropy of a view set and the expected reduction from noisy verdicts.

Verdicts are modelled as a noisy channel: the oracle answers a correspondence
correctly with probability ``p`` (its accuracy or confidence), independently
across correspondences given the true view. Everything is in nats.

The exact objective enumerates answer families. Two observations keep this
cheap without changing the value:

* a correspondence with the same truth value in every live view carries no
  information and is dropped;
* correspondences whose columns are equal (or complementary) and that share
  an accuracy are exchangeable, so only the number of "agrees with the column"
  answers in each such group matters. Families are enumerated per group count
  with binomial multiplicities.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, Mapping, Sequence, Union

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import CapExceeded, MalformedDistribution, MalformedInput
from .model import ViewSet

DEFAULT_EXACT_CAP = 16


@dataclass(frozen=True)
class AnswerFamily:
    """Joint verdicts for an ordered set of correspondences."""

    corr_ids: tuple[str, ...]
    verdicts: tuple[bool, ...]
    confidences: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "corr_ids", tuple(self.corr_ids))
        object.__setattr__(self, "verdicts", tuple(bool(v) for v in self.verdicts))
        object.__setattr__(self, "confidences", tuple(float(c) for c in self.confidences))
        if not (len(self.corr_ids) == len(self.verdicts) == len(self.confidences)):
            raise MalformedInput("answer family vectors must have equal length")
        for c in self.confidences:
            if not 0.5 <= c <= 1.0:
                raise MalformedInput(f"confidence {c} outside [0.5, 1.0]")


@dataclass(frozen=True)
class PlanningAccuracy:
    """Assumed oracle accuracy used when predicting information gain."""

    default: float = 0.9
    per_correspondence: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for v in (self.default, *self.per_correspondence.values()):
            if not 0.5 < v <= 1.0:
                raise MalformedInput(f"planning accuracy {v} must lie in (0.5, 1.0]")

    def of(self, corr_id: str) -> float:
        return float(self.per_correspondence.get(corr_id, self.default))


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 4096
    seed: int = 0


# "auto" evaluates exactly up to the cap and samples beyond it with a seed
# derived from the evaluator seed and the selected set
Mode = Union[Literal["exact", "auto"], MonteCarlo]


def entropy(probabilities: Iterable[float]) -> float:
    p = np.asarray(list(probabilities) if not isinstance(probabilities, np.ndarray) else probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise MalformedDistribution("entropy needs a non-empty vector of non-negative probabilities")
    if abs(p.sum() - 1.0) > 1e-9:
        raise MalformedDistribution(f"probabilities sum to {p.sum():.12g}, not 1")
    return float(-xlogy(p, p).sum())


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def _as_accuracy(acc: PlanningAccuracy | float) -> PlanningAccuracy:
    return acc if isinstance(acc, PlanningAccuracy) else PlanningAccuracy(float(acc))


def answer_likelihood(vs: ViewSet, view: int, family: AnswerFamily) -> float:
    """P(family | view) under conditionally independent noisy verdicts."""
    row = vs.truth_matrix[view]
    out = 1.0
    for cid, verdict, conf in zip(family.corr_ids, family.verdicts, family.confidences):
        out *= conf if row[vs.index(cid)] == verdict else 1.0 - conf
    return out


def family_probability(vs: ViewSet, family: AnswerFamily) -> float:
    cols = vs.indices(family.corr_ids)
    verdicts = np.array(family.verdicts, dtype=bool)
    conf = np.array(family.confidences, dtype=float)
    agree = vs.truth_matrix[:, cols] == verdicts[None, :]
    lik = np.where(agree, conf[None, :], 1.0 - conf[None, :]).prod(axis=1)
    return float(vs.probabilities @ lik)


def derive_seed(*parts: object) -> int:
    h = hashlib.sha256("|".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "big")


@dataclass(frozen=True)
class _State:
    lik: np.ndarray | None  # families x views; None once past the exact cap
    noise: float
    n_inf: int
    ids: tuple[str, ...]


class InformationObjective:
    """Evaluates ``-H(V | answers to T)`` for many sets ``T`` over one view set.

    Values for sets with the same group signature are cached, which is what
    makes repeated evaluation inside the selection algorithms affordable.
    """

    def __init__(
        self,
        vs: ViewSet,
        acc: PlanningAccuracy | float = 0.9,
        mode: Mode = "exact",
        exact_cap: int = DEFAULT_EXACT_CAP,
        seed: int = 0,
        cache_size: int = 1 << 16,
    ) -> None:
        self.vs = vs
        self.acc = _as_accuracy(acc)
        self.mode = mode
        self.exact_cap = exact_cap
        self.seed = seed
        self.calls = 0

        live = vs.probabilities > 0
        self._p = vs.probabilities[live]
        self._logp = np.log(self._p)
        truth = vs.truth_matrix[live]
        self._truth = truth
        self.prior_entropy = float(-xlogy(self._p, self._p).sum())

        # group key per correspondence; None when uninformative
        classes: dict[bytes, int] = {}
        self._patterns: list[np.ndarray] = []
        self._key: dict[str, tuple[int, float] | None] = {}
        for j, cid in enumerate(vs.correspondence_ids):
            col = truth[:, j]
            if col.all() or not col.any():
                self._key[cid] = None
                continue
            canon = col if col[0] else ~col
            b = canon.tobytes()
            if b not in classes:
                classes[b] = len(self._patterns)
                self._patterns.append(canon)
            self._key[cid] = (classes[b], self.acc.of(cid))
        self._blocks: dict[tuple[int, float, int], tuple[np.ndarray, np.ndarray]] = {}
        self._exact_cached = lru_cache(maxsize=cache_size)(self._exact_signature)

    # -- helpers -----------------------------------------------------------

    def key(self, corr_id: str) -> tuple[int, float] | None:
        try:
            return self._key[corr_id]
        except KeyError:
            self.vs.index(corr_id)  # raises UnknownCorrespondence
            raise

    def informative(self, corr_id: str) -> bool:
        return self.key(corr_id) is not None

    def signature(self, corr_ids: Iterable[str]) -> tuple[tuple[tuple[int, float], int], ...]:
        counts: dict[tuple[int, float], int] = {}
        for cid in corr_ids:
            k = self.key(cid)
            if k is not None:
                counts[k] = counts.get(k, 0) + 1
        return tuple(sorted(counts.items()))

    # -- evaluation --------------------------------------------------------

    def value(self, corr_ids: Iterable[str]) -> float:
        """``-H(V | AS^T)`` in nats (always <= 0)."""
        ids = list(corr_ids)
        self.calls += 1
        sig = self.signature(ids)
        n_inf = sum(m for _, m in sig)
        if n_inf == 0 or self._p.size <= 1:
            return -self.prior_entropy
        mode = self.mode
        if isinstance(mode, MonteCarlo):
            return self._monte_carlo(sig, mode.samples, mode.seed)
        if n_inf > self.exact_cap:
            if mode == "exact":
                raise CapExceeded(
                    f"{n_inf} informative correspondences exceed the exact cap of {self.exact_cap}; "
                    "use Monte Carlo mode"
                )
            return self._monte_carlo(sig, MonteCarlo().samples, derive_seed(self.seed, sorted(ids)))
        return self._exact_cached(sig)

    def reduction(self, corr_ids: Iterable[str]) -> float:
        return self.prior_entropy + self.value(corr_ids)

    def _block(self, cls: int, p: float, m: int) -> tuple[np.ndarray, np.ndarray]:
        key = (cls, p, m)
        hit = self._blocks.get(key)
        if hit is None:
            k = np.arange(m + 1, dtype=float)
            agree = p**k * (1.0 - p) ** (m - k)
            disagree = (1.0 - p) ** k * p ** (m - k)
            block = np.where(self._patterns[cls][None, :], agree[:, None], disagree[:, None])
            binom = np.array([math.comb(m, i) for i in range(m + 1)], dtype=float)
            hit = self._blocks[key] = (block, binom)
        return hit

    def _exact_signature(self, sig: tuple[tuple[tuple[int, float], int], ...]) -> float:
        # -H(V|A) = H(A) - H(V) - H(A|V), and H(A|V) is the sum of the
        # per-verdict binary entropies because verdicts are independent given v
        n_views = self._p.size
        lik = np.ones((1, n_views))
        weight = np.ones(1)
        noise = 0.0
        for (cls, p), m in sig:
            block, binom = self._block(cls, p, m)
            lik = (lik[:, None, :] * block[None, :, :]).reshape(-1, n_views)
            weight = np.multiply.outer(weight, binom).reshape(-1)
            noise += m * _binary_entropy(p)
        pa = lik @ self._p
        h_answers = -float(weight @ xlogy(pa, pa))
        return min(0.0, max(-self.prior_entropy, h_answers - self.prior_entropy - noise))

    # -- incremental evaluation (depth-first enumeration) -----------------

    def root(self) -> _State:
        return _State(np.ones((1, self._p.size)), 0.0, 0, ())

    def extend(self, state: _State, corr_id: str) -> _State:
        """State for ``state`` plus one correspondence, over all 2^k families."""
        ids = (*state.ids, corr_id)
        key = self.key(corr_id)
        if key is None:
            return _State(state.lik, state.noise, state.n_inf, ids)
        if state.lik is None or state.n_inf + 1 > self.exact_cap:
            return _State(None, 0.0, state.n_inf + 1, ids)
        cls, p = key
        q = np.where(self._patterns[cls], p, 1.0 - p)
        lik = np.concatenate((state.lik * q, state.lik * (1.0 - q)))
        return _State(lik, state.noise + _binary_entropy(p), state.n_inf + 1, ids)

    def state_value(self, state: _State) -> float:
        if state.lik is None:
            return self.value(state.ids)
        self.calls += 1
        if state.n_inf == 0 or self._p.size <= 1:
            return -self.prior_entropy
        pa = state.lik @ self._p
        h_answers = -float(xlogy(pa, pa).sum())
        return min(0.0, max(-self.prior_entropy, h_answers - self.prior_entropy - state.noise))

    def _monte_carlo(self, sig, samples: int, seed: int) -> float:
        rng = np.random.default_rng(seed)
        cols: list[np.ndarray] = []
        accs: list[float] = []
        for (cls, p), m in sig:
            cols.extend([self._patterns[cls]] * m)
            accs.extend([p] * m)
        truth = np.stack(cols, axis=1)  # views x items
        acc = np.array(accs)
        views = rng.choice(self._p.size, size=samples, p=self._p)
        correct = rng.random((samples, acc.size)) < acc[None, :]
        answers = np.where(correct, truth[views], ~truth[views])
        agree = answers[:, None, :] == truth[None, :, :]
        with np.errstate(divide="ignore"):
            loglik = np.where(agree, np.log(acc), np.log1p(-acc)).sum(axis=2)
        joint = loglik + self._logp[None, :]
        # posterior neg-entropy per sampled family, averaged
        with np.errstate(invalid="ignore", divide="ignore"):
            lpa = logsumexp(joint, axis=1)
            post = joint - lpa[:, None]
            ent = np.where(np.isfinite(post), np.exp(post) * post, 0.0).sum(axis=1)
        return float(ent.mean())


def _check_nonempty(T: Sequence[str]) -> None:
    if len(T) == 0:
        raise MalformedInput("the selected correspondence set must be non-empty")


def neg_conditional_entropy(
    vs: ViewSet,
    T: Iterable[str],
    acc: PlanningAccuracy | float = 0.9,
    mode: Mode = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> float:
    ids = list(T)
    _check_nonempty(ids)
    return InformationObjective(vs, acc, mode, exact_cap).value(ids)


def expected_reduction(
    vs: ViewSet,
    T: Iterable[str],
    acc: PlanningAccuracy | float = 0.9,
    mode: Mode = "exact",
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> float:
    """Expected entropy drop ``H(V) - H(V | AS^T)``; zero for an empty set."""
    ids = list(T)
    obj = InformationObjective(vs, acc, mode, exact_cap)
    if not ids:
        return 0.0
    return obj.reduction(ids)


def enumerate_families(T: Sequence[str], acc: PlanningAccuracy | float) -> Iterable[AnswerFamily]:
    """All 2^|T| answer families for ``T``, in binary counting order."""
    a = _as_accuracy(acc)
    conf = tuple(a.of(c) for c in T)
    for bits in itertools.product((False, True), repeat=len(T)):
        yield AnswerFamily(tuple(T), bits, conf)
