"""Seeded synthetic schema pairs with noisy candidate matchings and ground truth.

A fixture has a hidden one-to-one matching between ``n_pairs`` source and
target attributes plus a few unmatched attributes on each side. Every
candidate imitates one matcher run: it copies the true matching, then with
its own error rate swaps some pairs for a fixed set of plausible decoys,
drops pairs, or adds a spurious link between unmatched attributes. Decoys
are shared between candidates, so the correspondence union stays compact the
way real ensemble output does.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..model import AttributeRef, CandidateResult, CandidateResultSet, Correspondence, ViewSet
from ..truth import GroundTruth

WORDS = (
    "account", "address", "amount", "balance", "birth", "branch", "city", "code",
    "company", "country", "created", "currency", "customer", "date", "department",
    "discount", "email", "employee", "gender", "grade", "invoice", "item", "label",
    "manager", "name", "number", "order", "owner", "phone", "price", "product",
    "quantity", "rating", "region", "salary", "score", "status", "street", "supplier",
    "title", "total", "type", "updated", "vendor", "weight", "year", "zip",
)


@dataclass(frozen=True)
class FixtureConfig:
    n_pairs: int = 10
    extra_source: int = 2
    extra_target: int = 2
    n_candidates: tuple[int, int] = (5, 12)
    error_rate: tuple[float, float] = (0.05, 0.35)
    decoy_fraction: float = 0.5
    # plant the exact true matching as one of the candidates
    include_truth: bool = False


def _abbrev(word: str, rng: random.Random) -> str:
    style = rng.randrange(3)
    if style == 0:
        return word[:4].upper()
    if style == 1:
        return word.capitalize()
    return word[0] + "".join(ch for ch in word[1:] if ch not in "aeiou")


def _values(word: str, rng: random.Random) -> tuple[str, ...]:
    return tuple(f"{word[:3]}{rng.randrange(100, 999)}" for _ in range(3))


def make_fixture(seed: int, cfg: FixtureConfig = FixtureConfig(), name: str | None = None) -> tuple[CandidateResultSet, GroundTruth]:
    rng = random.Random(seed)
    n = cfg.n_pairs
    words = rng.sample(WORDS, n + cfg.extra_source + cfg.extra_target)
    src_words = words[: n + cfg.extra_source]
    tgt_words = words[:n] + words[n + cfg.extra_source :]
    src = [AttributeRef("source", f"src_{w}", _values(w, rng)) for w in src_words]
    tgt = [AttributeRef("target", _abbrev(w, rng), _values(w, rng)) for w in tgt_words]
    # disambiguate accidental name clashes on the target side
    seen: dict[str, int] = {}
    for j, t in enumerate(tgt):
        k = seen.get(t.name, 0)
        seen[t.name] = k + 1
        if k:
            tgt[j] = AttributeRef("target", f"{t.name}{k + 1}", t.sample_values)

    truth = [(i, i) for i in range(n)]
    # every true pair with a decoy gets one fixed wrong target
    decoy: dict[int, int] = {}
    for i in rng.sample(range(n), max(1, round(cfg.decoy_fraction * n))):
        choices = [j for j in range(len(tgt)) if j != i]
        decoy[i] = rng.choice(choices)
    extra_links = [(i, j) for i in range(n, len(src)) for j in range(n, len(tgt))]
    spurious = rng.sample(extra_links, min(2, len(extra_links)))

    lo, hi = cfg.n_candidates
    want = rng.randint(lo, hi)
    matchings: list[frozenset[tuple[int, int]]] = []
    if cfg.include_truth:
        matchings.append(frozenset(truth))
    for _ in range(50 * want):
        if len(matchings) == want:
            break
        err = rng.uniform(*cfg.error_rate)
        pairs: dict[int, int] = {}
        for i, j in truth:
            roll = rng.random()
            if i in decoy and roll < err:
                pairs[i] = decoy[i]
            elif roll < err * 1.3:
                continue  # missed
            else:
                pairs[i] = j
        for i, j in spurious:
            if rng.random() < err:
                pairs[i] = j
        # keep it one-to-one: a target claimed twice goes to the first claimant
        used: set[int] = set()
        clean = set()
        for i in sorted(pairs):
            if pairs[i] not in used:
                used.add(pairs[i])
                clean.add((i, pairs[i]))
        m = frozenset(clean)
        if m and m not in matchings:
            matchings.append(m)

    links = sorted(set().union(*matchings))
    ids = {p: f"c{k + 1}" for k, p in enumerate(links)}
    corrs = tuple(Correspondence(ids[(i, j)], (src[i],), (tgt[j],)) for i, j in links)
    if cfg.include_truth:
        # shuffle so the planted candidate does not always come first
        rng.shuffle(matchings)
    p = 1.0 / len(matchings)
    cands = tuple(CandidateResult(f"s{k + 1}", frozenset(ids[x] for x in m), p) for k, m in enumerate(matchings))
    label = name or f"synth{seed}"
    crs = CandidateResultSet(f"{label}_source", f"{label}_target", corrs, cands)
    gt = GroundTruth.for_crs(crs, [ids[p] for p in truth if p in ids])
    # also list true pairs no candidate proposed, so recall is measured honestly
    missing = frozenset((tuple([src[i].name]), tuple([tgt[j].name])) for i, j in truth if (i, j) not in ids)
    gt = GroundTruth(gt.matches | missing, gt.non_matches)
    return crs, gt


def fixture_suite(n: int = 8, base_seed: int = 1000, cfg: FixtureConfig = FixtureConfig()) -> list[tuple[str, CandidateResultSet, GroundTruth]]:
    out = []
    for k in range(n):
        name = f"synth{k}"
        crs, gt = make_fixture(base_seed + k, cfg, name)
        out.append((name, crs, gt))
    return out


def bench_view_set(n_corr: int = 20, n_views: int = 8, seed: int = 0) -> ViewSet:
    """Random view set whose columns are informative and pairwise non-exchangeable.

    Distinct columns (also up to complement) keep the exact evaluator from
    collapsing them, so subset enumeration costs what it would on real data.
    """
    if n_corr > 2 ** (n_views - 1) - 1:
        raise ValueError(f"{n_views} views cannot hold {n_corr} distinct informative columns")
    rng = np.random.default_rng(seed)
    cols: list[np.ndarray] = []
    seen: set[bytes] = set()
    while len(cols) < n_corr:
        col = rng.random(n_views) < 0.5
        if col.all() or not col.any():
            continue
        key = (col if col[0] else ~col).tobytes()
        if key in seen:
            continue
        seen.add(key)
        cols.append(col)
    probs = rng.dirichlet(np.full(n_views, 2.0))
    ids = tuple(f"c{k + 1}" for k in range(n_corr))
    return ViewSet(ids, np.stack(cols, axis=1), probs)
