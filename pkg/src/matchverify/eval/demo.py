"""Small name-based matcher ensemble that turns two schemas into a demo CRS.

Each matcher scores attribute pairs, keeps those above its threshold and
reduces them to a one-to-one matching greedily by score. Distinct non-empty
matchings become equally likely candidates.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Callable, Sequence

from ..errors import DegenerateSchemas, MalformedInput
from ..model import AttributeRef, CandidateResult, CandidateResultSet, Correspondence


@dataclass(frozen=True)
class Schema:
    name: str
    attributes: tuple[tuple[str, tuple[str, ...]], ...]  # (name, sample values)

    @classmethod
    def of(cls, name: str, attrs: dict[str, Sequence[str]] | Sequence[str]) -> Schema:
        if isinstance(attrs, dict):
            items = tuple((k, tuple(v)) for k, v in attrs.items())
        else:
            items = tuple((a, ()) for a in attrs)
        return cls(name, items)

    @property
    def names(self) -> list[str]:
        return [a for a, _ in self.attributes]


def _norm(name: str) -> str:
    return re.sub(r"[^0-9a-z]", "", name.casefold())


def _grams(s: str, n: int = 3) -> set[str]:
    s = f"##{_norm(s)}##"
    return {s[i : i + n] for i in range(len(s) - n + 1)}


def levenshtein(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _exact(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


def _casefold(a: str, b: str) -> float:
    return 1.0 if _norm(a) and _norm(a) == _norm(b) else 0.0


def _prefix(a: str, b: str) -> float:
    x, y = sorted((_norm(a), _norm(b)), key=len)
    return len(x) / len(y) if len(x) >= 2 and y.startswith(x) else 0.0


def _jaccard(a: str, b: str) -> float:
    ga, gb = _grams(a), _grams(b)
    return len(ga & gb) / len(ga | gb) if ga | gb else 0.0


def _edit(a: str, b: str) -> float:
    x, y = _norm(a), _norm(b)
    if not x or not y:
        return 0.0
    return 1.0 - levenshtein(x, y) / max(len(x), len(y))


MATCHERS: tuple[tuple[str, Callable[[str, str], float], float], ...] = (
    ("exact-name", _exact, 1.0),
    ("casefold-name", _casefold, 1.0),
    ("prefix", _prefix, 1e-9),
    ("trigram-0.5", _jaccard, 0.5),
    ("trigram-0.3", _jaccard, 0.3),
    ("edit-0.8", _edit, 0.8),
    ("edit-0.6", _edit, 0.6),
)


def _one_to_one(scored: list[tuple[float, int, int]], rng: random.Random) -> frozenset[tuple[int, int]]:
    rng.shuffle(scored)  # seeded order among equal scores
    scored.sort(key=lambda t: -t[0])
    used_s: set[int] = set()
    used_t: set[int] = set()
    out = set()
    for _, i, j in scored:
        if i not in used_s and j not in used_t:
            out.add((i, j))
            used_s.add(i)
            used_t.add(j)
    return frozenset(out)


def gen_demo_crs(source: Schema, target: Schema, seed: int = 0) -> CandidateResultSet:
    if len(source.attributes) < 2 or len(target.attributes) < 2:
        raise MalformedInput("both schemas need at least two attributes")
    rng = random.Random(seed)
    matchings: list[frozenset[tuple[int, int]]] = []
    for _, score, threshold in MATCHERS:
        scored = []
        for i, (a, _) in enumerate(source.attributes):
            for j, (b, _) in enumerate(target.attributes):
                s = score(a, b)
                if s >= threshold and s > 0:
                    scored.append((s, i, j))
        m = _one_to_one(scored, rng)
        if m and m not in matchings:
            matchings.append(m)
    if not matchings:
        raise DegenerateSchemas(f"no matcher relates any attribute of {source.name} to {target.name}")

    pairs = sorted(set().union(*matchings))
    ids = {p: f"c{k + 1}" for k, p in enumerate(pairs)}
    corrs = tuple(
        Correspondence(
            ids[(i, j)],
            (AttributeRef("source", source.attributes[i][0], source.attributes[i][1]),),
            (AttributeRef("target", target.attributes[j][0], target.attributes[j][1]),),
        )
        for i, j in pairs
    )
    p = 1.0 / len(matchings)
    cands = tuple(CandidateResult(f"s{k + 1}", frozenset(ids[x] for x in m), p) for k, m in enumerate(matchings))
    return CandidateResultSet(source.name, target.name, corrs, cands)


EMPLOYEE = Schema.of(
    "Employee",
    {
        "ID": ["1001", "1002", "1003"],
        "Name": ["Ann Lee", "Bo Chan", "Cy Diaz"],
        "Email": ["ann@x.com", "bo@x.com", "cy@x.com"],
        "Address": ["1 Main St", "2 Oak Ave", "3 Elm Rd"],
        "Age": ["34", "41", "29"],
        "Gender": ["F", "M", "M"],
    },
)

EMPLOYEE_INFO = Schema.of(
    "EmployeeInfo",
    {
        "EmployeeID": ["1001", "1002", "1003"],
        "First Name": ["Ann", "Bo", "Cy"],
        "Last Name": ["Lee", "Chan", "Diaz"],
        "Email Address": ["ann@x.com", "bo@x.com", "cy@x.com"],
        "Home Address": ["1 Main St", "2 Oak Ave", "3 Elm Rd"],
        "Years of Experience": ["10", "18", "5"],
        "Sex": ["F", "M", "M"],
    },
)
