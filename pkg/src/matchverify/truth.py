"""Ground-truth attribute pairs, shared by the simulated oracle and the metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import GroundTruthMissing, MalformedInput
from .model import CandidateResultSet, Correspondence

PairKey = tuple[tuple[str, ...], tuple[str, ...]]


def pair_key(source: Sequence[str], target: Sequence[str]) -> PairKey:
    return (tuple(sorted(source)), tuple(sorted(target)))


@dataclass(frozen=True)
class GroundTruth:
    """Matched (and optionally known-unmatched) attribute-set pairs.

    With ``closed_world`` every pair not listed as a match is a non-match;
    otherwise asking about an unlisted pair raises ``GroundTruthMissing``.
    """

    matches: frozenset[PairKey]
    non_matches: frozenset[PairKey] = frozenset()
    closed_world: bool = False

    def __post_init__(self) -> None:
        overlap = self.matches & self.non_matches
        if overlap:
            raise MalformedInput(f"pairs listed as both match and non-match: {sorted(overlap)}")

    def verdict(self, c: Correspondence) -> bool:
        key = c.pair_key
        if key in self.matches:
            return True
        if key in self.non_matches or self.closed_world:
            return False
        raise GroundTruthMissing(f"ground truth has no verdict for {c.id} ({c.label()})")

    def __contains__(self, key: object) -> bool:
        return key in self.matches

    def __len__(self) -> int:
        return len(self.matches)

    @classmethod
    def from_entries(cls, entries: Iterable[Any], closed_world: bool = False) -> GroundTruth:
        pos, neg = set(), set()
        try:
            for e in entries:
                key = pair_key([str(s) for s in e["source_attrs"]], [str(t) for t in e["target_attrs"]])
                (pos if e.get("match", True) else neg).add(key)
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"malformed ground truth entry: {exc!r}") from exc
        return cls(frozenset(pos), frozenset(neg), closed_world)

    def to_entries(self) -> list[dict[str, Any]]:
        rows = [(k, True) for k in self.matches] + [(k, False) for k in self.non_matches]
        rows.sort(key=lambda r: (r[0], not r[1]))
        return [{"source_attrs": list(k[0]), "target_attrs": list(k[1]), "match": m} for k, m in rows]

    @classmethod
    def for_crs(cls, crs: CandidateResultSet, matched_ids: Iterable[str]) -> GroundTruth:
        """Truth over exactly the correspondences of ``crs``: listed ids match, the rest do not."""
        matched = set(matched_ids)
        pos = frozenset(c.pair_key for c in crs.correspondences if c.id in matched)
        neg = frozenset(c.pair_key for c in crs.correspondences if c.id not in matched) - pos
        return cls(pos, neg)


def load_ground_truth(path: str | Path, closed_world: bool = False) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise MalformedInput(f"{path}: ground truth must be a JSON list")
    return GroundTruth.from_entries(data, closed_world)


def save_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(json.dumps(gt.to_entries(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
