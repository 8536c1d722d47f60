"""Candidate result sets, their truth-valued view form, and validation.

A candidate result set (CRS) is a list of alternative schema matchings, each a
set of correspondences, with a probability distribution over the matchings.
The view form re-expresses every matching as a boolean row over the union of
all correspondences, which is what selection and updating operate on.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping, Sequence

import numpy as np

from .errors import MalformedInput, UnknownCorrespondence

Side = Literal["source", "target"]

PROB_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


@dataclass(frozen=True)
class AttributeRef:
    schema_side: Side
    name: str
    sample_values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.schema_side not in ("source", "target"):
            raise MalformedInput(f"schema_side must be 'source' or 'target', got {self.schema_side!r}")
        if not isinstance(self.name, str) or not self.name.strip():
            raise MalformedInput("attribute name must be a non-empty string")
        object.__setattr__(self, "sample_values", tuple(str(v) for v in self.sample_values))

    @property
    def key(self) -> tuple[str, str]:
        # attribute identity: side + exact, case-sensitive name
        return (self.schema_side, self.name)


@dataclass(frozen=True)
class Correspondence:
    """One attribute-set to attribute-set mapping.

    ``cost`` is the verification price in tokens; ``None`` means the input did
    not state one and the heuristic in :func:`matchverify.selection.token_cost`
    applies.
    """

    id: str
    source_attrs: tuple[AttributeRef, ...]
    target_attrs: tuple[AttributeRef, ...]
    cost: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_attrs", tuple(self.source_attrs))
        object.__setattr__(self, "target_attrs", tuple(self.target_attrs))
        if self.cost is not None:
            if isinstance(self.cost, bool) or not isinstance(self.cost, int) or self.cost < 0:
                raise MalformedInput(f"correspondence {self.id}: cost must be a non-negative integer")

    @property
    def source_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.source_attrs)

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.target_attrs)

    @property
    def pair_key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Identity used against ground truth: sorted names on each side."""
        return (tuple(sorted(self.source_names)), tuple(sorted(self.target_names)))

    def label(self) -> str:
        def side(names: Sequence[str]) -> str:
            return names[0] if len(names) == 1 else "(" + ", ".join(names) + ")"

        return f"{side(self.source_names)} <-> {side(self.target_names)}"


@dataclass(frozen=True)
class CandidateResult:
    id: str
    correspondence_ids: frozenset[str]
    probability: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "correspondence_ids", frozenset(self.correspondence_ids))
        object.__setattr__(self, "probability", float(self.probability))


@dataclass(frozen=True)
class CandidateResultSet:
    source_schema_name: str
    target_schema_name: str
    correspondences: tuple[Correspondence, ...]
    candidates: tuple[CandidateResult, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "correspondences", tuple(self.correspondences))
        object.__setattr__(self, "candidates", tuple(self.candidates))

    @cached_property
    def corr_by_id(self) -> dict[str, Correspondence]:
        return {c.id: c for c in self.correspondences}

    @cached_property
    def candidate_by_id(self) -> dict[str, CandidateResult]:
        return {s.id: s for s in self.candidates}

    def correspondence(self, corr_id: str) -> Correspondence:
        try:
            return self.corr_by_id[corr_id]
        except KeyError:
            raise UnknownCorrespondence(f"unknown correspondence {corr_id!r}") from None

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.candidates], dtype=float)

    def with_probabilities(self, probs: Iterable[float]) -> CandidateResultSet:
        cands = tuple(
            CandidateResult(s.id, s.correspondence_ids, float(p)) for s, p in zip(self.candidates, probs)
        )
        return CandidateResultSet(self.source_schema_name, self.target_schema_name, self.correspondences, cands)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    # the input, renormalized when the probability sum was off by a rounding-level amount
    crs: CandidateResultSet | None = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self) -> CandidateResultSet:
        """Raise on errors, else return the (possibly renormalized) input."""
        if self.errors:
            raise MalformedInput("; ".join(self.errors))
        assert self.crs is not None
        return self.crs


def validate_crs(crs: CandidateResultSet) -> ValidationReport:
    """Collect every structural problem in ``crs``; never raises."""
    report = ValidationReport(crs=crs)
    errors, warnings = report.errors, report.warnings

    ids = Counter(c.id for c in crs.correspondences)
    for cid, n in sorted(ids.items()):
        if n > 1:
            errors.append(f"correspondence id {cid!r} appears {n} times")
    for c in crs.correspondences:
        if not c.source_attrs or not c.target_attrs:
            errors.append(f"correspondence {c.id!r} needs at least one source and one target attribute")
        if any(a.schema_side != "source" for a in c.source_attrs):
            errors.append(f"correspondence {c.id!r} lists a target attribute on its source side")
        if any(a.schema_side != "target" for a in c.target_attrs):
            errors.append(f"correspondence {c.id!r} lists a source attribute on its target side")
        if c.cost == 0:
            warnings.append(f"correspondence {c.id!r} has zero cost")

    cand_ids = Counter(s.id for s in crs.candidates)
    for sid, n in sorted(cand_ids.items()):
        if n > 1:
            errors.append(f"candidate id {sid!r} appears {n} times")
    if not crs.candidates:
        errors.append("candidate result set has no candidates")

    known = set(ids)
    used: set[str] = set()
    for s in crs.candidates:
        missing = sorted(s.correspondence_ids - known)
        if missing:
            errors.append(f"candidate {s.id!r} references unknown correspondences {missing}")
        used |= s.correspondence_ids
        if not (0.0 <= s.probability <= 1.0) or math.isnan(s.probability):
            errors.append(f"candidate {s.id!r} has probability {s.probability} outside [0, 1]")
        # no attribute may be associated with more than one correspondence of a candidate
        seen: dict[tuple[str, str], str] = {}
        for cid in sorted(s.correspondence_ids & known):
            c = crs.corr_by_id[cid]
            for a in (*c.source_attrs, *c.target_attrs):
                prev = seen.get(a.key)
                if prev is not None and prev != cid:
                    errors.append(
                        f"candidate {s.id!r} associates {a.schema_side} attribute {a.name!r} with more than "
                        f"one correspondence ({prev}, {cid}); an attribute may appear in at most one "
                        "correspondence of a single candidate result"
                    )
                seen.setdefault(a.key, cid)
    for c in crs.correspondences:
        if c.id not in used:
            errors.append(f"correspondence {c.id!r} is not used by any candidate")

    groups: dict[frozenset[str], list[str]] = {}
    for s in crs.candidates:
        groups.setdefault(s.correspondence_ids, []).append(s.id)
    for members in groups.values():
        if len(members) > 1:
            warnings.append(f"candidates {members} have identical correspondence sets; they form one view")

    total = float(sum(s.probability for s in crs.candidates))
    dev = abs(total - 1.0)
    if crs.candidates and dev > PROB_TOL:
        if dev <= RENORMALIZE_TOL and total > 0:
            warnings.append(f"distribution sums to {total:.12g}; renormalized")
            report.crs = crs.with_probabilities(crs.probabilities / total)
        else:
            errors.append(
                f"distribution sums to {total:.12g}; candidate probabilities must form a probability "
                "distribution (sum to 1)"
            )
    return report


class ViewSet:
    """Distribution over distinct truth rows of a correspondence set.

    ``truth_matrix[v, j]`` is true when view ``v`` is a positive model of
    correspondence ``correspondence_ids[j]``. ``candidate_ids[v]`` lists the
    candidates that collapsed into view ``v``. Instances are immutable; the
    arrays are read-only.
    """

    __slots__ = ("correspondence_ids", "truth_matrix", "probabilities", "candidate_ids", "_index")

    def __init__(
        self,
        correspondence_ids: Sequence[str],
        truth_matrix: Any,
        probabilities: Any,
        candidate_ids: Sequence[Sequence[str]] | None = None,
    ) -> None:
        tm = np.array(truth_matrix, dtype=bool, copy=True)
        pr = np.array(probabilities, dtype=float, copy=True)
        ids = tuple(correspondence_ids)
        if tm.ndim != 2 or tm.shape != (pr.shape[0], len(ids)):
            raise MalformedInput(
                f"truth matrix shape {tm.shape} does not match {pr.shape[0]} views x {len(ids)} correspondences"
            )
        if len(set(ids)) != len(ids):
            raise MalformedInput("correspondence ids must be distinct")
        if np.any(pr < 0) or not np.all(np.isfinite(pr)):
            raise MalformedInput("view probabilities must be finite and non-negative")
        if abs(pr.sum() - 1.0) > PROB_TOL:
            raise MalformedInput(f"view probabilities sum to {pr.sum():.12g}, not 1")
        tm.flags.writeable = False
        pr.flags.writeable = False
        if candidate_ids is None:
            candidate_ids = [(f"v{i + 1}",) for i in range(pr.shape[0])]
        object.__setattr__(self, "correspondence_ids", ids)
        object.__setattr__(self, "truth_matrix", tm)
        object.__setattr__(self, "probabilities", pr)
        object.__setattr__(self, "candidate_ids", tuple(tuple(c) for c in candidate_ids))
        object.__setattr__(self, "_index", {c: j for j, c in enumerate(ids)})

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("ViewSet is immutable")

    def __repr__(self) -> str:
        return f"ViewSet(views={self.n_views}, correspondences={len(self.correspondence_ids)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ViewSet):
            return NotImplemented
        return (
            self.correspondence_ids == other.correspondence_ids
            and self.candidate_ids == other.candidate_ids
            and np.array_equal(self.truth_matrix, other.truth_matrix)
            and np.array_equal(self.probabilities, other.probabilities)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_views(self) -> int:
        return int(self.probabilities.shape[0])

    def index(self, corr_id: str) -> int:
        try:
            return self._index[corr_id]
        except KeyError:
            raise UnknownCorrespondence(f"unknown correspondence {corr_id!r}") from None

    def indices(self, corr_ids: Iterable[str]) -> list[int]:
        return [self.index(c) for c in corr_ids]

    def column(self, corr_id: str) -> np.ndarray:
        return self.truth_matrix[:, self.index(corr_id)]

    def with_probabilities(self, probabilities: Any) -> ViewSet:
        return ViewSet(self.correspondence_ids, self.truth_matrix, probabilities, self.candidate_ids)


def build_view_set(crs: CandidateResultSet) -> ViewSet:
    report = validate_crs(crs)
    report.raise_for_errors()
    crs = report.crs or crs

    ids = [c.id for c in crs.correspondences]
    rows: dict[tuple[bool, ...], int] = {}
    probs: list[float] = []
    members: list[list[str]] = []
    for s in crs.candidates:
        row = tuple(cid in s.correspondence_ids for cid in ids)
        if row in rows:
            k = rows[row]
            probs[k] += s.probability
            members[k].append(s.id)
        else:
            rows[row] = len(probs)
            probs.append(s.probability)
            members.append([s.id])
    keep = [k for k, p in enumerate(probs) if p > 0.0]
    if not keep:
        raise MalformedInput("every candidate has zero probability")
    matrix = np.array(list(rows), dtype=bool).reshape(len(rows), len(ids))[keep]
    p = np.array([probs[k] for k in keep])
    return ViewSet(ids, matrix, p / p.sum(), [members[k] for k in keep])


def marginal_probability(vs: ViewSet, corr_id: str) -> float:
    """Total probability of the views in which ``corr_id`` holds."""
    col = vs.column(corr_id)
    return float(vs.probabilities[col].sum())


# ---------------------------------------------------------------- JSON format


def _attrs_from_json(side: Side, items: Any, where: str) -> tuple[AttributeRef, ...]:
    if not isinstance(items, list):
        raise MalformedInput(f"{where}: expected a list of attributes")
    out = []
    for item in items:
        if isinstance(item, str):
            out.append(AttributeRef(side, item))
        elif isinstance(item, Mapping) and "name" in item:
            out.append(AttributeRef(side, item["name"], tuple(item.get("values") or ())))
        else:
            raise MalformedInput(f"{where}: attribute entries need a 'name'")
    return tuple(out)


def crs_from_dict(data: Mapping[str, Any]) -> CandidateResultSet:
    try:
        corrs = []
        for raw in data["correspondences"]:
            cid = str(raw["id"])
            corrs.append(
                Correspondence(
                    cid,
                    _attrs_from_json("source", raw["source_attrs"], f"correspondence {cid}"),
                    _attrs_from_json("target", raw["target_attrs"], f"correspondence {cid}"),
                    raw.get("cost"),
                )
            )
        cands = [
            CandidateResult(str(raw["id"]), frozenset(str(c) for c in raw["correspondences"]), raw["probability"])
            for raw in data["candidates"]
        ]
        return CandidateResultSet(str(data["source_schema"]), str(data["target_schema"]), tuple(corrs), tuple(cands))
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"malformed candidate result set: {exc!r}") from exc


def crs_to_dict(crs: CandidateResultSet) -> dict[str, Any]:
    def attrs(items: Sequence[AttributeRef]) -> list[dict[str, Any]]:
        return [{"name": a.name, "values": list(a.sample_values)} for a in items]

    corrs = []
    for c in crs.correspondences:
        d: dict[str, Any] = {"id": c.id, "source_attrs": attrs(c.source_attrs), "target_attrs": attrs(c.target_attrs)}
        if c.cost is not None:
            d["cost"] = c.cost
        corrs.append(d)
    order = {c.id: i for i, c in enumerate(crs.correspondences)}
    cands = [
        {
            "id": s.id,
            "correspondences": sorted(s.correspondence_ids, key=lambda c: (order.get(c, len(order)), c)),
            "probability": s.probability,
        }
        for s in crs.candidates
    ]
    return {
        "source_schema": crs.source_schema_name,
        "target_schema": crs.target_schema_name,
        "correspondences": corrs,
        "candidates": cands,
    }


def dumps_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_crs(path: str | Path) -> CandidateResultSet:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc
    return crs_from_dict(data)


def save_crs(crs: CandidateResultSet, path: str | Path) -> None:
    Path(path).write_text(dumps_json(crs_to_dict(crs)), encoding="utf-8")
