from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Protocol, Sequence

from ..errors import MalformedInput
from ..model import Correspondence

Provenance = Literal["simulated", "replay", "llm"]


@dataclass(frozen=True)
class Answer:
    corr_id: str
    verdict: bool
    confidence: float
    provenance: Provenance
    raw_response: str | None = None

    def __post_init__(self) -> None:
        if not 0.5 <= self.confidence <= 1.0:
            raise MalformedInput(f"answer confidence {self.confidence} outside [0.5, 1.0]")

    def to_dict(self) -> dict:
        d = {
            "corr_id": self.corr_id,
            "verdict": self.verdict,
            "confidence": self.confidence,
            "provenance": self.provenance,
        }
        if self.raw_response is not None:
            d["raw_response"] = self.raw_response
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Answer:
        return cls(d["corr_id"], bool(d["verdict"]), float(d["confidence"]), d["provenance"], d.get("raw_response"))


class Oracle(Protocol):
    def verify(self, c: Correspondence) -> Answer: ...

    def verify_many(self, cs: Sequence[Correspondence]) -> list[Answer]: ...


class SequentialMixin:
    def verify_many(self, cs: Sequence[Correspondence]) -> list[Answer]:
        return [self.verify(c) for c in cs]  # type: ignore[attr-defined]
