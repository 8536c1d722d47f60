from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import MalformedInput, TranscriptMiss
from ..model import Correspondence
from .base import Answer, SequentialMixin


@dataclass(frozen=True)
class ReplayConfig:
    transcript_path: str


def read_transcript(path: str | Path) -> dict[str, dict]:
    """First entry per correspondence id from a transcript JSONL file."""
    entries: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                cid = str(rec["corr_id"])
                rec["verdict"], rec["confidence"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedInput(f"{path}:{lineno}: bad transcript line ({exc!r})") from exc
            entries.setdefault(cid, rec)
    return entries


class ReplayOracle(SequentialMixin):
    def __init__(self, cfg: ReplayConfig) -> None:
        self.cfg = cfg
        self.entries = read_transcript(cfg.transcript_path)

    def verify(self, c: Correspondence) -> Answer:
        rec = self.entries.get(c.id)
        if rec is None:
            raise TranscriptMiss(f"transcript {self.cfg.transcript_path} has no entry for {c.id}")
        return Answer(c.id, bool(rec["verdict"]), float(rec["confidence"]), "replay", rec.get("raw_response"))
