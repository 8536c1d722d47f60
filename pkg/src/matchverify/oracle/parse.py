"""Turn a free-text model reply into ``(verdict, confidence)``."""

from __future__ import annotations

import json
import re

from ..errors import ParseFailure

DEFAULT_CONFIDENCE = 0.9

_VERDICT = re.compile(r"\b(true|false)\b", re.IGNORECASE)
_PERCENT = re.compile(r"(\d+(?:\.\d+)?)\s*%")
_DECIMAL = re.compile(r"(?<![\d.])((?:0|1)?\.\d+|[01](?:\.0+)?)(?![\d.%])")


def _as_bool(v: object) -> bool | None:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.strip().lower() in ("true", "false"):
        return v.strip().lower() == "true"
    return None


def _as_confidence(v: object) -> float | None:
    if isinstance(v, bool) or v is None:
        return None
    if isinstance(v, str):
        s = v.strip()
        pct = s.endswith("%")
        try:
            x = float(s.rstrip("%").strip())
        except ValueError:
            return None
        return x / 100.0 if pct else x
    if isinstance(v, (int, float)):
        x = float(v)
        # a bare number above 1 is read as a percentage
        return x / 100.0 if x > 1.0 else x
    return None


def _first_json_object(text: str) -> dict | None:
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and "answer" in obj:
            return obj
    return None


def _normalize(verdict: bool, confidence: float) -> tuple[bool, float]:
    if confidence < 0.5:
        verdict, confidence = not verdict, 1.0 - confidence
    return verdict, min(1.0, max(0.5, confidence))


def parse_llm_response(text: str, fixed_confidence: float | None = None) -> tuple[bool, float]:
    """Extract a verdict and a confidence in [0.5, 1].

    A JSON object with ``answer``/``confidence`` keys wins; otherwise the first
    true/false token and the first percentage or decimal are used. A confidence
    below one half flips the verdict. ``fixed_confidence`` (default 0.9) fills in
    a missing confidence.
    """
    fallback = DEFAULT_CONFIDENCE if fixed_confidence is None else fixed_confidence
    obj = _first_json_object(text)
    if obj is not None:
        verdict = _as_bool(obj.get("answer"))
        if verdict is not None:
            conf = _as_confidence(obj.get("confidence"))
            return _normalize(verdict, fallback if conf is None else conf)

    m = _VERDICT.search(text)
    if m is None:
        raise ParseFailure(f"no true/false verdict in response: {text[:200]!r}")
    verdict = m.group(1).lower() == "true"
    rest = text[m.end():] + " " + text[: m.start()]
    pct = _PERCENT.search(rest)
    if pct is not None:
        conf = float(pct.group(1)) / 100.0
    else:
        dec = _DECIMAL.search(rest)
        conf = float(dec.group(1)) if dec is not None else fallback
    return _normalize(verdict, conf)
