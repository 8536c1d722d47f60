"""Chat-completion client used as a verification oracle."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from ..errors import HttpFailure, MalformedInput, MissingApiKey
from ..model import Correspondence
from .base import Answer
from .parse import parse_llm_response
from .prompts import TemplateName, prompt_sha256, render_prompt, template_sha256

log = logging.getLogger(__name__)

API_KEY_ENV = "ORACLE_API_KEY"
RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class LLMConfig:
    endpoint_url: str
    model_name: str
    template: TemplateName = "semantic"
    schema_name: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    backoff_seconds: float = 1.0
    timeout_seconds: float = 60.0
    cache_dir: str | None = None
    transcript_path: str | None = None
    fixed_confidence: float | None = None
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise MalformedInput("temperature must be >= 0")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise MalformedInput("max_retries must be >= 0 and max_in_flight >= 1")


def cache_key(model_name: str, template: TemplateName, prompt: str) -> str:
    raw = "\0".join((model_name, template_sha256(template), prompt_sha256(prompt)))
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


class LLMOracle:
    def __init__(
        self,
        cfg: LLMConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        api_key: str | None = None,
    ) -> None:
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not key.strip():
            raise MissingApiKey(f"the llm oracle needs an API key in the {API_KEY_ENV} environment variable")
        self.cfg = cfg
        self._key = key.strip()
        self._client = client or httpx.Client(timeout=cfg.timeout_seconds)
        self._sleep = sleep
        self._lock = threading.Lock()
        self.requests = 0

    def close(self) -> None:
        self._client.close()

    # -- cache -------------------------------------------------------------

    def _cache_path(self, key: str) -> Path | None:
        if self.cfg.cache_dir is None:
            return None
        return Path(self.cfg.cache_dir) / f"{key}.json"

    def _cache_get(self, key: str) -> str | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["raw_response"]

    def _cache_put(self, key: str, raw: str) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
        tmp.write_text(json.dumps({"raw_response": raw, "model": self.cfg.model_name}, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    # -- http --------------------------------------------------------------

    def _request(self, prompt: str) -> str:
        body: dict[str, Any] = {
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
        }
        headers = {"Authorization": f"Bearer {self._key}", "Content-Type": "application/json"}
        last = ""
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep(self.cfg.backoff_seconds * 2 ** (attempt - 1))
            try:
                with self._lock:
                    self.requests += 1
                resp = self._client.post(self.cfg.endpoint_url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("oracle request failed (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("oracle request got %s (attempt %d)", last, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise HttpFailure(f"HTTP {resp.status_code} from {self.cfg.endpoint_url}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise HttpFailure(f"unexpected chat-completion payload: {exc!r}") from exc
        raise HttpFailure(f"giving up after {self.cfg.max_retries + 1} attempts: {last}")

    # -- oracle ------------------------------------------------------------

    def verify(self, c: Correspondence) -> Answer:
        prompt = render_prompt(c, self.cfg.template, self.cfg.schema_name)
        key = cache_key(self.cfg.model_name, self.cfg.template, prompt)
        raw = self._cache_get(key)
        if raw is None:
            raw = self._request(prompt)
            self._cache_put(key, raw)
        verdict, conf = parse_llm_response(raw, self.cfg.fixed_confidence)
        if self.cfg.fixed_confidence is not None:
            conf = max(0.5, min(1.0, self.cfg.fixed_confidence))
        answer = Answer(c.id, verdict, conf, "llm", raw)
        self._log(answer, prompt)
        return answer

    def _log(self, a: Answer, prompt: str) -> None:
        if self.cfg.transcript_path is None:
            return
        rec = {
            "corr_id": a.corr_id,
            "verdict": a.verdict,
            "confidence": a.confidence,
            "template": self.cfg.template,
            "prompt_sha256": prompt_sha256(prompt),
            "raw_response": a.raw_response,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock, open(self.cfg.transcript_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def verify_many(self, cs: Sequence[Correspondence]) -> list[Answer]:
        """Bounded parallel requests; answers come back in input order."""
        if len(cs) <= 1 or self.cfg.max_in_flight == 1:
            return [self.verify(c) for c in cs]
        with ThreadPoolExecutor(max_workers=self.cfg.max_in_flight) as pool:
            return list(pool.map(self.verify, cs))
