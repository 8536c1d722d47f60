"""Verification oracles: simulated, transcript replay, and a live LLM client."""

from __future__ import annotations

from typing import Union

from ..errors import MalformedInput
from ..model import Correspondence
from ..truth import GroundTruth
from .base import Answer, Oracle
from .llm import API_KEY_ENV, LLMConfig, LLMOracle
from .parse import parse_llm_response
from .prompts import render_prompt, template_text
from .replay import ReplayConfig, ReplayOracle, read_transcript
from .simulated import SimulatedConfig, SimulatedOracle

OracleConfig = Union[SimulatedConfig, ReplayConfig, LLMConfig]


def make_oracle(cfg: OracleConfig, truth: GroundTruth | None = None) -> Oracle:
    if isinstance(cfg, SimulatedConfig):
        return SimulatedOracle(cfg, truth)
    if isinstance(cfg, ReplayConfig):
        return ReplayOracle(cfg)
    if isinstance(cfg, LLMConfig):
        return LLMOracle(cfg)
    raise MalformedInput(f"unknown oracle config {cfg!r}")


def verify(cfg: OracleConfig, c: Correspondence, truth: GroundTruth | None = None) -> Answer:
    return make_oracle(cfg, truth).verify(c)


__all__ = [
    "API_KEY_ENV",
    "Answer",
    "LLMConfig",
    "LLMOracle",
    "Oracle",
    "OracleConfig",
    "ReplayConfig",
    "ReplayOracle",
    "SimulatedConfig",
    "SimulatedOracle",
    "make_oracle",
    "parse_llm_response",
    "read_transcript",
    "render_prompt",
    "template_text",
    "verify",
]
