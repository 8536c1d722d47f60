"""Prompt rendering for correspondence verification.

Two templates ship with the package: ``semantic`` (names only) and
``abbreviation`` (domain hint, abbreviation and value-swap tips, and the first
three sample values of every attribute). The template files are the contract;
rendering is plain ``string.Template`` substitution and is byte-stable.
"""

from __future__ import annotations

import hashlib
from importlib import resources
from string import Template
from typing import Literal, Sequence

from ..errors import MalformedInput, MissingSchemaName
from ..model import AttributeRef, Correspondence

TemplateName = Literal["semantic", "abbreviation"]
TEMPLATES: tuple[TemplateName, ...] = ("semantic", "abbreviation")
MAX_VALUES = 3
NO_VALUES = "(no sample values)"


def template_text(template: TemplateName) -> str:
    if template not in TEMPLATES:
        raise MalformedInput(f"unknown prompt template {template!r}")
    return resources.files(__package__).joinpath("templates", f"{template}.txt").read_text(encoding="utf-8")


def template_sha256(template: TemplateName) -> str:
    return hashlib.sha256(template_text(template).encode("utf-8")).hexdigest()


def _names(attrs: Sequence[AttributeRef]) -> str:
    names = [a.name for a in attrs]
    return names[0] if len(names) == 1 else "[" + ", ".join(names) + "]"


def _values(attrs: Sequence[AttributeRef]) -> str:
    lines = []
    for a in attrs:
        vals = a.sample_values[:MAX_VALUES]
        shown = ", ".join(vals) if vals else NO_VALUES
        lines.append(f"- {a.name}: {shown}")
    return "\n".join(lines)


def render_prompt(c: Correspondence, template: TemplateName = "semantic", schema_name: str = "") -> str:
    text = template_text(template)
    fields = {"source_name": _names(c.source_attrs), "target_name": _names(c.target_attrs)}
    if template == "abbreviation":
        if not schema_name or not schema_name.strip():
            raise MissingSchemaName("the abbreviation template needs a schema or domain name")
        fields.update(
            schema_name=schema_name.strip(),
            source_values=_values(c.source_attrs),
            target_values=_values(c.target_attrs),
        )
    return Template(text).substitute(fields)


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
