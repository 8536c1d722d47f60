"""Rewrite the golden prompt files. Run only after a deliberate template change."""

import json
from pathlib import Path

from matchverify.model import crs_from_dict
from matchverify.oracle.prompts import TEMPLATES, render_prompt

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def fixture_correspondences():
    spec = json.loads((GOLDEN / "correspondences.json").read_text(encoding="utf-8"))
    ids = [c["id"] for c in spec["correspondences"]]
    crs = crs_from_dict(
        {
            "source_schema": "s",
            "target_schema": "t",
            "correspondences": spec["correspondences"],
            "candidates": [{"id": "all", "correspondences": ids, "probability": 1.0}],
        }
    )
    return spec["schema_name"], crs.correspondences


def main() -> None:
    schema_name, corrs = fixture_correspondences()
    for c in corrs:
        for t in TEMPLATES:
            (GOLDEN / f"{c.id}.{t}.txt").write_text(render_prompt(c, t, schema_name), encoding="utf-8")
    print(f"wrote {len(corrs) * len(TEMPLATES)} golden prompts to {GOLDEN}")


if __name__ == "__main__":
    main()
