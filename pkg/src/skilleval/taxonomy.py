"""Skill taxonomy: evaluation skills, their sub-skills, and default annotation mechanisms.

The taxonomy is compiled-in and mirrored by an exportable JSON document so the
tagging system prompt, the scoring engine, and the UI all consume one source
of truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

# Annotation mechanism identifiers. Tasks may additionally use "anchor_bqa"
# (binary answers with reference anchors shown) and "aesthetics" (whole-image
# 1-5 Likert); those two reuse the bqa / likert payloads respectively.
MECHANISMS = ("bqa", "likert", "anchor_bqa", "anchor_likert", "word_level", "brush", "aesthetics")

# Per-mechanism rating scales (min, max) for mechanisms with integer scales.
LIKERT_SCALE = (1, 5)
ANCHOR_LIKERT_SCALE = (0, 5)


@dataclass(frozen=True)
class Skill:
    """One evaluation axis with its sub-skills and default annotation mechanism."""

    id: str
    subskills: tuple[str, ...] = field(default_factory=tuple)
    mechanism: str = "bqa"
    label: str = ""

    def __post_init__(self):
        if self.mechanism not in ("bqa", "anchor_likert", "word_level", "brush", "likert"):
            raise ValueError(f"unknown default mechanism: {self.mechanism}")


_SKILLS: tuple[Skill, ...] = (
    Skill("entities", ("singular", "count", "uncountable"), "bqa", "Entities"),
    Skill("attributes", ("color", "texture", "material", "shape", "scale"), "bqa", "Attributes"),
    Skill("action", ("standard", "unusual", "pose"), "bqa", "Action"),
    Skill("arrangement", (), "bqa", "Spatial Arrangement"),
    Skill("comparison", ("scale", "tone", "distance", "count", "other"), "bqa", "Comparison"),
    Skill("lighting", (), "bqa", "Lighting"),
    Skill("weather", (), "bqa", "Weather"),
    Skill("view", (), "bqa", "View"),
    Skill("camera", (), "bqa", "Camera"),
    Skill("mood_feeling", (), "bqa", "Mood / Feeling"),
    Skill("language_complexity", ("negation", "color_stroop"), "bqa", "Language Complexity"),
    Skill("time", ("time_of_day", "season", "year", "era"), "bqa", "Time"),
    Skill("environment_scene", ("landmark", "general"), "anchor_likert", "Environment / Scene"),
    Skill("style", ("artistic_style", "visual_medium"), "anchor_likert", "Style"),
    Skill("named_entities", ("character", "vehicle", "product", "artwork"), "anchor_likert", "Named Entities"),
    Skill("text_rendering", ("accuracy", "style", "numerical", "position"), "word_level", "Text Rendering"),
    Skill("artifacts", (), "brush", "Artifacts"),
    Skill("aesthetic_quality", (), "likert", "Aesthetic Quality"),
)

_BY_ID = {s.id: s for s in _SKILLS}

SKILL_IDS = tuple(s.id for s in _SKILLS)


def load_taxonomy() -> list[Skill]:
    """Return the 18 evaluation skills in canonical (report column) order.

    Deterministic and side-effect-free; repeated calls return identical data.
    """
    return list(_SKILLS)


def get_skill(skill_id: str) -> Skill:
    try:
        return _BY_ID[skill_id]
    except KeyError:
        raise KeyError(f"unknown skill: {skill_id!r}") from None


def is_valid_subskill(skill_id: str, subskill: str) -> bool:
    """True if `subskill` is valid for `skill_id` (empty string is always valid)."""
    skill = _BY_ID.get(skill_id)
    if skill is None:
        return False
    return subskill == "" or subskill in skill.subskills


def taxonomy_as_dict() -> dict:
    return {
        "skills": [
            {
                "id": s.id,
                "label": s.label,
                "subskills": list(s.subskills),
                "mechanism": s.mechanism,
            }
            for s in _SKILLS
        ]
    }


def export_taxonomy(path: str | Path) -> Path:
    """Write the taxonomy to `taxonomy.json` for consumption by the UI and tagger."""
    path = Path(path)
    if path.is_dir():
        path = path / "taxonomy.json"
    path.write_text(json.dumps(taxonomy_as_dict(), indent=2) + "\n", encoding="utf-8")
    return path
