import json

from skilleval.taxonomy import (
    SKILL_IDS,
    export_taxonomy,
    get_skill,
    is_valid_subskill,
    load_taxonomy,
)


def test_has_exactly_18_skills():
    assert len(load_taxonomy()) == 18
    assert len(set(SKILL_IDS)) == 18


def test_artifacts_uses_brush():
    assert get_skill("artifacts").mechanism == "brush"


def test_text_rendering_subskills():
    assert set(get_skill("text_rendering").subskills) == {"accuracy", "style", "numerical", "position"}


def test_default_mechanism_groups():
    factual = [
        "entities", "attributes", "action", "arrangement", "comparison", "lighting",
        "weather", "view", "camera", "mood_feeling", "language_complexity", "time",
    ]
    for skill_id in factual:
        assert get_skill(skill_id).mechanism == "bqa"
    for skill_id in ("environment_scene", "style", "named_entities"):
        assert get_skill(skill_id).mechanism == "anchor_likert"
    assert get_skill("text_rendering").mechanism == "word_level"
    assert get_skill("aesthetic_quality").mechanism == "likert"


def test_attribute_subskills():
    assert set(get_skill("attributes").subskills) == {"color", "texture", "material", "shape", "scale"}


def test_load_taxonomy_deterministic():
    assert load_taxonomy() == load_taxonomy()
    assert [s.id for s in load_taxonomy()] == list(SKILL_IDS)


def test_subskill_validation():
    assert is_valid_subskill("entities", "count")
    assert is_valid_subskill("lighting", "")
    assert not is_valid_subskill("lighting", "count")
    assert not is_valid_subskill("nope", "count")


def test_export_round_trip(tmp_path):
    path = export_taxonomy(tmp_path)
    assert path.name == "taxonomy.json"
    data = json.loads(path.read_text())
    assert len(data["skills"]) == 18
    by_id = {s["id"]: s for s in data["skills"]}
    assert by_id["artifacts"]["mechanism"] == "brush"
    assert by_id["time"]["subskills"] == ["time_of_day", "season", "year", "era"]
