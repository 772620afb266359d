import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skilleval.prompts import QuestionNode, TaggedPrompt
from skilleval.records import TaskConfig
from skilleval.store import AnnotationStore

FIXTURE_PROMPTS = Path(__file__).parent.parent / "src" / "skilleval" / "data" / "example_prompts.json"


@pytest.fixture
def store(tmp_path):
    return AnnotationStore(tmp_path / "store")


@pytest.fixture
def red_car_prompt():
    """The canonical two-node dependency example: color depends on presence."""
    return TaggedPrompt(
        prompt_id="p1",
        text="A red car",
        source="test",
        nodes=(
            QuestionNode("c1", "entities", "singular", "car", "Is there a car?", "presence", ()),
            QuestionNode("c2", "attributes", "color", "red", "Is the car red?", "property", ("c1",)),
        ),
    )


def make_task(task_id="t1", models=("model_a",), annotations=("bqa",), prompts_file="prompts.json", **kw):
    return TaskConfig(
        id=task_id,
        name="Test task",
        enable_bqa_ai=kw.pop("enable_bqa_ai", False),
        shuffle_images=kw.pop("shuffle_images", False),
        annotations=tuple(annotations),
        dataset_version="v-test",
        prompts_file=prompts_file,
        models=tuple(models),
        **kw,
    )


@pytest.fixture
def task_factory():
    return make_task
