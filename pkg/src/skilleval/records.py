"""Annotation record types, payload variants, and task configurations.

Every payload knows how to (de)serialize itself; records serialize to one
canonical JSON object per line (sorted keys, compact separators) so logs
round-trip byte-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .masks import BrushMask
from .taxonomy import ANCHOR_LIKERT_SCALE, LIKERT_SCALE, MECHANISMS

BQA_LABELS = ("yes", "no", "unsure")
WORD_LABELS = ("correct", "incorrect")
GAP_LABELS = ("clean", "incorrect")


@dataclass(frozen=True)
class TaskConfig:
    """One evaluation campaign: which prompts, models, and mechanisms to run."""

    id: str
    name: str
    enable_bqa_ai: bool
    shuffle_images: bool
    annotations: tuple[str, ...]
    dataset_version: str
    prompts_file: str
    models: tuple[str, ...]
    # Not part of the canonical config listing; serialized only when disabled.
    allow_unsure: bool = True

    def __post_init__(self):
        if not self.models:
            raise ValueError("task must list at least one model")
        unknown = [a for a in self.annotations if a not in MECHANISMS]
        if unknown:
            raise ValueError(f"unknown annotation mechanisms: {unknown}")

    def to_json_dict(self) -> dict:
        d = {
            "id": self.id,
            "name": self.name,
            "enable_bqa_ai": self.enable_bqa_ai,
            "shuffle_images": self.shuffle_images,
            "annotations": list(self.annotations),
            "dataset_version": self.dataset_version,
            "prompts_file": self.prompts_file,
            "models": list(self.models),
        }
        if not self.allow_unsure:
            d["allow_unsure"] = False
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaskConfig":
        missing = {
            "id", "name", "enable_bqa_ai", "shuffle_images",
            "annotations", "dataset_version", "prompts_file", "models",
        } - set(d)
        if missing:
            raise ValueError(f"task config missing fields: {sorted(missing)}")
        return cls(
            id=str(d["id"]),
            name=str(d["name"]),
            enable_bqa_ai=bool(d["enable_bqa_ai"]),
            shuffle_images=bool(d["shuffle_images"]),
            annotations=tuple(str(a) for a in d["annotations"]),
            dataset_version=str(d["dataset_version"]),
            prompts_file=str(d["prompts_file"]),
            models=tuple(str(m) for m in d["models"]),
            allow_unsure=bool(d.get("allow_unsure", True)),
        )


def load_task_config(path: str | Path) -> TaskConfig:
    return TaskConfig.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ItemKey:
    """One generated image: (prompt, model) plus where the image lives on disk."""

    prompt_id: str
    model_id: str
    image_path: str

    def to_json_dict(self) -> dict:
        return {"prompt_id": self.prompt_id, "model_id": self.model_id, "image_path": self.image_path}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ItemKey":
        return cls(str(d["prompt_id"]), str(d["model_id"]), str(d["image_path"]))


@dataclass(frozen=True)
class BqaAnswer:
    question_uid: str
    label: str

    def __post_init__(self):
        if self.label not in BQA_LABELS:
            raise ValueError(f"bqa label must be one of {BQA_LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class BqaAnswerSet:
    """All binary answers one annotator gave for one item."""

    answers: tuple[BqaAnswer, ...]

    def __post_init__(self):
        uids = [a.question_uid for a in self.answers]
        if len(uids) != len(set(uids)):
            raise ValueError("duplicate question_uid in answer set")

    def as_map(self) -> dict[str, str]:
        return {a.question_uid: a.label for a in self.answers}

    def to_json_dict(self) -> dict:
        return {"answers": [{"question_uid": a.question_uid, "label": a.label} for a in self.answers]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BqaAnswerSet":
        return cls(tuple(BqaAnswer(str(a["question_uid"]), str(a["label"])) for a in d["answers"]))


@dataclass(frozen=True)
class LikertAnswer:
    """A single integer rating. `scope` is a question uid or a scope id
    such as "aesthetic_quality" for whole-image ratings."""

    scope: str
    value: int
    scale_min: int
    scale_max: int

    def __post_init__(self):
        if not (self.scale_min <= self.value <= self.scale_max):
            raise ValueError(
                f"likert value {self.value} outside scale [{self.scale_min}, {self.scale_max}]"
            )

    def to_json_dict(self) -> dict:
        return {
            "scope": self.scope,
            "value": self.value,
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LikertAnswer":
        return cls(str(d["scope"]), int(d["value"]), int(d["scale_min"]), int(d["scale_max"]))


@dataclass(frozen=True)
class WordTileSheet:
    """Word-level text judgment: one label per expected word plus one label per
    gap (between words and at both sentence boundaries)."""

    words: tuple[str, ...]
    word_labels: tuple[str, ...]
    gap_labels: tuple[str, ...]

    def __post_init__(self):
        if not self.words:
            raise ValueError("word tile sheet needs at least one word")
        if len(self.word_labels) != len(self.words):
            raise ValueError("word_labels length must equal words length")
        if len(self.gap_labels) != len(self.words) + 1:
            raise ValueError("gap_labels length must equal words length + 1")
        if any(l not in WORD_LABELS for l in self.word_labels):
            raise ValueError(f"word labels must be in {WORD_LABELS}")
        if any(l not in GAP_LABELS for l in self.gap_labels):
            raise ValueError(f"gap labels must be in {GAP_LABELS}")

    def to_json_dict(self) -> dict:
        return {
            "words": list(self.words),
            "word_labels": list(self.word_labels),
            "gap_labels": list(self.gap_labels),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "WordTileSheet":
        return cls(
            tuple(str(w) for w in d["words"]),
            tuple(str(l) for l in d["word_labels"]),
            tuple(str(l) for l in d["gap_labels"]),
        )


Payload = BqaAnswerSet | LikertAnswer | BrushMask | WordTileSheet

# Payload class expected for each mechanism.
PAYLOAD_TYPES: dict[str, type] = {
    "bqa": BqaAnswerSet,
    "anchor_bqa": BqaAnswerSet,
    "likert": LikertAnswer,
    "anchor_likert": LikertAnswer,
    "aesthetics": LikertAnswer,
    "word_level": WordTileSheet,
    "brush": BrushMask,
}


def expected_scale(mechanism: str) -> tuple[int, int]:
    if mechanism == "anchor_likert":
        return ANCHOR_LIKERT_SCALE
    return LIKERT_SCALE


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class AnnotationRecord:
    task_id: str
    item: ItemKey
    annotator_id: str
    mechanism: str
    payload: Payload
    ai_prefilled: bool = False
    timestamp: str = field(default_factory=utc_now_iso)

    def __post_init__(self):
        if not self.annotator_id:
            raise ValueError("annotator_id must be nonempty")
        validate_payload(self.mechanism, self.payload)

    def logical_key(self) -> tuple:
        """Key under which a later record replaces an earlier one (last-write-wins)."""
        scope = self.payload.scope if isinstance(self.payload, LikertAnswer) else ""
        return (
            self.task_id,
            self.item.prompt_id,
            self.item.model_id,
            self.annotator_id,
            self.mechanism,
            scope,
        )

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "item": self.item.to_json_dict(),
            "annotator_id": self.annotator_id,
            "mechanism": self.mechanism,
            "payload": self.payload.to_json_dict(),
            "ai_prefilled": self.ai_prefilled,
            "timestamp": self.timestamp,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, d: dict) -> "AnnotationRecord":
        mechanism = str(d["mechanism"])
        payload_cls = PAYLOAD_TYPES.get(mechanism)
        if payload_cls is None:
            raise ValueError(f"unknown mechanism: {mechanism!r}")
        payload = payload_cls.from_json_dict(d["payload"])
        return cls(
            task_id=str(d["task_id"]),
            item=ItemKey.from_json_dict(d["item"]),
            annotator_id=str(d["annotator_id"]),
            mechanism=mechanism,
            payload=payload,
            ai_prefilled=bool(d["ai_prefilled"]),
            timestamp=str(d["timestamp"]),
        )

    @classmethod
    def from_json_line(cls, line: str) -> "AnnotationRecord":
        return cls.from_json_dict(json.loads(line))


def validate_payload(mechanism: str, payload: Payload, allow_unsure: bool = True) -> None:
    """Raise ValueError unless `payload` is the right variant (and scale) for `mechanism`."""
    expected = PAYLOAD_TYPES.get(mechanism)
    if expected is None:
        raise ValueError(f"unknown mechanism: {mechanism!r}")
    if not isinstance(payload, expected):
        raise ValueError(
            f"mechanism {mechanism!r} expects {expected.__name__}, got {type(payload).__name__}"
        )
    if isinstance(payload, LikertAnswer):
        scale = expected_scale(mechanism)
        if (payload.scale_min, payload.scale_max) != scale:
            raise ValueError(f"mechanism {mechanism!r} uses scale {scale}, got "
                             f"({payload.scale_min}, {payload.scale_max})")
    if isinstance(payload, BqaAnswerSet) and not allow_unsure:
        unsure = [a.question_uid for a in payload.answers if a.label == "unsure"]
        if unsure:
            raise ValueError(f"unsure answers not enabled for this task: {unsure}")
