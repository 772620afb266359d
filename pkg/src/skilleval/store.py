"""Append-only annotation store backed by one JSONL log per task.

Appends are serialized per task; reads replay the log and apply
last-write-wins on the logical record key, so annotators may revise earlier
submissions without rewriting history.
"""

from __future__ import annotations

import json
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .masks import mask_to_ratio
from .records import (
    AnnotationRecord,
    BqaAnswerSet,
    BrushMask,
    LikertAnswer,
    TaskConfig,
    WordTileSheet,
    validate_payload,
)
from .scoring import score_word_level


class StoreError(Exception):
    pass


class UnknownTaskError(StoreError):
    pass


@dataclass(frozen=True)
class Selector:
    """What slice of a task's annotations to turn into an annotator x unit matrix.

    Exactly one of mechanism / skill / scope selects the slice; granularity
    "unit" expands word-level sheets into per-word and per-gap binary units.
    AI-prefilled records are excluded unless include_ai is set.
    """

    mechanism: str | None = None
    skill: str | None = None
    scope: str | None = None
    granularity: str = "item"
    include_ai: bool = False

    def __post_init__(self):
        chosen = [x for x in (self.mechanism, self.skill, self.scope) if x is not None]
        if len(chosen) != 1:
            raise ValueError("selector needs exactly one of mechanism=, skill=, scope=")
        if self.granularity not in ("item", "unit"):
            raise ValueError(f"granularity must be item|unit, got {self.granularity!r}")

    @classmethod
    def parse(cls, text: str) -> "Selector":
        """Parse CLI/query syntax like "mechanism=brush" or
        "mechanism=word_level,granularity=unit"."""
        kwargs: dict = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"bad selector fragment {part!r}, expected key=value")
            key, value = part.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key == "include_ai":
                kwargs[key] = value.lower() in ("1", "true", "yes")
            elif key in ("mechanism", "skill", "scope", "granularity"):
                kwargs[key] = value
            else:
                raise ValueError(f"unknown selector key {key!r}")
        return cls(**kwargs)


@dataclass
class AnnotationMatrix:
    """Annotator x unit values with missing cells simply absent."""

    annotators: list[str] = field(default_factory=list)
    units: list[str] = field(default_factory=list)
    values: dict[tuple[str, str], object] = field(default_factory=dict)

    def set(self, annotator: str, unit: str, value) -> None:
        if annotator not in self._annotator_set:
            self._annotator_set.add(annotator)
            self.annotators.append(annotator)
        if unit not in self._unit_set:
            self._unit_set.add(unit)
            self.units.append(unit)
        self.values[(annotator, unit)] = value

    def get(self, annotator: str, unit: str, default=None):
        return self.values.get((annotator, unit), default)

    def __post_init__(self):
        self._annotator_set = set(self.annotators)
        self._unit_set = set(self.units)

    def to_rows(self) -> list[list]:
        """Dense row-per-annotator view with None for missing cells."""
        return [[self.values.get((a, u)) for u in self.units] for a in self.annotators]

    def column(self, unit: str) -> list:
        return [self.values[(a, unit)] for a in self.annotators if (a, unit) in self.values]

    def restrict_annotators(self, keep: list[str]) -> "AnnotationMatrix":
        sub = AnnotationMatrix(annotators=list(keep), units=list(self.units))
        sub.values = {
            (a, u): v for (a, u), v in self.values.items() if a in set(keep)
        }
        return sub

    def map_values(self, fn) -> "AnnotationMatrix":
        """Apply fn to each cell; cells mapped to None are dropped."""
        out = AnnotationMatrix(annotators=list(self.annotators), units=list(self.units))
        for key, value in self.values.items():
            mapped = fn(value)
            if mapped is not None:
                out.values[key] = mapped
        return out

    @property
    def n_cells(self) -> int:
        return len(self.values)


def _item_unit(record: AnnotationRecord) -> str:
    return f"{record.item.prompt_id}/{record.item.model_id}"


class AnnotationStore:
    """File-backed store: `<root>/<task_id>.jsonl` logs plus `<task_id>.task.json` configs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._global_lock = threading.Lock()
        self._counts: dict[str, int] = {}

    # -- tasks ---------------------------------------------------------------

    def _task_path(self, task_id: str) -> Path:
        return self.root / f"{task_id}.task.json"

    def _log_path(self, task_id: str) -> Path:
        return self.root / f"{task_id}.jsonl"

    def register_task(self, cfg: TaskConfig) -> None:
        self._task_path(cfg.id).write_text(
            json.dumps(cfg.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    def get_task(self, task_id: str) -> TaskConfig:
        path = self._task_path(task_id)
        if not path.exists():
            raise UnknownTaskError(f"no such task: {task_id!r}")
        return TaskConfig.from_json_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_tasks(self) -> list[TaskConfig]:
        return [
            TaskConfig.from_json_dict(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(self.root.glob("*.task.json"))
        ]

    # -- records -------------------------------------------------------------

    def _lock_for(self, task_id: str) -> threading.Lock:
        with self._global_lock:
            return self._locks[task_id]

    def _line_count(self, task_id: str) -> int:
        # cached so repeated appends stay O(1); invalidated nowhere because
        # this store is the single writer for its root directory
        if task_id not in self._counts:
            path = self._log_path(task_id)
            count = 0
            if path.exists():
                with path.open("r", encoding="utf-8") as f:
                    count = sum(1 for _ in f)
            self._counts[task_id] = count
        return self._counts[task_id]

    def _validate_for_task(self, record: AnnotationRecord, cfg: TaskConfig) -> None:
        validate_payload(record.mechanism, record.payload, allow_unsure=cfg.allow_unsure)
        if record.mechanism not in cfg.annotations:
            raise StoreError(
                f"task {cfg.id!r} does not collect mechanism {record.mechanism!r}"
            )

    def append(self, record: AnnotationRecord) -> int:
        """Durably append one record; returns its 0-based position in the log."""
        cfg = self.get_task(record.task_id)
        self._validate_for_task(record, cfg)
        line = record.to_json_line()
        with self._lock_for(record.task_id):
            position = self._line_count(record.task_id)
            with self._log_path(record.task_id).open("a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
            self._counts[record.task_id] = position + 1
            return position

    def append_many(self, records: list[AnnotationRecord]) -> int:
        """Append a batch of records to one task's log; returns the first position."""
        if not records:
            raise StoreError("append_many needs at least one record")
        task_ids = {r.task_id for r in records}
        if len(task_ids) != 1:
            raise StoreError("append_many takes records for a single task")
        task_id = records[0].task_id
        cfg = self.get_task(task_id)
        for r in records:
            self._validate_for_task(r, cfg)
        lines = "".join(r.to_json_line() + "\n" for r in records)
        with self._lock_for(task_id):
            first = self._line_count(task_id)
            with self._log_path(task_id).open("a", encoding="utf-8") as f:
                f.write(lines)
                f.flush()
            self._counts[task_id] = first + len(records)
            return first

    def records(self, task_id: str) -> list[AnnotationRecord]:
        """All records in append order (the raw audit log)."""
        self.get_task(task_id)
        path = self._log_path(task_id)
        if not path.exists():
            return []
        out = []
        with path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    out.append(AnnotationRecord.from_json_line(line))
        return out

    def effective_records(self, task_id: str) -> list[AnnotationRecord]:
        """Last-write-wins view over the logical record key, in first-seen key order."""
        latest: dict[tuple, AnnotationRecord] = {}
        order: list[tuple] = []
        for record in self.records(task_id):
            key = record.logical_key()
            if key not in latest:
                order.append(key)
            latest[key] = record
        return [latest[k] for k in order]

    # -- matrices ------------------------------------------------------------

    def load_matrix(self, task_id: str, selector: Selector) -> AnnotationMatrix:
        """Annotator x unit matrix for one slice of a task's annotations.

        Unit keys: "<prompt>/<model>" for item-scoped payloads (brush masks,
        word sheets, whole-image ratings), "<prompt>/<model>#<uid>" for
        question-scoped ones, and "<prompt>/<model>#w<i>" / "#g<i>" for
        word/gap tiles at unit granularity. Values are floats for brush ratios
        and word accuracies, ints for Likert ratings and tiles, and
        yes/no/unsure strings for binary answers.
        """
        matrix = AnnotationMatrix()
        for record in self.effective_records(task_id):
            if record.ai_prefilled and not selector.include_ai:
                continue
            if selector.mechanism is not None and record.mechanism != selector.mechanism:
                continue
            self._emit_cells(matrix, record, selector)
        return matrix

    def _emit_cells(self, matrix: AnnotationMatrix, record: AnnotationRecord, selector: Selector) -> None:
        item = _item_unit(record)
        payload = record.payload
        annotator = record.annotator_id

        if isinstance(payload, BqaAnswerSet):
            if selector.skill is not None:
                return self._emit_skill_cells(matrix, record, selector)
            for answer in payload.answers:
                if selector.scope is not None and answer.question_uid != selector.scope:
                    continue
                matrix.set(annotator, f"{item}#{answer.question_uid}", answer.label)
        elif isinstance(payload, LikertAnswer):
            if selector.skill is not None:
                return self._emit_skill_cells(matrix, record, selector)
            if selector.scope is not None and payload.scope != selector.scope:
                return
            matrix.set(annotator, f"{item}#{payload.scope}", payload.value)
        elif isinstance(payload, BrushMask):
            if selector.skill is not None and selector.skill != "artifacts":
                return
            if selector.scope is not None:
                return
            matrix.set(annotator, item, mask_to_ratio(payload))
        elif isinstance(payload, WordTileSheet):
            if selector.skill is not None and selector.skill != "text_rendering":
                return
            if selector.scope is not None:
                return
            if selector.granularity == "unit":
                for i, label in enumerate(payload.word_labels):
                    matrix.set(annotator, f"{item}#w{i}", 1 if label == "correct" else 0)
                for i, label in enumerate(payload.gap_labels):
                    matrix.set(annotator, f"{item}#g{i}", 1 if label == "clean" else 0)
            else:
                matrix.set(annotator, item, score_word_level(payload))

    def _emit_skill_cells(self, matrix: AnnotationMatrix, record: AnnotationRecord, selector: Selector) -> None:
        """Skill selectors need the prompt's node map; resolved lazily per task."""
        nodes = self._skill_nodes(record.task_id).get(record.item.prompt_id, {})
        item = _item_unit(record)
        payload = record.payload
        if isinstance(payload, BqaAnswerSet):
            for answer in payload.answers:
                if nodes.get(answer.question_uid) == selector.skill:
                    matrix.set(record.annotator_id, f"{item}#{answer.question_uid}", answer.label)
        elif isinstance(payload, LikertAnswer):
            skill = nodes.get(payload.scope, payload.scope if payload.scope == selector.skill else None)
            if skill == selector.skill:
                matrix.set(record.annotator_id, f"{item}#{payload.scope}", payload.value)

    def _skill_nodes(self, task_id: str) -> dict[str, dict[str, str]]:
        """prompt_id -> {uid -> skill}, loaded from the task's prompts file."""
        if not hasattr(self, "_skill_node_cache"):
            self._skill_node_cache: dict[str, dict] = {}
        if task_id not in self._skill_node_cache:
            from .prompts import load_tagged_prompts

            cfg = self.get_task(task_id)
            prompts_path = Path(cfg.prompts_file)
            if not prompts_path.is_absolute():
                prompts_path = self.root / prompts_path
            mapping: dict[str, dict[str, str]] = {}
            if prompts_path.exists():
                for p in load_tagged_prompts(prompts_path):
                    mapping[p.prompt_id] = {n.uid: n.skill for n in p.nodes}
            self._skill_node_cache[task_id] = mapping
        return self._skill_node_cache[task_id]
