"""Scoring: dependency gating, per-mechanism scoring rules, normalization to
[0, 1], and aggregation into the model x skill score matrix.

All math lives here; the service, CLI, agents, and UI only move data.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .masks import BrushMask, mask_to_ratio
from .prompts import TaggedPrompt
from .records import BqaAnswerSet, LikertAnswer, WordTileSheet
from .taxonomy import SKILL_IDS

if TYPE_CHECKING:
    from .records import TaskConfig
    from .store import AnnotationStore

GATE_POLICIES = ("fail", "skip")


@dataclass(frozen=True)
class GatedAnswerSet:
    """Effective per-question labels after dependency gating.

    A question is `gated` exactly when some ancestor was answered `no`; its
    own answer (or absence) no longer matters.
    """

    effective: dict[str, str]  # uid -> yes | no | unsure | gated
    policy: str = "fail"

    def labels(self, uids: Iterable[str] | None = None) -> list[str]:
        keys = self.effective.keys() if uids is None else uids
        return [self.effective[u] for u in keys]


def gate_answers(prompt: TaggedPrompt, raw: dict[str, str], policy: str = "fail") -> GatedAnswerSet:
    """Apply dependency gating: descendants of any `no`-answered question become `gated`.

    Missing uids are treated as `unsure`. Raises on labels for unknown uids
    or an invalid policy.
    """
    if policy not in GATE_POLICIES:
        raise ValueError(f"policy must be one of {GATE_POLICIES}")
    uids = {n.uid for n in prompt.nodes}
    unknown = set(raw) - uids
    if unknown:
        raise ValueError(f"answers reference unknown uids: {sorted(unknown)}")

    children: dict[str, list[str]] = defaultdict(list)
    for n in prompt.nodes:
        for dep in n.depends_on:
            children[dep].append(n.uid)

    # Gated set = strict descendants of raw-`no` nodes. (Equivalent to the
    # recursive "ancestor's effective answer is no" rule on a DAG.)
    gated: set[str] = set()
    queue = deque(uid for uid in uids if raw.get(uid) == "no")
    seen_sources = set(queue)
    while queue:
        uid = queue.popleft()
        for child in children[uid]:
            if child not in gated:
                gated.add(child)
                if child not in seen_sources:
                    queue.append(child)
                    seen_sources.add(child)

    effective = {}
    for uid in uids:
        if uid in gated:
            effective[uid] = "gated"
        else:
            effective[uid] = raw.get(uid, "unsure")
    return GatedAnswerSet(effective=effective, policy=policy)


def score_bqa(
    gated: GatedAnswerSet, uids: Iterable[str] | None = None
) -> tuple[float | None, float | None]:
    """Binary-question score and unsure rate over the selected questions.

    Score counts `yes` against `yes + no` (+ gated failures under the fail
    policy); `unsure` answers are excluded from both sides and reported as
    their own rate over all selected questions. An empty denominator yields
    None (a missing cell, not zero).
    """
    labels = gated.labels(uids)
    if not labels:
        return None, None
    yes = labels.count("yes")
    no = labels.count("no")
    unsure = labels.count("unsure")
    n_gated = labels.count("gated")
    denominator = yes + no + (n_gated if gated.policy == "fail" else 0)
    score = yes / denominator if denominator > 0 else None
    return score, unsure / len(labels)


def score_word_level(sheet: WordTileSheet) -> float:
    """Text-rendering accuracy: correct words minus spurious-gap marks,
    clamped at zero, over the number of expected words."""
    n_correct = sum(1 for l in sheet.word_labels if l == "correct")
    n_bad_gaps = sum(1 for l in sheet.gap_labels if l == "incorrect")
    return max(0, n_correct - n_bad_gaps) / len(sheet.words)


def score_artifact(masks: Iterable[BrushMask]) -> float:
    """Artifact skill score: 1 - mean marked-pixel ratio (higher is better)."""
    ratios = [mask_to_ratio(m) for m in masks]
    if not ratios:
        raise ValueError("score_artifact needs at least one mask")
    return 1.0 - sum(ratios) / len(ratios)


def normalize(value, mechanism: str) -> float:
    """Map a raw mechanism value onto [0, 1]; scale endpoints map to exactly 0 and 1."""
    if mechanism in ("likert", "aesthetics"):
        v = int(value)
        if not 1 <= v <= 5:
            raise ValueError(f"likert value {v} outside 1..5")
        return (v - 1) / 4
    if mechanism == "anchor_likert":
        v = int(value)
        if not 0 <= v <= 5:
            raise ValueError(f"anchor likert value {v} outside 0..5")
        return v / 5
    if mechanism in ("bqa", "anchor_bqa"):
        if value in ("yes", 1, True):
            return 1.0
        if value in ("no", 0, False):
            return 0.0
        raise ValueError(f"cannot normalize bqa value {value!r}")
    if mechanism in ("word_level", "brush"):
        v = float(value)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{mechanism} value {v} outside [0, 1]")
        return v
    raise ValueError(f"unknown mechanism: {mechanism!r}")


@dataclass
class Cell:
    mean: float
    count: int


@dataclass
class SkillScoreMatrix:
    """Model x skill normalized scores (the per-skill comparison table)."""

    models: list[str]
    skills: list[str]
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)

    def cell(self, model: str, skill: str) -> Cell | None:
        return self.cells.get((model, skill))

    def overall(self, model: str) -> float | None:
        values = [c.mean for (m, s), c in self.cells.items() if m == model]
        return sum(values) / len(values) if values else None

    def to_json_dict(self) -> dict:
        return {
            "models": self.models,
            "skills": self.skills,
            "cells": {
                m: {
                    s: {"mean": c.mean, "count": c.count}
                    for s in self.skills
                    if (c := self.cells.get((m, s))) is not None
                }
                for m in self.models
            },
            "avg": {m: self.overall(m) for m in self.models},
        }

    def to_csv(self, decimals: int = 3) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["model"] + self.skills + ["avg"])
        for m in self.models:
            row: list[str] = [m]
            for s in self.skills:
                c = self.cells.get((m, s))
                row.append("" if c is None else f"{c.mean:.{decimals}f}")
            avg = self.overall(m)
            row.append("" if avg is None else f"{avg:.{decimals}f}")
            writer.writerow(row)
        return out.getvalue()


def _resolve_skill(scope: str, node_skills: dict[str, str]) -> str:
    if scope in node_skills:
        return node_skills[scope]
    if scope in SKILL_IDS:
        return scope
    raise ValueError(f"likert scope {scope!r} is neither a question uid nor a skill id")


SampleMap = dict[str, dict[tuple[str, str], list[float]]]  # annotator -> (model, skill) -> samples


@dataclass(frozen=True)
class ScoreSample:
    """One normalized score contribution: a question node judged by one
    annotator on one image, or one item-scoped judgment (mask, sheet, rating)."""

    annotator_id: str
    prompt_id: str
    model_id: str
    skill: str
    value: float


def iter_score_samples(
    store: "AnnotationStore",
    task: "TaskConfig",
    prompts: list[TaggedPrompt],
    policy: str = "fail",
    include_ai: bool = False,
) -> list[ScoreSample]:
    """Normalized per-sample scores for every annotation in a task.

    Every question node contributes one sample per annotator; item-scoped
    mechanisms (brush, word tiles, aesthetics) contribute one sample per item
    per annotator. Gated questions contribute failures under the fail policy
    and nothing under skip; unsure answers contribute nothing.
    """
    if policy not in GATE_POLICIES:
        raise ValueError(f"policy must be one of {GATE_POLICIES}")
    prompt_map = {p.prompt_id: p for p in prompts}
    skill_of: dict[str, dict[str, str]] = {
        pid: {n.uid: n.skill for n in p.nodes} for pid, p in prompt_map.items()
    }

    records = [
        r for r in store.effective_records(task.id) if include_ai or not r.ai_prefilled
    ]

    # Gating context: (prompt, model, annotator) -> effective labels from the
    # annotator's binary answers, consulted by question-scoped ratings too.
    gates: dict[tuple[str, str, str], GatedAnswerSet] = {}
    for r in records:
        if isinstance(r.payload, BqaAnswerSet) and r.item.prompt_id in prompt_map:
            gate = gate_answers(prompt_map[r.item.prompt_id], r.payload.as_map(), policy)
            gates[(r.item.prompt_id, r.item.model_id, r.annotator_id)] = gate

    samples: list[ScoreSample] = []

    def emit(r, skill: str, value: float) -> None:
        samples.append(ScoreSample(r.annotator_id, r.item.prompt_id, r.item.model_id, skill, value))

    for r in records:
        model = r.item.model_id
        payload = r.payload
        if isinstance(payload, BqaAnswerSet):
            if r.item.prompt_id not in prompt_map:
                raise ValueError(f"no tagged prompt for {r.item.prompt_id!r}")
            node_skills = skill_of[r.item.prompt_id]
            gate = gates[(r.item.prompt_id, model, r.annotator_id)]
            answered = set(payload.as_map())
            for uid, label in gate.effective.items():
                if label == "gated":
                    if policy == "fail":
                        emit(r, node_skills[uid], 0.0)
                    continue
                if uid not in answered or label == "unsure":
                    continue
                emit(r, node_skills[uid], normalize(label, "bqa"))
        elif isinstance(payload, LikertAnswer):
            node_skills = skill_of.get(r.item.prompt_id, {})
            if r.mechanism == "aesthetics":
                skill = "aesthetic_quality"
            else:
                skill = _resolve_skill(payload.scope, node_skills)
            gate = gates.get((r.item.prompt_id, model, r.annotator_id))
            if gate is not None and gate.effective.get(payload.scope) == "gated":
                if policy == "fail":
                    emit(r, skill, 0.0)
                continue
            emit(r, skill, normalize(payload.value, r.mechanism))
        elif isinstance(payload, BrushMask):
            emit(r, "artifacts", 1.0 - mask_to_ratio(payload))
        elif isinstance(payload, WordTileSheet):
            emit(r, "text_rendering", score_word_level(payload))
    return samples


def collect_samples(
    store: "AnnotationStore",
    task: "TaskConfig",
    prompts: list[TaggedPrompt],
    policy: str = "fail",
    include_ai: bool = False,
) -> SampleMap:
    """Samples grouped per annotator, then per (model, skill)."""
    grouped: SampleMap = defaultdict(lambda: defaultdict(list))
    for s in iter_score_samples(store, task, prompts, policy=policy, include_ai=include_ai):
        grouped[s.annotator_id][(s.model_id, s.skill)].append(s.value)
    return {a: dict(by_key) for a, by_key in grouped.items()}


def skill_scores_by_unit(
    samples: list[ScoreSample], granularity: str = "item"
) -> dict[str, dict[str, float]]:
    """skill -> unit -> mean score, where a unit is "<prompt>/<model>" at item
    granularity or the model id at model granularity. Feeds rank alignment."""
    if granularity not in ("item", "model"):
        raise ValueError("granularity must be item|model")
    grouped: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for s in samples:
        unit = f"{s.prompt_id}/{s.model_id}" if granularity == "item" else s.model_id
        grouped[s.skill][unit].append(s.value)
    return {
        skill: {unit: sum(v) / len(v) for unit, v in units.items()}
        for skill, units in grouped.items()
    }


def matrix_from_samples(samples: SampleMap, models: list[str]) -> SkillScoreMatrix:
    pooled: dict[tuple[str, str], list[float]] = defaultdict(list)
    for by_key in samples.values():
        for key, values in by_key.items():
            pooled[key].extend(values)
    skills = [s for s in SKILL_IDS if any((m, s) in pooled for m in models)]
    matrix = SkillScoreMatrix(models=list(models), skills=skills)
    for (model, skill), values in pooled.items():
        if values:
            matrix.cells[(model, skill)] = Cell(mean=sum(values) / len(values), count=len(values))
    return matrix


def build_matrix(
    store: "AnnotationStore",
    task: "TaskConfig",
    prompts: list[TaggedPrompt],
    policy: str = "fail",
    include_ai: bool = False,
    annotators: set[str] | None = None,
) -> SkillScoreMatrix:
    """Aggregate a task's annotations into mean normalized scores per model and
    skill. Cells with no samples stay missing rather than zero."""
    samples = collect_samples(store, task, prompts, policy=policy, include_ai=include_ai)
    if annotators is not None:
        samples = {a: v for a, v in samples.items() if a in annotators}
    return matrix_from_samples(samples, list(task.models))


def write_matrix(matrix: SkillScoreMatrix, json_path=None, csv_path=None, decimals: int = 3) -> None:
    if json_path is not None:
        from pathlib import Path

        Path(json_path).write_text(
            json.dumps(matrix.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if csv_path is not None:
        from pathlib import Path

        Path(csv_path).write_text(matrix.to_csv(decimals=decimals), encoding="utf-8")
