"""Synthetic annotator panels with mechanism-specific noise models.

The simulator exists to exercise the full analytics pipeline at desk scale
and to encode the qualitative protocol-reliability orderings as regression
properties; it does not try to model human annotators faithfully. Simulated
records are ordinary AnnotationRecords and flow through the store, scoring,
and reliability modules with no special-casing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .masks import BrushMask
from .prompts import QuestionNode, TaggedPrompt, save_tagged_prompts
from .records import (
    AnnotationRecord,
    BqaAnswer,
    BqaAnswerSet,
    ItemKey,
    LikertAnswer,
    TaskConfig,
    WordTileSheet,
)
from .reliability import ReliabilityConfig, ReliabilityReport, build_report
from .store import AnnotationStore, Selector
from .taxonomy import ANCHOR_LIKERT_SCALE, LIKERT_SCALE, load_taxonomy

# Simulated logs carry a fixed timestamp so replays are byte-identical.
_SIM_TIMESTAMP = "1970-01-01T00:00:00.000000Z"

# Stream-family tags for per-(annotator, item) PRNG derivation.
_TAG_LIKERT = 10
_TAG_BRUSH = 11
_TAG_WORDS = 12
_TAG_BQA = 13
_TAG_TRUTH = 14


@dataclass(frozen=True)
class NoiseProfile:
    """Behavioral knobs for one synthetic annotator.

    `bias` and `noise_sd` act in the active mechanism's units (Likert points,
    boundary pixels); `flip_prob` flips binary judgments (words and yes/no
    answers); `gap_mark_prob` spuriously marks clean gaps; `knowledge_gap_prob`
    turns binary answers into unsure.
    """

    annotator_id: str
    bias: float = 0.0
    noise_sd: float = 0.0
    flip_prob: float = 0.0
    gap_mark_prob: float = 0.0
    brush_jitter_px: float = 0.0
    knowledge_gap_prob: float = 0.0

    def __post_init__(self):
        for name in ("flip_prob", "gap_mark_prob", "knowledge_gap_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.noise_sd < 0 or self.brush_jitter_px < 0:
            raise ValueError("noise magnitudes must be non-negative")

    @classmethod
    def from_json_dict(cls, d: dict) -> "NoiseProfile":
        return cls(**d)

    def replace(self, **changes) -> "NoiseProfile":
        from dataclasses import replace

        return replace(self, **changes)


# -- ground truth variants ------------------------------------------------------


@dataclass(frozen=True)
class LikertTruth:
    latent: float  # in scale units


@dataclass(frozen=True)
class BrushTruth:
    rect: tuple[int, int, int, int]  # x, y, w, h
    size: tuple[int, int]  # image width, height


@dataclass(frozen=True)
class WordTruth:
    words: tuple[str, ...]
    word_ok: tuple[bool, ...]
    gap_clean: tuple[bool, ...]


@dataclass(frozen=True)
class BqaTruth:
    labels: dict[str, str]  # uid -> yes|no


def _rng(seed: int, tag: int, annotator_index: int, item_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag, annotator_index, item_index])


def _clamped_likert(latent: float, profile: NoiseProfile, rng, scale) -> int:
    lo, hi = scale
    value = round(latent + profile.bias + (rng.normal(0.0, profile.noise_sd) if profile.noise_sd else 0.0))
    return int(min(hi, max(lo, value)))


def _jittered_mask(truth: BrushTruth, profile: NoiseProfile, rng) -> BrushMask:
    width, height = truth.size
    x, y, w, h = truth.rect
    offset = profile.bias + (rng.normal(0.0, profile.brush_jitter_px) if profile.brush_jitter_px else 0.0)
    o = int(round(offset))
    x0, y0 = max(0, x - o), max(0, y - o)
    x1, y1 = min(width, x + w + o), min(height, y + h + o)
    grid = np.zeros((height, width), dtype=np.uint8)
    if x1 > x0 and y1 > y0:
        grid[y0:y1, x0:x1] = 1
    return BrushMask.from_array(grid)


def _noisy_sheet(truth: WordTruth, profile: NoiseProfile, rng) -> WordTileSheet:
    word_labels = []
    for ok in truth.word_ok:
        judged = ok if rng.random() >= profile.flip_prob else not ok
        word_labels.append("correct" if judged else "incorrect")
    gap_labels = []
    for clean in truth.gap_clean:
        if clean:
            judged = rng.random() >= profile.gap_mark_prob
        else:
            judged = rng.random() < profile.flip_prob  # missed insertion
        gap_labels.append("clean" if judged else "incorrect")
    return WordTileSheet(truth.words, tuple(word_labels), tuple(gap_labels))


def _noisy_bqa(truth: BqaTruth, profile: NoiseProfile, rng) -> BqaAnswerSet:
    answers = []
    for uid in sorted(truth.labels):
        if rng.random() < profile.knowledge_gap_prob:
            answers.append(BqaAnswer(uid, "unsure"))
            continue
        label = truth.labels[uid]
        if rng.random() < profile.flip_prob:
            label = "no" if label == "yes" else "yes"
        answers.append(BqaAnswer(uid, label))
    return BqaAnswerSet(tuple(answers))


def simulate_panel(
    task_id: str,
    mechanism: str,
    items: list[tuple[ItemKey, object]],
    profiles: list[NoiseProfile],
    seed: int,
    scope: str = "",
) -> list[AnnotationRecord]:
    """Generate one panel's records for a single mechanism.

    `items` pairs each ItemKey with its ground truth (LikertTruth, BrushTruth,
    WordTruth, or BqaTruth matching the mechanism). Deterministic per seed;
    every (annotator, item) pair draws from its own PRNG stream.
    """
    records = []
    for a_index, profile in enumerate(profiles):
        for i_index, (item, truth) in enumerate(items):
            if mechanism in ("likert", "aesthetics", "anchor_likert"):
                if not isinstance(truth, LikertTruth):
                    raise ValueError(f"{mechanism} needs LikertTruth, got {type(truth).__name__}")
                scale = ANCHOR_LIKERT_SCALE if mechanism == "anchor_likert" else LIKERT_SCALE
                rng = _rng(seed, _TAG_LIKERT, a_index, i_index)
                payload = LikertAnswer(scope, _clamped_likert(truth.latent, profile, rng, scale), *scale)
            elif mechanism == "brush":
                if not isinstance(truth, BrushTruth):
                    raise ValueError("brush needs BrushTruth")
                payload = _jittered_mask(truth, profile, _rng(seed, _TAG_BRUSH, a_index, i_index))
            elif mechanism == "word_level":
                if not isinstance(truth, WordTruth):
                    raise ValueError("word_level needs WordTruth")
                payload = _noisy_sheet(truth, profile, _rng(seed, _TAG_WORDS, a_index, i_index))
            elif mechanism in ("bqa", "anchor_bqa"):
                if not isinstance(truth, BqaTruth):
                    raise ValueError("bqa needs BqaTruth")
                payload = _noisy_bqa(truth, profile, _rng(seed, _TAG_BQA, a_index, i_index))
            else:
                raise ValueError(f"unknown mechanism: {mechanism!r}")
            records.append(
                AnnotationRecord(
                    task_id=task_id,
                    item=item,
                    annotator_id=profile.annotator_id,
                    mechanism=mechanism,
                    payload=payload,
                    ai_prefilled=False,
                    timestamp=_SIM_TIMESTAMP,
                )
            )
    return records


# -- scenario ---------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    seed: int
    profiles: list[NoiseProfile]
    artifact_arm: dict
    text_arm: dict
    anchor_arm: dict
    full_suite: dict

    @classmethod
    def from_json_dict(cls, d: dict) -> "Scenario":
        return cls(
            name=d.get("name", "scenario"),
            seed=int(d.get("seed", 0)),
            profiles=[NoiseProfile.from_json_dict(p) for p in d["profiles"]],
            artifact_arm=d.get("artifact_arm", {}),
            text_arm=d.get("text_arm", {}),
            anchor_arm=d.get("anchor_arm", {}),
            full_suite=d.get("full_suite", {}),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "scenario_default.json"


def _items_for(prompt_prefix: str, n_prompts: int, models: list[str]) -> list[ItemKey]:
    return [
        ItemKey(f"{prompt_prefix}{p:03d}", model, f"images/{model}/{prompt_prefix}{p:03d}.png")
        for p in range(n_prompts)
        for model in models
    ]


def _register_arm_task(store: AnnotationStore, task_id: str, name: str, mechanisms: list[str], models: list[str]) -> TaskConfig:
    cfg = TaskConfig(
        id=task_id,
        name=name,
        enable_bqa_ai=False,
        shuffle_images=False,
        annotations=tuple(mechanisms),
        dataset_version="sim-v1",
        prompts_file=f"{task_id}.prompts.json",
        models=tuple(models),
    )
    store.register_task(cfg)
    return cfg


# -- protocol comparison ------------------------------------------------------------


@dataclass
class ArmResult:
    name: str
    mechanism: str
    metric: str
    alpha: float | None
    alpha_reason: str | None
    edr: float | None
    unsure_rate: float | None
    report: ReliabilityReport | None = None  # populated when full_reports

    def to_json_dict(self) -> dict:
        d = {
            "name": self.name,
            "mechanism": self.mechanism,
            "metric": self.metric,
            "alpha": self.alpha,
            "alpha_reason": self.alpha_reason,
            "edr": self.edr,
            "unsure_rate": self.unsure_rate,
        }
        if self.report is not None:
            d["report"] = self.report.to_json_dict()
        return d


@dataclass
class ComparisonReport:
    scenario: str
    seed: int
    arms: dict[str, ArmResult] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "arms": {k: v.to_json_dict() for k, v in self.arms.items()},
        }


def _arm_stats(
    store: AnnotationStore,
    task_id: str,
    selector: Selector,
    metric: str,
    scale: tuple[float, float] | None,
    cfg: ReliabilityConfig,
    full: bool,
    name: str,
    mechanism: str,
) -> ArmResult:
    from dataclasses import replace

    matrix = store.load_matrix(task_id, selector)
    if full:
        report = build_report(matrix, replace(cfg, metric=metric), scale=scale)
        return ArmResult(name, mechanism, metric, report.alpha, report.alpha_reason,
                         report.edr, report.unsure_rate, report)
    # cheap path: alpha + EDR + unsure only
    from .reliability import apply_unsure_policy, bqa_numeric, edr as edr_fn, krippendorff_alpha

    has_labels = any(isinstance(v, str) for v in matrix.values.values())
    unsure_rate = None
    if has_labels:
        total = len(matrix.values)
        unsure_rate = sum(1 for v in matrix.values.values() if v == "unsure") / total if total else None
        alpha = krippendorff_alpha(apply_unsure_policy(matrix, cfg.unsure_policy), metric)
        edr_matrix = bqa_numeric(matrix)
        edr_scale = scale or (0.0, 1.0)
    else:
        alpha = krippendorff_alpha(matrix, metric)
        edr_matrix = matrix
        edr_scale = scale
    edr_value = None
    if edr_scale is not None:
        try:
            edr_value = edr_fn(edr_matrix, edr_scale, cfg.edr_threshold_fraction)
        except ValueError:
            edr_value = None
    return ArmResult(name, mechanism, metric, alpha.value, alpha.reason, edr_value, unsure_rate)


def protocol_comparison_experiment(
    scenario: Scenario,
    store: AnnotationStore,
    seed: int | None = None,
    full_reports: bool = True,
    rel_cfg: ReliabilityConfig | None = None,
) -> ComparisonReport:
    """Run the three protocol comparisons on synthetic panels over a shared
    latent ground truth: global Likert vs brush for artifacts, BQA vs Likert
    vs word tiles for text rendering, and no-anchor vs anchor binary answers
    for reference-dependent questions."""
    seed = scenario.seed if seed is None else seed
    cfg = rel_cfg or ReliabilityConfig(seed=seed)
    report = ComparisonReport(scenario=scenario.name, seed=seed)
    profiles = scenario.profiles

    # Arm 1: visual artifacts, Likert vs brush over the same latent regions.
    arm = scenario.artifact_arm
    models = list(arm.get("models", ["model_a", "model_b", "model_c"]))
    n_prompts = int(arm.get("n_prompts", 30))
    width, height = arm.get("image_size", [160, 160])
    max_frac = float(arm.get("max_area_fraction", 0.28))
    items = _items_for("art", n_prompts, models)
    task = _register_arm_task(store, f"sim-artifacts-{seed}", "Simulated artifacts arm",
                              ["likert", "brush"], models)
    likert_items = []
    brush_items = []
    for i, item in enumerate(items):
        rng = np.random.default_rng([seed, _TAG_TRUTH, 1, i])
        frac = float(rng.uniform(0.02, max_frac))
        side = max(2, int(round(math.sqrt(frac * width * height))))
        x = int(rng.integers(0, max(1, width - side)))
        y = int(rng.integers(0, max(1, height - side)))
        brush_items.append((item, BrushTruth(rect=(x, y, side, side), size=(width, height))))
        likert_items.append((item, LikertTruth(latent=1.0 + 4.0 * (1.0 - frac / max_frac))))
    store.append_many(simulate_panel(task.id, "likert", likert_items, profiles, seed, scope="artifacts"))
    store.append_many(simulate_panel(task.id, "brush", brush_items, profiles, seed))
    report.arms["artifact_likert"] = _arm_stats(
        store, task.id, Selector(mechanism="likert"), "interval", (1, 5), cfg, full_reports,
        "artifact_likert", "likert")
    report.arms["artifact_brush"] = _arm_stats(
        store, task.id, Selector(mechanism="brush"), "interval", (0, 1), cfg, full_reports,
        "artifact_brush", "brush")

    # Arm 2: text rendering, BQA vs Likert vs word tiles.
    arm = scenario.text_arm
    models = list(arm.get("models", ["model_a", "model_b", "model_c"]))
    n_prompts = int(arm.get("n_prompts", 30))
    min_words = int(arm.get("min_words", 3))
    max_words = int(arm.get("max_words", 6))
    gap_clean_prob = float(arm.get("gap_clean_prob", 0.9))
    items = _items_for("txt", n_prompts, models)
    task = _register_arm_task(store, f"sim-text-{seed}", "Simulated text arm",
                              ["bqa", "likert", "word_level"], models)
    bqa_items = []
    likert_items = []
    word_items = []
    for i, item in enumerate(items):
        rng = np.random.default_rng([seed, _TAG_TRUTH, 2, i])
        n_words = int(rng.integers(min_words, max_words + 1))
        words = tuple(f"word{j}" for j in range(n_words))
        quality = float(rng.uniform(0.3, 0.95))
        n_ok = int(round(quality * n_words))
        ok_positions = set(rng.permutation(n_words)[:n_ok].tolist())
        word_ok = tuple(j in ok_positions for j in range(n_words))
        gap_clean = tuple(bool(rng.random() < gap_clean_prob) for _ in range(n_words + 1))
        truth = WordTruth(words=words, word_ok=word_ok, gap_clean=gap_clean)
        word_items.append((item, truth))
        all_ok = all(word_ok) and all(gap_clean)
        bqa_items.append((item, BqaTruth(labels={"t1": "yes" if all_ok else "no"})))
        accuracy = max(0, sum(word_ok) - sum(1 for g in gap_clean if not g)) / n_words
        likert_items.append((item, LikertTruth(latent=1.0 + 4.0 * accuracy)))
    store.append_many(simulate_panel(task.id, "bqa", bqa_items, profiles, seed))
    store.append_many(simulate_panel(task.id, "likert", likert_items, profiles, seed, scope="text_rendering"))
    store.append_many(simulate_panel(task.id, "word_level", word_items, profiles, seed))
    report.arms["text_bqa"] = _arm_stats(
        store, task.id, Selector(mechanism="bqa"), "nominal", (0, 1), cfg, full_reports,
        "text_bqa", "bqa")
    report.arms["text_likert"] = _arm_stats(
        store, task.id, Selector(mechanism="likert"), "interval", (1, 5), cfg, full_reports,
        "text_likert", "likert")
    report.arms["text_word"] = _arm_stats(
        store, task.id, Selector(mechanism="word_level"), "interval", (0, 1), cfg, full_reports,
        "text_word", "word_level")
    report.arms["text_word_tiles"] = _arm_stats(
        store, task.id, Selector(mechanism="word_level", granularity="unit"), "nominal", None,
        cfg, full_reports, "text_word_tiles", "word_level")

    # Arm 3: reference-dependent questions, with and without anchors.
    arm = scenario.anchor_arm
    models = list(arm.get("models", ["model_a", "model_b", "model_c"]))
    n_prompts = int(arm.get("n_prompts", 30))
    gap_no_anchor = float(arm.get("no_anchor_knowledge_gap", 0.63))
    gap_anchor = float(arm.get("anchor_knowledge_gap", 0.025))
    items = _items_for("anc", n_prompts, models)
    bqa_items = []
    for i, item in enumerate(items):
        rng = np.random.default_rng([seed, _TAG_TRUTH, 3, i])
        bqa_items.append((item, BqaTruth(labels={"r1": "yes" if rng.random() < 0.55 else "no"})))
    no_anchor_profiles = [p.replace(knowledge_gap_prob=gap_no_anchor) for p in profiles]
    anchor_profiles = [p.replace(knowledge_gap_prob=gap_anchor) for p in profiles]
    task_no = _register_arm_task(store, f"sim-anchor-no-{seed}", "Simulated no-anchor arm", ["bqa"], models)
    task_yes = _register_arm_task(store, f"sim-anchor-yes-{seed}", "Simulated anchor arm", ["anchor_bqa"], models)
    store.append_many(simulate_panel(task_no.id, "bqa", bqa_items, no_anchor_profiles, seed))
    store.append_many(simulate_panel(task_yes.id, "anchor_bqa", bqa_items, anchor_profiles, seed))
    report.arms["anchor_none"] = _arm_stats(
        store, task_no.id, Selector(mechanism="bqa"), "nominal", (0, 1), cfg, full_reports,
        "anchor_none", "bqa")
    report.arms["anchor_bqa"] = _arm_stats(
        store, task_yes.id, Selector(mechanism="anchor_bqa"), "nominal", (0, 1), cfg, full_reports,
        "anchor_bqa", "anchor_bqa")
    return report


# -- full evaluation suite -----------------------------------------------------------


@dataclass
class FullSuiteResult:
    task: TaskConfig
    prompts: list[TaggedPrompt]


def simulate_full_suite(scenario: Scenario, store: AnnotationStore, seed: int | None = None) -> FullSuiteResult:
    """Simulate a complete multi-model evaluation across all 18 skills.

    Latent per-model quality (with per-skill jitter) drives every mechanism's
    ground truth, so model rankings are well-defined and recoverable from the
    aggregated score matrix.
    """
    seed = scenario.seed if seed is None else seed
    suite = scenario.full_suite
    models = list(suite.get("models", ["model_a", "model_b", "model_c", "model_d"]))
    base_quality = list(suite.get("model_quality", [0.92, 0.78, 0.64, 0.50]))
    if len(base_quality) != len(models):
        raise ValueError("model_quality must align with models")
    prompts_per_skill = int(suite.get("prompts_per_skill", 4))
    nodes_per_prompt = int(suite.get("nodes_per_prompt", 4))
    words_per_prompt = int(suite.get("words_per_prompt", 4))
    quality_jitter = float(suite.get("quality_jitter", 0.03))
    profiles = scenario.profiles

    skills = load_taxonomy()
    rng_q = np.random.default_rng([seed, _TAG_TRUTH, 4])
    quality = {
        (model, skill.id): float(np.clip(base_quality[m] + rng_q.uniform(-quality_jitter, quality_jitter), 0.02, 0.98))
        for m, model in enumerate(models)
        for skill in skills
    }

    prompts: list[TaggedPrompt] = []
    panel_inputs: dict[str, list[tuple[ItemKey, object]]] = {
        "bqa": [], "anchor_likert": [], "word_level": [], "brush": [], "aesthetics": [],
    }
    task_id = f"sim-suite-{seed}"
    for skill_index, skill in enumerate(skills):
        for p in range(prompts_per_skill):
            prompt_id = f"suite-{skill.id}-{p:02d}"
            if skill.mechanism == "bqa":
                nodes = tuple(
                    QuestionNode(
                        uid=f"q{j}", skill=skill.id,
                        subskill=skill.subskills[j % len(skill.subskills)] if skill.subskills else "",
                        phrase=f"{skill.id} {j}", question=f"Does the image satisfy {skill.id} constraint {j}?",
                        node_type="presence", depends_on=(),
                    )
                    for j in range(nodes_per_prompt)
                )
            elif skill.mechanism == "word_level":
                nodes = (QuestionNode(
                    uid="q0", skill=skill.id, subskill="accuracy",
                    phrase="expected text", question="Is the expected text rendered?",
                    node_type="presence", depends_on=()),)
            else:
                nodes = (QuestionNode(
                    uid="q0", skill=skill.id,
                    subskill=skill.subskills[0] if skill.subskills else "",
                    phrase=f"{skill.id} target", question=f"Does the image match the {skill.id} target?",
                    node_type="presence", depends_on=()),)
            prompts.append(TaggedPrompt(prompt_id=prompt_id, text=f"simulated prompt {prompt_id}",
                                        nodes=nodes, source="simulator"))
            for m, model in enumerate(models):
                item = ItemKey(prompt_id, model, f"images/{model}/{prompt_id}.png")
                q = quality[(model, skill.id)]
                rng = np.random.default_rng([seed, _TAG_TRUTH, 5, m, skill_index, p])
                if skill.mechanism == "bqa":
                    n_yes = int(round(q * nodes_per_prompt))
                    yes_positions = set(rng.permutation(nodes_per_prompt)[:n_yes].tolist())
                    labels = {
                        f"q{j}": "yes" if j in yes_positions else "no"
                        for j in range(nodes_per_prompt)
                    }
                    panel_inputs["bqa"].append((item, BqaTruth(labels=labels)))
                elif skill.mechanism == "anchor_likert":
                    panel_inputs["anchor_likert"].append((item, LikertTruth(latent=5.0 * q)))
                elif skill.mechanism == "word_level":
                    n_ok = int(round(q * words_per_prompt))
                    ok_positions = set(rng.permutation(words_per_prompt)[:n_ok].tolist())
                    panel_inputs["word_level"].append((item, WordTruth(
                        words=tuple(f"word{j}" for j in range(words_per_prompt)),
                        word_ok=tuple(j in ok_positions for j in range(words_per_prompt)),
                        gap_clean=tuple(True for _ in range(words_per_prompt + 1)),
                    )))
                elif skill.mechanism == "brush":
                    width = height = 120
                    frac = (1.0 - q) * 0.3
                    side = max(1, int(round(math.sqrt(frac * width * height))))
                    panel_inputs["brush"].append((item, BrushTruth(rect=(10, 10, side, side), size=(width, height))))
                else:  # likert -> aesthetics
                    panel_inputs["aesthetics"].append((item, LikertTruth(latent=1.0 + 4.0 * q)))

    prompts_file = f"{task_id}.prompts.json"
    save_tagged_prompts(prompts, store.root / prompts_file)
    task = TaskConfig(
        id=task_id,
        name="Simulated full suite",
        enable_bqa_ai=False,
        shuffle_images=False,
        annotations=("bqa", "anchor_likert", "word_level", "brush", "aesthetics"),
        dataset_version="sim-v1",
        prompts_file=prompts_file,
        models=tuple(models),
    )
    store.register_task(task)

    for mechanism, pairs in panel_inputs.items():
        if not pairs:
            continue
        if mechanism == "anchor_likert":
            # scope must name the prompt's question node (q0 by construction)
            batch = []
            for a_index, profile in enumerate(profiles):
                for i_index, (item, truth) in enumerate(pairs):
                    rng = _rng(seed, _TAG_LIKERT, a_index, 10_000 + i_index)
                    payload = LikertAnswer("q0", _clamped_likert(truth.latent, profile, rng, ANCHOR_LIKERT_SCALE),
                                           *ANCHOR_LIKERT_SCALE)
                    batch.append(AnnotationRecord(
                        task_id=task.id, item=item, annotator_id=profile.annotator_id,
                        mechanism="anchor_likert", payload=payload, ai_prefilled=False,
                        timestamp=_SIM_TIMESTAMP,
                    ))
            store.append_many(batch)
        elif mechanism == "aesthetics":
            store.append_many(simulate_panel(task.id, "aesthetics", pairs, profiles, seed, scope="aesthetic_quality"))
        else:
            store.append_many(simulate_panel(task.id, mechanism, pairs, profiles, seed))
    return FullSuiteResult(task=task, prompts=prompts)
