"""Automatic evaluation agents mirroring the human protocol: batched binary
QA, anchor-referenced similarity rating, aesthetics rating, and word/gap
labeling, plus an adapter that ingests masks from an external artifact
detector.

Raw responses are persisted with every verdict so scoring can be replayed
offline without re-querying any endpoint.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .llm import ChatClient, image_content, text_content
from .masks import BrushMask, load_mask_file
from .records import ItemKey, WordTileSheet
from .reliability import AlphaResult, krippendorff_alpha, spearman_rho
from .store import AnnotationMatrix
from .taxonomy import SKILL_IDS

BQA_PROMPT_HEADER = (
    "Answer the following questions about the image with only 'yes', 'no', or 'unsure'.\n"
    "For questions about presence of objects, if the prompt says a/an <object>,\n"
    "but the image has more, this should be flagged as wrong.\n"
    "Answer one question per line in the form 'UID: answer'.\n"
)
BQA_QUESTION_LINE = "UID: {question_uid}  Question: {question_text}"

ANCHOR_LIKERT_PROMPT = (
    "You are evaluating a generated image against reference images.\n"
    "The leftmost image is the generated image. The other image(s) are reference examples.\n"
    "Question UID: {uid}\n"
    "Question: {question}\n"
    'Phrase being evaluated: "{phrase}"\n'
    "\n"
    "Rate how well the generated image matches the reference\n"
    "on a scale from 0 to 5:\n"
    "0 = completely wrong / not present\n"
    "1 = barely recognizable\n"
    "2 = somewhat resembles\n"
    "3 = moderately accurate\n"
    "4 = mostly accurate\n"
    "5 = perfectly matches\n"
    "Or answer 'unsure' if you cannot determine.\n"
)

AESTHETICS_PROMPT = (
    "Rate the overall aesthetics, visual quality, and attractiveness of this image on a scale from 1 to 5:\n"
    "1 = Very poor quality, unattractive, or heavily distorted\n"
    "2 = Poor quality, noticeable flaws or unattractive\n"
    "3 = Average quality, acceptable but not particularly impressive\n"
    "4 = Good quality, visually pleasing with minor to no flaws\n"
    "5 = Excellent quality, highly attractive and visually striking\n"
    "Answer with the number only.\n"
)

WORD_LEVEL_PROMPT_HEADER = (
    "The image was generated from a prompt that should render the following text, one expected word per tile.\n"
    "Label each word tile 'correct' if that word is rendered correctly and legibly, else 'incorrect'\n"
    "(missing words are incorrect). Between words and at both sentence boundaries there are gap tiles;\n"
    "label a gap 'incorrect' if extra or repeated text appears there, else 'clean'.\n"
    "Answer one tile per line in the form 'tile_id: label'.\n"
)


@dataclass(frozen=True)
class AgentConfig:
    """Prompt templates plus validation policy for one evaluation endpoint.

    Endpoint routing, credentials, and temperature live in LLMConfig; this
    config owns what is asked and how strictly answers are validated.
    """

    agent_id: str = "agent"
    reask_limit: int = 1  # re-asks for invalid/missing answers before flagging
    parallelism: int = 4  # bound for callers that fan out across items
    bqa_header: str = BQA_PROMPT_HEADER
    bqa_question_line: str = BQA_QUESTION_LINE
    anchor_likert_template: str = ANCHOR_LIKERT_PROMPT
    aesthetics_template: str = AESTHETICS_PROMPT
    word_level_header: str = WORD_LEVEL_PROMPT_HEADER

    def __post_init__(self):
        if "{question_uid}" not in self.bqa_question_line or "{question_text}" not in self.bqa_question_line:
            raise ValueError("bqa_question_line must contain {question_uid} and {question_text}")
        for placeholder in ("{uid}", "{question}", "{phrase}"):
            if placeholder not in self.anchor_likert_template:
                raise ValueError(f"anchor_likert_template must contain {placeholder}")


@dataclass(frozen=True)
class AgentVerdict:
    question_uid: str
    label: str | int | float | None
    raw_response: str
    valid: bool
    mechanism: str = "bqa"

    def to_json_dict(self) -> dict:
        return {
            "question_uid": self.question_uid,
            "label": self.label,
            "raw_response": self.raw_response,
            "valid": self.valid,
            "mechanism": self.mechanism,
        }


_BQA_LINE = re.compile(
    r"^\s*(?:uid\s*[:=]\s*)?(?P<uid>[A-Za-z0-9_.\-]+)\s*[:=]\s*(?:answer\s*[:=]\s*)?(?P<label>yes|no|unsure)\s*$",
    re.IGNORECASE,
)


def parse_bqa_response(text: str) -> dict[str, str]:
    """uid -> label for every parseable answer line."""
    answers: dict[str, str] = {}
    for line in text.splitlines():
        match = _BQA_LINE.match(line)
        if match:
            answers[match.group("uid")] = match.group("label").lower()
    return answers


def run_bqa_agent(
    client: ChatClient,
    cfg: AgentConfig,
    image_path: str | Path,
    questions: list[tuple[str, str]],
) -> list[AgentVerdict]:
    """One verdict per requested uid; invalid answers are re-asked once for the
    offending subset, then returned flagged invalid with the raw response kept."""
    if not questions:
        raise ValueError("bqa agent needs at least one question")

    def ask(subset: list[tuple[str, str]]) -> tuple[dict[str, str], str]:
        prompt = cfg.bqa_header + "\n".join(
            cfg.bqa_question_line.format(question_uid=uid, question_text=q) for uid, q in subset
        )
        raw = client.complete(
            [{"role": "user", "content": [text_content(prompt), image_content(image_path)]}]
        )
        wanted = {uid for uid, _ in subset}
        return {u: l for u, l in parse_bqa_response(raw).items() if u in wanted}, raw

    answers, raw = ask(questions)
    raw_by_uid = {uid: raw for uid, _ in questions}
    pending = [(uid, q) for uid, q in questions if uid not in answers]
    for _reask in range(cfg.reask_limit):
        if not pending:
            break
        more, raw2 = ask(pending)
        for uid, _q in pending:
            raw_by_uid[uid] = raw2
        answers.update(more)
        pending = [(uid, q) for uid, q in pending if uid not in answers]

    verdicts = []
    for uid, _q in questions:
        label = answers.get(uid)
        verdicts.append(
            AgentVerdict(
                question_uid=uid,
                label=label,
                raw_response=raw_by_uid[uid],
                valid=label is not None,
                mechanism="bqa",
            )
        )
    return verdicts


_INT_OR_UNSURE = re.compile(r"\bunsure\b|-?\d+", re.IGNORECASE)


def _parse_scale_response(text: str, low: int, high: int) -> str | int | None:
    match = _INT_OR_UNSURE.search(text)
    if not match:
        return None
    token = match.group(0)
    if token.lower() == "unsure":
        return "unsure"
    value = int(token)
    return value if low <= value <= high else None


def run_anchor_likert_agent(
    client: ChatClient,
    cfg: AgentConfig,
    collage_path: str | Path,
    uid: str,
    question: str,
    phrase: str,
) -> AgentVerdict:
    """Graded similarity (0-5 or unsure) for one question over a labeled collage."""
    prompt = cfg.anchor_likert_template.format(uid=uid, question=question, phrase=phrase)
    label = None
    raw = ""
    for _attempt in range(cfg.reask_limit + 1):
        raw = client.complete(
            [{"role": "user", "content": [text_content(prompt), image_content(collage_path)]}]
        )
        label = _parse_scale_response(raw, 0, 5)
        if label is not None:
            break
    return AgentVerdict(uid, label, raw, valid=label is not None, mechanism="anchor_likert")


def run_aesthetics_agent(client: ChatClient, cfg: AgentConfig, image_path: str | Path) -> AgentVerdict:
    """Whole-image quality rating on the 1-5 scale."""
    label = None
    raw = ""
    for _attempt in range(cfg.reask_limit + 1):
        raw = client.complete(
            [{"role": "user", "content": [text_content(cfg.aesthetics_template), image_content(image_path)]}]
        )
        match = re.search(r"-?\d+", raw)
        if match:
            value = int(match.group(0))
            if 1 <= value <= 5:
                label = value
                break
    return AgentVerdict("", label, raw, valid=label is not None, mechanism="aesthetics")


_TILE_LINE = re.compile(
    r"^\s*(?P<tile>[wg]\d+)\s*[:=]\s*(?P<label>correct|incorrect|clean)\s*$", re.IGNORECASE
)


def parse_word_level_response(text: str) -> dict[str, str]:
    labels: dict[str, str] = {}
    for line in text.splitlines():
        match = _TILE_LINE.match(line)
        if match:
            labels[match.group("tile").lower()] = match.group("label").lower()
    return labels


def run_word_level_agent(
    client: ChatClient, cfg: AgentConfig, image_path: str | Path, words: list[str]
) -> tuple[WordTileSheet | None, str]:
    """Label every word tile and gap tile; None when labeling stays incomplete
    after the re-ask (the item is then excluded and counted by the caller)."""
    if not words:
        raise ValueError("word-level agent needs at least one expected word")
    tile_lines = []
    for i, word in enumerate(words):
        tile_lines.append(f"g{i}: (gap before word {i + 1})")
        tile_lines.append(f'w{i}: "{word}"')
    tile_lines.append(f"g{len(words)}: (gap after the last word)")
    prompt = cfg.word_level_header + "\n".join(tile_lines)

    wanted_words = [f"w{i}" for i in range(len(words))]
    wanted_gaps = [f"g{i}" for i in range(len(words) + 1)]
    labels: dict[str, str] = {}
    raw_all = []
    for _attempt in range(cfg.reask_limit + 1):
        raw = client.complete(
            [{"role": "user", "content": [text_content(prompt), image_content(image_path)]}]
        )
        raw_all.append(raw)
        labels.update(parse_word_level_response(raw))
        if all(t in labels for t in wanted_words + wanted_gaps):
            break
    raw_joined = "\n---\n".join(raw_all)
    try:
        word_labels = tuple(
            "correct" if labels[t] == "correct" else "incorrect" for t in wanted_words
        )
        gap_labels = tuple(
            "clean" if labels[t] in ("clean", "correct") else "incorrect" for t in wanted_gaps
        )
        return WordTileSheet(tuple(words), word_labels, gap_labels), raw_joined
    except KeyError:
        return None, raw_joined


# -- detector mask ingestion -----------------------------------------------------


@dataclass
class MaskIngestReport:
    masks: dict[tuple[str, str], BrushMask] = field(default_factory=dict)
    missing: list[tuple[str, str]] = field(default_factory=list)
    rejected: dict[tuple[str, str], str] = field(default_factory=dict)


def ingest_detector_masks(directory: str | Path, items: list[ItemKey]) -> MaskIngestReport:
    """Load `<model_id>/<prompt_id>.mask.json` RLE masks for each item.

    Missing files are reported per item; malformed RLE or a dimension mismatch
    with a readable image rejects the mask with the item named.
    """
    directory = Path(directory)
    report = MaskIngestReport()
    for item in items:
        key = (item.prompt_id, item.model_id)
        path = directory / item.model_id / f"{item.prompt_id}.mask.json"
        if not path.exists():
            report.missing.append(key)
            continue
        try:
            mask = load_mask_file(path)
        except (ValueError, json.JSONDecodeError) as e:
            report.rejected[key] = f"malformed mask: {e}"
            continue
        image_path = Path(item.image_path)
        if image_path.exists():
            from PIL import Image

            with Image.open(image_path) as im:
                if (im.width, im.height) != (mask.width, mask.height):
                    report.rejected[key] = (
                        f"mask {mask.width}x{mask.height} does not match image {im.width}x{im.height}"
                    )
                    continue
        report.masks[key] = mask
    return report


# -- agreement & alignment --------------------------------------------------------


def human_llm_alignment(
    human: dict[str, dict[str, float]],
    llm: dict[str, dict[str, float]],
) -> dict[str, float | None]:
    """Per-skill Spearman correlation between two score tables.

    Inputs map skill -> unit key -> score, where the unit key is an item id or
    a model id depending on the chosen ranking granularity. Skills whose
    shared units produce a constant ranking report None.
    """
    out: dict[str, float | None] = {}
    for skill in sorted(set(human) | set(llm)):
        h = human.get(skill, {})
        l = llm.get(skill, {})
        shared = sorted(set(h) & set(l))
        if len(shared) < 2:
            out[skill] = None
            continue
        out[skill] = spearman_rho([h[u] for u in shared], [l[u] for u in shared])
    return out


def inter_llm_agreement(
    values_by_agent: dict[str, dict[tuple[str, str], object]],
    skill_for_unit: dict[tuple[str, str], str],
) -> dict[str, AlphaResult]:
    """Krippendorff's alpha per skill with agents as annotators.

    `values_by_agent` maps agent id -> (item, scope) unit -> value; values are
    yes/no/unsure labels for binary questions (nominal metric) and numbers for
    graded mechanisms (interval metric). Reuses the same alpha implementation
    as the human analytics.
    """
    units_by_skill: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for unit, skill in skill_for_unit.items():
        units_by_skill[skill].append(unit)
    out: dict[str, AlphaResult] = {}
    for skill, units in units_by_skill.items():
        matrix = AnnotationMatrix()
        for agent, values in values_by_agent.items():
            for unit in units:
                if unit in values:
                    matrix.set(agent, f"{unit[0]}#{unit[1]}", values[unit])
        numeric = all(not isinstance(v, str) for v in matrix.values.values())
        out[skill] = krippendorff_alpha(matrix, "interval" if numeric else "nominal")
    return out


def render_agreement_table(alphas: dict[str, float | None], decimals: int = 4) -> str:
    """CSV table of per-skill alpha plus the average column."""
    skills = [s for s in SKILL_IDS if s in alphas]
    defined = [alphas[s] for s in skills if alphas[s] is not None]
    header = ",".join(["skill"] + skills + ["avg"])
    fmt = lambda v: "" if v is None else f"{v:.{decimals}f}"
    avg = fmt(sum(defined) / len(defined)) if defined else ""
    row = ",".join(["alpha"] + [fmt(alphas[s]) for s in skills] + [avg])
    return header + "\n" + row + "\n"


# -- verdict persistence -----------------------------------------------------------


@dataclass(frozen=True)
class VerdictRecord:
    """One agent verdict in item context, as logged to the verdict JSONL."""

    agent_id: str
    task_id: str
    prompt_id: str
    model_id: str
    mechanism: str
    scope: str
    label: str | int | float | None
    raw_response: str
    valid: bool

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "agent_id": self.agent_id,
                "task_id": self.task_id,
                "prompt_id": self.prompt_id,
                "model_id": self.model_id,
                "mechanism": self.mechanism,
                "scope": self.scope,
                "label": self.label,
                "raw_response": self.raw_response,
                "valid": self.valid,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json_line(cls, line: str) -> "VerdictRecord":
        d = json.loads(line)
        return cls(
            agent_id=str(d["agent_id"]),
            task_id=str(d["task_id"]),
            prompt_id=str(d["prompt_id"]),
            model_id=str(d["model_id"]),
            mechanism=str(d["mechanism"]),
            scope=str(d["scope"]),
            label=d["label"],
            raw_response=str(d["raw_response"]),
            valid=bool(d["valid"]),
        )


def verdict_scores(
    verdicts: list[VerdictRecord],
    prompts,
    policy: str = "fail",
    granularity: str = "item",
) -> dict[str, dict[str, float]]:
    """skill -> unit -> score from agent verdicts, mirroring the human scoring
    rules (dependency gating over the agent's own answers, same normalization).
    Invalid verdicts are skipped."""
    from .scoring import gate_answers, normalize, skill_scores_by_unit, ScoreSample

    prompt_map = {p.prompt_id: p for p in prompts}
    samples: list[ScoreSample] = []
    bqa_by_item: dict[tuple[str, str, str], dict[str, str]] = defaultdict(dict)
    for v in verdicts:
        if not v.valid:
            continue
        if v.mechanism in ("bqa", "anchor_bqa") and isinstance(v.label, str):
            bqa_by_item[(v.agent_id, v.prompt_id, v.model_id)][v.scope] = v.label

    for (agent_id, prompt_id, model_id), raw in bqa_by_item.items():
        prompt = prompt_map.get(prompt_id)
        if prompt is None:
            continue
        node_skills = {n.uid: n.skill for n in prompt.nodes}
        gate = gate_answers(prompt, raw, policy)
        for uid, label in gate.effective.items():
            if label == "gated":
                if policy == "fail":
                    samples.append(ScoreSample(agent_id, prompt_id, model_id, node_skills[uid], 0.0))
                continue
            if uid not in raw or label == "unsure":
                continue
            samples.append(
                ScoreSample(agent_id, prompt_id, model_id, node_skills[uid], normalize(label, "bqa"))
            )

    for v in verdicts:
        if not v.valid or v.label is None or v.label == "unsure":
            continue
        prompt = prompt_map.get(v.prompt_id)
        node_skills = {n.uid: n.skill for n in prompt.nodes} if prompt else {}
        if v.mechanism == "anchor_likert":
            skill = node_skills.get(v.scope)
            if skill is not None:
                samples.append(
                    ScoreSample(v.agent_id, v.prompt_id, v.model_id, skill, normalize(v.label, "anchor_likert"))
                )
        elif v.mechanism == "aesthetics":
            samples.append(
                ScoreSample(v.agent_id, v.prompt_id, v.model_id, "aesthetic_quality", normalize(v.label, "aesthetics"))
            )
        elif v.mechanism == "word_level":
            samples.append(
                ScoreSample(v.agent_id, v.prompt_id, v.model_id, "text_rendering", normalize(v.label, "word_level"))
            )
        elif v.mechanism == "brush":
            samples.append(
                ScoreSample(v.agent_id, v.prompt_id, v.model_id, "artifacts", 1.0 - float(v.label))
            )
    return skill_scores_by_unit(samples, granularity)


def write_verdicts(records: list[VerdictRecord], path: str | Path) -> None:
    Path(path).write_text("".join(r.to_json_line() + "\n" for r in records), encoding="utf-8")


def read_verdicts(path: str | Path) -> list[VerdictRecord]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(VerdictRecord.from_json_line(line))
    return out
