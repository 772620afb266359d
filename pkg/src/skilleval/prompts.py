"""Tagged prompts: validation-question DAGs attached to generation prompts.

A tagged prompt carries one node per applicable skill/sub-skill occurrence.
Each node asks a binary validation question about a phrase of the prompt and
may depend on parent nodes (e.g. an attribute question depends on the presence
of its object).
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

from .taxonomy import get_skill, is_valid_subskill

NODE_TYPES = ("presence", "property", "relation")


@dataclass(frozen=True)
class QuestionNode:
    uid: str
    skill: str
    subskill: str
    phrase: str
    question: str
    node_type: str
    depends_on: tuple[str, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "uid": self.uid,
            "skill": self.skill,
            "subskill": self.subskill,
            "phrase": self.phrase,
            "question": self.question,
            "node_type": self.node_type,
            "depends_on": list(self.depends_on),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QuestionNode":
        missing = {"uid", "skill", "subskill", "phrase", "question", "node_type", "depends_on"} - set(d)
        if missing:
            raise ValueError(f"question node missing fields: {sorted(missing)}")
        return cls(
            uid=str(d["uid"]),
            skill=str(d["skill"]),
            subskill=str(d["subskill"]),
            phrase=str(d["phrase"]),
            question=str(d["question"]),
            node_type=str(d["node_type"]),
            depends_on=tuple(str(u) for u in d["depends_on"]),
        )


@dataclass(frozen=True)
class TaggedPrompt:
    prompt_id: str
    text: str
    nodes: tuple[QuestionNode, ...]
    source: str = ""

    def node(self, uid: str) -> QuestionNode:
        for n in self.nodes:
            if n.uid == uid:
                return n
        raise KeyError(f"no node {uid!r} in prompt {self.prompt_id!r}")

    def to_json_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "text": self.text,
            "source": self.source,
            "nodes": [n.to_json_dict() for n in self.nodes],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaggedPrompt":
        missing = {"prompt_id", "text", "nodes"} - set(d)
        if missing:
            raise ValueError(f"tagged prompt missing fields: {sorted(missing)}")
        return cls(
            prompt_id=str(d["prompt_id"]),
            text=str(d["text"]),
            source=str(d.get("source", "")),
            nodes=tuple(QuestionNode.from_json_dict(n) for n in d["nodes"]),
        )


@dataclass
class Violation:
    uid: str
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.uid}: {self.detail}"


def validate_tagged_prompt(prompt: TaggedPrompt) -> list[Violation]:
    """Check all tagged-prompt invariants; returns [] when the prompt is valid.

    Violations name the offending uid and the rule broken: duplicate_uid,
    dangling_dependency, dependency_cycle, unknown_skill, unknown_subskill,
    unknown_node_type, empty_nodes.
    """
    violations: list[Violation] = []
    if not prompt.nodes:
        return [Violation("", "empty_nodes", "prompt has no question nodes")]

    seen: set[str] = set()
    for n in prompt.nodes:
        if n.uid in seen:
            violations.append(Violation(n.uid, "duplicate_uid", "uid appears more than once"))
        seen.add(n.uid)

    uids = {n.uid for n in prompt.nodes}
    for n in prompt.nodes:
        for dep in n.depends_on:
            if dep not in uids:
                violations.append(
                    Violation(n.uid, "dangling_dependency", f"depends_on references missing uid {dep!r}")
                )
        try:
            skill = get_skill(n.skill)
        except KeyError:
            violations.append(Violation(n.uid, "unknown_skill", f"skill {n.skill!r} not in taxonomy"))
            skill = None
        if skill is not None and not is_valid_subskill(n.skill, n.subskill):
            violations.append(
                Violation(n.uid, "unknown_subskill", f"subskill {n.subskill!r} not valid for {n.skill!r}")
            )
        if n.node_type not in NODE_TYPES:
            violations.append(Violation(n.uid, "unknown_node_type", f"node_type {n.node_type!r}"))

    for uid in _find_cycle_members(prompt.nodes):
        violations.append(Violation(uid, "dependency_cycle", "node participates in a dependency cycle"))
    return violations


def _find_cycle_members(nodes: tuple[QuestionNode, ...]) -> list[str]:
    """Uids that are part of (or downstream of) a dependency cycle, via Kahn's algorithm."""
    uids = {n.uid for n in nodes}
    indegree = {n.uid: 0 for n in nodes}
    children: dict[str, list[str]] = {n.uid: [] for n in nodes}
    for n in nodes:
        for dep in n.depends_on:
            if dep in uids:
                indegree[n.uid] += 1
                children[dep].append(n.uid)
    queue = deque(sorted(u for u, d in indegree.items() if d == 0))
    visited = 0
    while queue:
        uid = queue.popleft()
        visited += 1
        for child in children[uid]:
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    return sorted(u for u, d in indegree.items() if d > 0)


def topological_order(prompt: TaggedPrompt) -> list[str]:
    """Uids in dependency order (parents first). Raises on cyclic prompts."""
    cycle = _find_cycle_members(prompt.nodes)
    if cycle:
        raise ValueError(f"dependency cycle involving {cycle}")
    order: list[str] = []
    placed: set[str] = set()
    pending = list(prompt.nodes)
    while pending:
        progress = [n for n in pending if all(d in placed for d in n.depends_on)]
        for n in progress:
            order.append(n.uid)
            placed.add(n.uid)
        pending = [n for n in pending if n.uid not in placed]
    return order


def skill_coverage(prompts: list[TaggedPrompt]) -> dict[tuple[str, str], int]:
    """Count question nodes per (skill, subskill) pair across prompts."""
    counts: Counter[tuple[str, str]] = Counter()
    for p in prompts:
        for n in p.nodes:
            counts[(n.skill, n.subskill)] += 1
    return dict(counts)


def load_tagged_prompts(path: str | Path) -> list[TaggedPrompt]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("tagged-prompt file must hold a JSON array")
    return [TaggedPrompt.from_json_dict(d) for d in data]


def save_tagged_prompts(prompts: list[TaggedPrompt], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([p.to_json_dict() for p in prompts], indent=2) + "\n", encoding="utf-8"
    )
