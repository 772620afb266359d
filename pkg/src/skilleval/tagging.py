"""LLM-backed prompt tagging: skills, validation questions, and dependency
edges are produced in one call per prompt and validated before acceptance.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .llm import ChatClient
from .prompts import TaggedPrompt, validate_tagged_prompt
from .taxonomy import load_taxonomy

logger = logging.getLogger(__name__)

DEFAULT_RETRY_LIMIT = 2
DEFAULT_PARALLELISM = 4

_SYSTEM_PROMPT_TEMPLATE = """You are an expert at analyzing text-to-image generation prompts.

Given a prompt, identify every applicable evaluation skill and sub-skill it
exercises, and write one binary validation question per occurrence. Record
dependencies: if a question only makes sense when another question is answered
"yes" (for example, an object's color only matters if the object is present),
list that parent question's uid in depends_on.

The skill taxonomy (skill: sub-skills):
{taxonomy}

Respond with a JSON array only, one object per question node:
[
  {{
    "uid": "unique id, e.g. e1",
    "skill": "one of the skill ids above",
    "subskill": "one of the skill's sub-skill ids, or \\"\\" if it has none",
    "phrase": "the prompt phrase this question targets",
    "question": "a yes/no question validating the phrase",
    "node_type": "presence" | "property" | "relation",
    "depends_on": ["parent uids", "..."]
  }}
]

Tag every applicable skill/sub-skill combination, not just the dominant one.
Do not wrap the array in prose or markdown fences."""


def build_system_prompt() -> str:
    lines = []
    for skill in load_taxonomy():
        subs = ", ".join(skill.subskills) if skill.subskills else "(none)"
        lines.append(f"- {skill.id}: {subs}")
    return _SYSTEM_PROMPT_TEMPLATE.format(taxonomy="\n".join(lines))


class TaggingParseError(ValueError):
    pass


def parse_tagging_response(text: str, prompt_id: str, prompt_text: str, source: str = "") -> TaggedPrompt:
    """Parse one LLM response into a validated TaggedPrompt.

    Accepts a bare JSON array of nodes or an object with a "nodes" key;
    tolerates markdown code fences. Raises TaggingParseError on malformed
    JSON or any schema violation.
    """
    stripped = text.strip()
    fence = re.match(r"^```(?:json)?\s*(.*?)\s*```$", stripped, re.DOTALL)
    if fence:
        stripped = fence.group(1)
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError as e:
        raise TaggingParseError(f"response is not JSON: {e}") from None
    if isinstance(data, dict) and "nodes" in data:
        data = data["nodes"]
    if not isinstance(data, list):
        raise TaggingParseError("expected a JSON array of question nodes")
    try:
        prompt = TaggedPrompt.from_json_dict(
            {"prompt_id": prompt_id, "text": prompt_text, "source": source, "nodes": data}
        )
    except (ValueError, KeyError, TypeError) as e:
        raise TaggingParseError(str(e)) from None
    violations = validate_tagged_prompt(prompt)
    if violations:
        raise TaggingParseError("; ".join(str(v) for v in violations))
    return prompt


@dataclass
class TaggingFailure:
    index: int
    text: str
    attempts: int
    error: str
    raw_responses: list[str] = field(default_factory=list)


@dataclass
class TaggingResult:
    tagged: list[TaggedPrompt]
    failures: list[TaggingFailure]


def tag_prompts(
    texts: list[str],
    client: ChatClient,
    source: str = "",
    retry_limit: int = DEFAULT_RETRY_LIMIT,
    parallelism: int = DEFAULT_PARALLELISM,
    prompt_id_prefix: str = "p",
) -> TaggingResult:
    """Tag raw prompt texts; every accepted prompt re-validates cleanly.

    Each prompt gets up to 1 + retry_limit attempts; prompts that still fail
    are reported (with raw responses logged verbatim) rather than raised.
    Output order follows input order.
    """
    system = build_system_prompt()

    def tag_one(pair: tuple[int, str]):
        index, text = pair
        prompt_id = f"{prompt_id_prefix}{index:04d}"
        raw_responses: list[str] = []
        last_error = ""
        for _attempt in range(retry_limit + 1):
            raw = client.complete(
                [
                    {"role": "system", "content": system},
                    {"role": "user", "content": text},
                ]
            )
            raw_responses.append(raw)
            try:
                return parse_tagging_response(raw, prompt_id, text, source)
            except TaggingParseError as e:
                last_error = str(e)
                logger.warning("tagging parse failure for %r: %s\nraw response: %s", text, e, raw)
        return TaggingFailure(
            index=index,
            text=text,
            attempts=retry_limit + 1,
            error=last_error,
            raw_responses=raw_responses,
        )

    if parallelism > 1 and len(texts) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(tag_one, enumerate(texts)))
    else:
        outcomes = [tag_one(p) for p in enumerate(texts)]

    tagged = [o for o in outcomes if isinstance(o, TaggedPrompt)]
    failures = [o for o in outcomes if isinstance(o, TaggingFailure)]
    return TaggingResult(tagged=tagged, failures=failures)
