"""HTTP service: serves tasks and items to annotators, accepts annotation
records, and exposes scores, reliability reports, and anchors.

The service is stateless above the store; restarting it never changes a
computed result. Item order is shuffled per annotator with a seed derived
from (task_id, annotator_id) so reloading keeps the order stable.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .agents import AgentConfig, run_bqa_agent
from .anchors import AnchorIndex, retrieve_anchors
from .llm import ChatClient
from .prompts import TaggedPrompt, load_tagged_prompts
from .records import AnnotationRecord, BqaAnswer, BqaAnswerSet, ItemKey
from .reliability import ReliabilityConfig, build_report
from .scoring import build_matrix
from .store import AnnotationStore, Selector, StoreError, UnknownTaskError
from .taxonomy import get_skill, taxonomy_as_dict

AI_ANNOTATOR_ID = "__ai__"

_METRIC_BY_MECHANISM = {
    "bqa": "nominal",
    "anchor_bqa": "nominal",
    "likert": "interval",
    "anchor_likert": "interval",
    "aesthetics": "interval",
    "word_level": "interval",
    "brush": "interval",
}
_SCALE_BY_MECHANISM = {
    "likert": (1, 5),
    "aesthetics": (1, 5),
    "anchor_likert": (0, 5),
    "word_level": (0, 1),
    "brush": (0, 1),
    "bqa": (0, 1),
    "anchor_bqa": (0, 1),
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: str = "", status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail
        self.status = status

    def body(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


@dataclass
class ServiceContext:
    store: AnnotationStore
    images_root: Path | None = None
    anchor_index: AnchorIndex | None = None
    agent_client: ChatClient | None = None
    agent_config: AgentConfig | None = None

    def prompts_for(self, task_id: str) -> list[TaggedPrompt]:
        cfg = self.store.get_task(task_id)
        path = Path(cfg.prompts_file)
        if not path.is_absolute():
            path = self.store.root / path
        if not path.exists():
            raise ApiError("io", f"prompts file missing for task {task_id}", str(path), status=500)
        return load_tagged_prompts(path)


def shuffled_items(items: list, task_id: str, annotator_id: str) -> list:
    """Deterministic per-annotator order: same (task, annotator) -> same order."""
    digest = hashlib.sha256(f"{task_id}:{annotator_id}".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    shuffled = list(items)
    rng.shuffle(shuffled)
    return shuffled


def create_app(
    store: AnnotationStore,
    images_root: str | Path | None = None,
    static_dir: str | Path | None = None,
    anchors_file: str | Path | None = None,
    agent_client: ChatClient | None = None,
    agent_config: AgentConfig | None = None,
) -> FastAPI:
    ctx = ServiceContext(
        store=store,
        images_root=Path(images_root) if images_root else None,
        anchor_index=AnchorIndex.from_manifest(anchors_file) if anchors_file else None,
        agent_client=agent_client,
        agent_config=agent_config or AgentConfig(),
    )
    app = FastAPI(title="skilleval", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_payload", "message": "request validation failed",
                     "detail": str(exc.errors())},
        )

    @app.get("/api/taxonomy")
    def get_taxonomy():
        return taxonomy_as_dict()

    @app.get("/api/tasks")
    def list_tasks():
        return {"tasks": [t.to_json_dict() for t in ctx.store.list_tasks()]}

    @app.get("/api/tasks/{task_id}/items")
    def get_items(task_id: str, annotator_id: str = Query(default="")):
        try:
            cfg = ctx.store.get_task(task_id)
        except UnknownTaskError as e:
            raise ApiError("not_found", str(e), status=404)
        prompts = ctx.prompts_for(task_id)
        prefill = _ai_prefill(ctx, cfg, prompts) if cfg.enable_bqa_ai else {}
        items = []
        for prompt in prompts:
            for model in cfg.models:
                # web-servable convention; the images root is mounted at /images
                image_path = f"images/{model}/{prompt.prompt_id}.png"
                anchors = {}
                if ctx.anchor_index is not None:
                    for node in prompt.nodes:
                        if get_skill(node.skill).mechanism in ("anchor_likert",):
                            found = retrieve_anchors(ctx.anchor_index, node.phrase)
                            if found:
                                anchors[node.uid] = found
                items.append(
                    {
                        "prompt_id": prompt.prompt_id,
                        "model_id": model,
                        "image_path": image_path,
                        "prompt_text": prompt.text,
                        "nodes": [n.to_json_dict() for n in prompt.nodes],
                        "mechanisms": list(cfg.annotations),
                        "anchors": anchors,
                        "ai_prefill": prefill.get((prompt.prompt_id, model), {}),
                    }
                )
        if cfg.shuffle_images and annotator_id:
            items = shuffled_items(items, task_id, annotator_id)
        return {"task_id": task_id, "items": items}

    @app.post("/api/annotations", status_code=201)
    async def post_annotation(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as e:
            raise ApiError("invalid_payload", "body is not valid JSON", str(e))
        try:
            record = AnnotationRecord.from_json_dict(body)
        except (ValueError, KeyError, TypeError) as e:
            raise ApiError("invalid_payload", "malformed annotation record", str(e))
        try:
            position = ctx.store.append(record)
        except UnknownTaskError as e:
            raise ApiError("not_found", str(e), status=404)
        except StoreError as e:
            raise ApiError("conflict", str(e), status=409)
        except ValueError as e:
            raise ApiError("invalid_payload", "record rejected", str(e))
        except OSError as e:
            raise ApiError("io", "failed to persist record", str(e), status=500)
        return {"position": position}

    @app.get("/api/tasks/{task_id}/results")
    def get_results(task_id: str, policy: str = Query(default="fail")):
        try:
            cfg = ctx.store.get_task(task_id)
        except UnknownTaskError as e:
            raise ApiError("not_found", str(e), status=404)
        prompts = ctx.prompts_for(task_id)
        try:
            matrix = build_matrix(ctx.store, cfg, prompts, policy=policy)
        except ValueError as e:
            raise ApiError("invalid_payload", "cannot score task", str(e))
        return matrix.to_json_dict()

    @app.get("/api/tasks/{task_id}/reliability")
    def get_reliability(
        task_id: str,
        selector: str = Query(...),
        metric: str = Query(default=""),
        seed: int = Query(default=0),
        bootstrap_samples: int = Query(default=1000),
    ):
        try:
            ctx.store.get_task(task_id)
        except UnknownTaskError as e:
            raise ApiError("not_found", str(e), status=404)
        try:
            sel = Selector.parse(selector)
        except ValueError as e:
            raise ApiError("invalid_payload", "bad selector", str(e))
        mechanism = sel.mechanism or ""
        chosen_metric = metric or _METRIC_BY_MECHANISM.get(mechanism, "interval")
        scale = _SCALE_BY_MECHANISM.get(mechanism)
        matrix = ctx.store.load_matrix(task_id, sel)
        if not matrix.values:
            raise ApiError("not_found", "selector matched no annotations", selector, status=404)
        try:
            cfg = ReliabilityConfig(metric=chosen_metric, seed=seed, bootstrap_samples=bootstrap_samples)
        except ValueError as e:
            raise ApiError("invalid_payload", "bad reliability parameters", str(e))
        report = build_report(matrix, cfg, scale=scale)
        return report.to_json_dict()

    @app.get("/api/anchors")
    def get_anchors(key: str = Query(...), k: int = Query(default=3)):
        if ctx.anchor_index is None:
            return {"key": key, "anchors": []}
        return {"key": key, "anchors": retrieve_anchors(ctx.anchor_index, key, k)}

    if ctx.images_root is not None and ctx.images_root.is_dir():
        app.mount("/images", StaticFiles(directory=str(ctx.images_root)), name="images")
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def _ai_prefill(ctx: ServiceContext, cfg, prompts) -> dict[tuple[str, str], dict[str, str]]:
    """Cached AI answers per item; lazily queried when an agent client is wired.

    Suggestions are stored flagged ai_prefilled under a reserved annotator id,
    so analytics exclude them by default and the UI can badge them.
    """
    cached: dict[tuple[str, str], dict[str, str]] = {}
    for record in ctx.store.effective_records(cfg.id):
        if record.ai_prefilled and record.annotator_id == AI_ANNOTATOR_ID and isinstance(record.payload, BqaAnswerSet):
            cached[(record.item.prompt_id, record.item.model_id)] = record.payload.as_map()
    if ctx.agent_client is None:
        return cached
    for prompt in prompts:
        questions = [(n.uid, n.question) for n in prompt.nodes]
        for model in cfg.models:
            key = (prompt.prompt_id, model)
            if key in cached or not questions:
                continue
            image = (
                ctx.images_root / model / f"{prompt.prompt_id}.png" if ctx.images_root else None
            )
            if image is None or not image.exists():
                continue
            verdicts = run_bqa_agent(ctx.agent_client, ctx.agent_config, image, questions)
            answers = {v.question_uid: v.label for v in verdicts if v.valid}
            if not answers:
                continue
            record = AnnotationRecord(
                task_id=cfg.id,
                item=ItemKey(prompt.prompt_id, model, str(image)),
                annotator_id=AI_ANNOTATOR_ID,
                mechanism="bqa",
                payload=BqaAnswerSet(tuple(BqaAnswer(u, l) for u, l in sorted(answers.items()))),
                ai_prefilled=True,
            )
            try:
                ctx.store.append(record)
            except StoreError:
                continue
            cached[key] = answers
    return cached
