"""Command-line workflows: tagging, validation, serving, scoring, reliability
reports, simulation, automatic evaluation, alignment, and report bundling.

Every subcommand exits 0 on success and nonzero with a machine-readable
`error: {...}` line on stderr otherwise.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .agents import (
    AgentConfig,
    VerdictRecord,
    human_llm_alignment,
    ingest_detector_masks,
    inter_llm_agreement,
    read_verdicts,
    render_agreement_table,
    run_aesthetics_agent,
    run_anchor_likert_agent,
    run_bqa_agent,
    run_word_level_agent,
    verdict_scores,
    write_verdicts,
)
from .anchors import AnchorIndex, DEFAULT_K_AGENT, build_collage, retrieve_anchors, save_collage
from .llm import ChatClient, LLMConfig
from .masks import BrushMask
from .prompts import load_tagged_prompts, save_tagged_prompts, skill_coverage, validate_tagged_prompt
from .reliability import (
    ReliabilityConfig,
    agreement_heatmap,
    build_report,
    rank_convergence,
    write_curve_csv,
    write_pgm,
    write_rank_curve_csv,
    write_report,
)
from .scoring import build_matrix, collect_samples, iter_score_samples, skill_scores_by_unit, write_matrix
from .simulator import Scenario, default_scenario_path, protocol_comparison_experiment, simulate_full_suite
from .store import AnnotationStore, Selector
from .tagging import tag_prompts
from .taxonomy import export_taxonomy, get_skill

_METRIC_BY_MECHANISM = {
    "bqa": "nominal", "anchor_bqa": "nominal", "likert": "interval",
    "anchor_likert": "interval", "aesthetics": "interval",
    "word_level": "interval", "brush": "interval",
}
_SCALE_BY_MECHANISM = {
    "likert": (1, 5), "aesthetics": (1, 5), "anchor_likert": (0, 5),
    "word_level": (0, 1), "brush": (0, 1), "bqa": (0, 1), "anchor_bqa": (0, 1),
}


def _fail(code: str, message: str, detail: str = "") -> None:
    click.echo("error: " + json.dumps({"code": code, "message": message, "detail": detail}), err=True)
    sys.exit(1)


def _load_prompts_for_task(store: AnnotationStore, task) -> list:
    path = Path(task.prompts_file)
    if not path.is_absolute():
        path = store.root / path
    if not path.exists():
        _fail("io", f"prompts file not found for task {task.id}", str(path))
    return load_tagged_prompts(path)


@click.group()
@click.version_option(version=__version__)
def main():
    """Skill-aligned text-to-image evaluation toolkit."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="Raw prompts: .txt (one per line) or .json array.")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--source", default="", help="Dataset provenance string recorded on each prompt.")
@click.option("--retry-limit", default=2, show_default=True)
@click.option("--parallelism", default=4, show_default=True)
def tag(input_path, output_path, source, retry_limit, parallelism):
    """Tag raw prompts with skills and validation questions via the configured LLM."""
    path = Path(input_path)
    if path.suffix == ".json":
        texts = json.loads(path.read_text(encoding="utf-8"))
    else:
        texts = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    try:
        client = ChatClient(LLMConfig.from_env())
    except Exception as e:
        _fail("upstream_llm", "LLM endpoint not configured", str(e))
    result = tag_prompts(texts, client, source=source, retry_limit=retry_limit, parallelism=parallelism)
    save_tagged_prompts(result.tagged, output_path)
    click.echo(f"tagged {len(result.tagged)}/{len(texts)} prompts -> {output_path}")
    if result.failures:
        for f in result.failures:
            click.echo(
                "error: " + json.dumps({"code": "upstream_llm", "message": "tagging failed",
                                        "detail": f"prompt {f.index}: {f.error}"}),
                err=True,
            )
        sys.exit(1)


@main.command()
@click.argument("tagged_file", type=click.Path(exists=True))
@click.option("--coverage/--no-coverage", default=False, help="Also print per-skill node counts.")
def validate(tagged_file, coverage):
    """Lint a tagged-prompt file against the schema and DAG invariants."""
    try:
        prompts = load_tagged_prompts(tagged_file)
    except (ValueError, json.JSONDecodeError) as e:
        _fail("invalid_payload", "cannot parse tagged-prompt file", str(e))
    total = 0
    for p in prompts:
        for v in validate_tagged_prompt(p):
            click.echo(f"{p.prompt_id}: {v}")
            total += 1
    if coverage:
        for (skill, subskill), count in sorted(skill_coverage(prompts).items()):
            click.echo(f"{skill}/{subskill or '-'}: {count}")
    if total:
        _fail("invalid_payload", f"{total} violations in {tagged_file}")
    click.echo(f"ok: {len(prompts)} prompts valid")


@main.command()
@click.option("--output", "output_path", default="taxonomy.json", show_default=True, type=click.Path())
def taxonomy(output_path):
    """Export the skill taxonomy as JSON."""
    path = export_taxonomy(output_path)
    click.echo(f"wrote {path}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON file with store/images/static/anchors/host/port; flags override it.")
@click.option("--store", "store_dir", default=None, type=click.Path())
@click.option("--images", "images_root", default=None, type=click.Path())
@click.option("--static", "static_dir", default=None, type=click.Path())
@click.option("--anchors", "anchors_file", default=None, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, store_dir, images_root, static_dir, anchors_file, host, port):
    """Run the annotation HTTP service."""
    import uvicorn

    from .llm import env_configured
    from .service import create_app

    settings = load_service_config(config_path) if config_path else {}
    store_dir = store_dir or settings.get("store")
    if not store_dir:
        _fail("invalid_payload", "no store configured: pass --store or a config file with \"store\"")
    client = None
    if env_configured():
        client = ChatClient(LLMConfig.from_env())
    app = create_app(
        AnnotationStore(store_dir),
        images_root=images_root or settings.get("images"),
        static_dir=static_dir or settings.get("static"),
        anchors_file=anchors_file or settings.get("anchors"),
        agent_client=client,
    )
    uvicorn.run(app, host=host or settings.get("host", "127.0.0.1"),
                port=port or int(settings.get("port", 8800)))


def load_service_config(path) -> dict:
    """Service settings file: {"store", "images", "static", "anchors", "host", "port"};
    relative paths resolve against the file's directory."""
    base = Path(path).parent
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise click.ClickException("service config must be a JSON object")
    settings = dict(raw)
    for key in ("store", "images", "static", "anchors"):
        if settings.get(key) and not Path(settings[key]).is_absolute():
            settings[key] = str(base / settings[key])
    return settings


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--task", "task_id", required=True)
@click.option("--out", "out_prefix", required=True, type=click.Path(), help="Writes <out>.json and <out>.csv.")
@click.option("--policy", type=click.Choice(["fail", "skip"]), default="fail", show_default=True)
@click.option("--include-ai", is_flag=True, default=False)
def score(store_dir, task_id, out_prefix, policy, include_ai):
    """Aggregate a task's annotation log into the model x skill score matrix."""
    store = AnnotationStore(store_dir)
    try:
        task = store.get_task(task_id)
    except Exception as e:
        _fail("not_found", str(e))
    prompts = _load_prompts_for_task(store, task)
    matrix = build_matrix(store, task, prompts, policy=policy, include_ai=include_ai)
    write_matrix(matrix, json_path=f"{out_prefix}.json", csv_path=f"{out_prefix}.csv")
    click.echo(f"wrote {out_prefix}.json and {out_prefix}.csv")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--task", "task_id", required=True)
@click.option("--selector", "selector_text", required=True, help='e.g. "mechanism=brush" or "skill=entities".')
@click.option("--metric", type=click.Choice(["nominal", "interval", "ordinal", ""]), default="")
@click.option("--seed", default=0, show_default=True)
@click.option("--bootstrap-samples", default=1000, show_default=True)
@click.option("--unsure-policy", type=click.Choice(["category", "missing"]), default="category", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def reliability(store_dir, task_id, selector_text, metric, seed, bootstrap_samples, unsure_policy, out_dir):
    """Agreement report for one slice: alpha + CI, EDR, unsure rate, convergence, heatmaps."""
    store = AnnotationStore(store_dir)
    try:
        store.get_task(task_id)
    except Exception as e:
        _fail("not_found", str(e))
    try:
        selector = Selector.parse(selector_text)
    except ValueError as e:
        _fail("invalid_payload", "bad selector", str(e))
    mechanism = selector.mechanism or ""
    try:
        cfg = ReliabilityConfig(
            metric=metric or _METRIC_BY_MECHANISM.get(mechanism, "interval"),
            seed=seed,
            bootstrap_samples=bootstrap_samples,
            unsure_policy=unsure_policy,
        )
    except ValueError as e:
        _fail("invalid_payload", "bad reliability parameters", str(e))
    matrix = store.load_matrix(task_id, selector)
    if not matrix.values:
        _fail("not_found", "selector matched no annotations", selector_text)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(matrix, cfg, scale=_SCALE_BY_MECHANISM.get(mechanism))
    write_report(report, out / "report.json")
    write_curve_csv(report.convergence, out / "convergence.csv")
    if mechanism == "brush":
        _write_brush_heatmaps(store, task_id, selector, out)
    alpha_text = "undefined" if report.alpha is None else f"{report.alpha:.4f}"
    click.echo(f"alpha={alpha_text} -> {out}/report.json")


def _write_brush_heatmaps(store: AnnotationStore, task_id: str, selector: Selector, out: Path) -> None:
    masks_by_item: dict[str, list[BrushMask]] = {}
    for record in store.effective_records(task_id):
        if record.mechanism != "brush":
            continue
        if record.ai_prefilled and not selector.include_ai:
            continue
        key = f"{record.item.prompt_id}_{record.item.model_id}"
        masks_by_item.setdefault(key, []).append(record.payload)
    n_annotators = max((len(v) for v in masks_by_item.values()), default=1)
    for key, masks in sorted(masks_by_item.items()):
        if len(masks) < 2:
            continue
        grid = agreement_heatmap(masks)
        write_pgm(grid, out / f"heatmap_{key}.pgm", maxval=n_annotators)


@main.command()
@click.option("--scenario", "scenario_path", default=None, type=click.Path(exists=True), help="Defaults to the shipped scenario.")
@click.option("--seed", default=None, type=int, help="Override the scenario seed.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--full-suite/--no-full-suite", default=True, show_default=True)
def simulate(scenario_path, seed, out_dir, full_suite):
    """Synthesize annotator panels, run the protocol comparisons, and emit logs plus reports."""
    scenario = Scenario.from_file(scenario_path or default_scenario_path())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store = AnnotationStore(out / "store")
    report = protocol_comparison_experiment(scenario, store, seed=seed, full_reports=True)
    (out / "comparison_report.json").write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name, arm in report.arms.items():
        if arm.report is not None:
            write_curve_csv(arm.report.convergence, out / f"convergence_{name}.csv")
    if full_suite:
        result = simulate_full_suite(scenario, store, seed=seed)
        prompts = _load_prompts_for_task(store, result.task)
        matrix = build_matrix(store, result.task, prompts)
        write_matrix(matrix, json_path=out / "suite_matrix.json", csv_path=out / "suite_matrix.csv")
        samples = collect_samples(store, result.task, prompts)
        cfg = ReliabilityConfig(seed=seed if seed is not None else scenario.seed)
        write_rank_curve_csv(rank_convergence(samples, cfg), out / "rank_convergence.csv")
    click.echo(f"simulation written to {out}")


@main.command(name="auto-eval")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--task", "task_id", required=True)
@click.option("--images", "images_root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--agents", "agent_list", default="bqa,anchor_likert,aesthetics,word_level", show_default=True)
@click.option("--anchors", "anchors_file", default=None, type=click.Path(exists=True))
@click.option("--agent-id", default=None, help="Defaults to the configured model id.")
@click.option("--workdir", default=None, type=click.Path(), help="Where collages are built (default <out>.collages).")
@click.option("--detector-masks", "detector_dir", default=None, type=click.Path(exists=True),
              help="Artifact-detector output: <model_id>/<prompt_id>.mask.json RLE files.")
def auto_eval(store_dir, task_id, images_root, out_path, agent_list, anchors_file, agent_id, workdir, detector_dir):
    """Run the evaluation agents over a task's items and write a verdict log."""
    store = AnnotationStore(store_dir)
    try:
        task = store.get_task(task_id)
    except Exception as e:
        _fail("not_found", str(e))
    prompts = _load_prompts_for_task(store, task)
    try:
        llm_cfg = LLMConfig.from_env()
    except Exception as e:
        _fail("upstream_llm", "LLM endpoint not configured", str(e))
    client = ChatClient(llm_cfg)
    cfg = AgentConfig(agent_id=agent_id or llm_cfg.model)
    wanted = {a.strip() for a in agent_list.split(",") if a.strip()}
    anchor_index = AnchorIndex.from_manifest(anchors_file) if anchors_file else None
    collage_dir = Path(workdir) if workdir else Path(f"{out_path}.collages")
    collage_dir.mkdir(parents=True, exist_ok=True)
    images = Path(images_root)

    records: list[VerdictRecord] = []
    for prompt in prompts:
        bqa_questions = [(n.uid, n.question) for n in prompt.nodes if get_skill(n.skill).mechanism == "bqa"]
        anchor_nodes = [n for n in prompt.nodes if get_skill(n.skill).mechanism == "anchor_likert"]
        word_nodes = [n for n in prompt.nodes if n.skill == "text_rendering" and n.subskill == "accuracy"]
        for model in task.models:
            image = images / model / f"{prompt.prompt_id}.png"
            if not image.exists():
                _fail("io", "missing generated image", str(image))
            ctx = dict(task_id=task.id, prompt_id=prompt.prompt_id, model_id=model)
            if "bqa" in wanted and bqa_questions:
                for v in run_bqa_agent(client, cfg, image, bqa_questions):
                    records.append(VerdictRecord(
                        agent_id=cfg.agent_id, mechanism="bqa", scope=v.question_uid,
                        label=v.label, raw_response=v.raw_response, valid=v.valid, **ctx))
            if "anchor_likert" in wanted:
                for node in anchor_nodes:
                    found = retrieve_anchors(anchor_index, node.phrase, DEFAULT_K_AGENT) if anchor_index else []
                    collage = build_collage(image, found)
                    collage_path = collage_dir / f"{prompt.prompt_id}_{model}_{node.uid}.png"
                    save_collage(collage, collage_path)
                    v = run_anchor_likert_agent(client, cfg, collage_path, node.uid, node.question, node.phrase)
                    records.append(VerdictRecord(
                        agent_id=cfg.agent_id, mechanism="anchor_likert", scope=node.uid,
                        label=v.label, raw_response=v.raw_response, valid=v.valid, **ctx))
            if "aesthetics" in wanted:
                v = run_aesthetics_agent(client, cfg, image)
                records.append(VerdictRecord(
                    agent_id=cfg.agent_id, mechanism="aesthetics", scope="aesthetic_quality",
                    label=v.label, raw_response=v.raw_response, valid=v.valid, **ctx))
            if "word_level" in wanted:
                for node in word_nodes:
                    words = [w for w in node.phrase.replace('"', " ").split() if w]
                    if not words:
                        continue
                    sheet, raw = run_word_level_agent(client, cfg, image, words)
                    if sheet is None:
                        records.append(VerdictRecord(
                            agent_id=cfg.agent_id, mechanism="word_level", scope=node.uid,
                            label=None, raw_response=raw, valid=False, **ctx))
                    else:
                        from .scoring import score_word_level

                        records.append(VerdictRecord(
                            agent_id=cfg.agent_id, mechanism="word_level", scope=node.uid,
                            label=score_word_level(sheet), raw_response=raw, valid=True, **ctx))

    if detector_dir is not None:
        from .masks import mask_to_ratio
        from .records import ItemKey

        items = [
            ItemKey(p.prompt_id, model, str(images / model / f"{p.prompt_id}.png"))
            for p in prompts
            for model in task.models
        ]
        ingested = ingest_detector_masks(detector_dir, items)
        for (prompt_id, model), mask in sorted(ingested.masks.items()):
            records.append(VerdictRecord(
                agent_id=cfg.agent_id, task_id=task.id, prompt_id=prompt_id, model_id=model,
                mechanism="brush", scope="", label=mask_to_ratio(mask),
                raw_response="", valid=True))
        for prompt_id, model in ingested.missing:
            click.echo(f"detector mask missing for {prompt_id}/{model}", err=True)
        for (prompt_id, model), reason in sorted(ingested.rejected.items()):
            records.append(VerdictRecord(
                agent_id=cfg.agent_id, task_id=task.id, prompt_id=prompt_id, model_id=model,
                mechanism="brush", scope="", label=None, raw_response=reason, valid=False))

    write_verdicts(records, out_path)
    invalid = sum(1 for r in records if not r.valid)
    click.echo(f"wrote {len(records)} verdicts ({invalid} invalid) -> {out_path}")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--task", "task_id", required=True)
@click.option("--verdicts", "verdict_files", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--granularity", type=click.Choice(["item", "model"]), default="item", show_default=True)
@click.option("--policy", type=click.Choice(["fail", "skip"]), default="fail", show_default=True)
@click.option("--out", "out_prefix", required=True, type=click.Path())
def align(store_dir, task_id, verdict_files, granularity, policy, out_prefix):
    """Per-skill Spearman correlation between human scores and agent verdicts;
    with several verdict logs, also inter-agent agreement per skill."""
    store = AnnotationStore(store_dir)
    try:
        task = store.get_task(task_id)
    except Exception as e:
        _fail("not_found", str(e))
    prompts = _load_prompts_for_task(store, task)
    human = skill_scores_by_unit(
        iter_score_samples(store, task, prompts, policy=policy), granularity
    )
    all_verdicts = []
    for vf in verdict_files:
        all_verdicts.extend(read_verdicts(vf))
    llm = verdict_scores(all_verdicts, prompts, policy=policy, granularity=granularity)
    alignment = human_llm_alignment(human, llm)
    payload = {"granularity": granularity, "spearman": alignment}

    if len(verdict_files) > 1 or len({v.agent_id for v in all_verdicts}) > 1:
        skill_of = {p.prompt_id: {n.uid: n.skill for n in p.nodes} for p in prompts}
        values_by_agent: dict[str, dict[tuple[str, str], object]] = {}
        unit_skills: dict[tuple[str, str], str] = {}
        for v in all_verdicts:
            if not v.valid or v.label is None:
                continue
            skill = skill_of.get(v.prompt_id, {}).get(v.scope)
            if skill is None and v.mechanism == "aesthetics":
                skill = "aesthetic_quality"
            if skill is None:
                continue
            unit = (f"{v.prompt_id}/{v.model_id}", v.scope)
            unit_skills[unit] = skill
            values_by_agent.setdefault(v.agent_id, {})[unit] = v.label
        agreement = inter_llm_agreement(values_by_agent, unit_skills)
        payload["inter_agent_alpha"] = {s: a.value for s, a in agreement.items()}
        Path(f"{out_prefix}.inter_agent.csv").write_text(
            render_agreement_table({s: a.value for s, a in agreement.items()}), encoding="utf-8"
        )
    Path(f"{out_prefix}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"wrote {out_prefix}.json")


@main.command()
@click.option("--matrix", "matrix_json", default=None, type=click.Path(exists=True))
@click.option("--interllm", "interllm_json", default=None, type=click.Path(exists=True), help="JSON map skill -> alpha.")
@click.option("--reliability", "reliability_jsons", multiple=True, help="name=path pairs of reliability report JSONs.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def report(matrix_json, interllm_json, reliability_jsons, out_dir):
    """Bundle score/agreement/reliability outputs into plot-ready CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wrote = []
    if matrix_json:
        data = json.loads(Path(matrix_json).read_text(encoding="utf-8"))
        lines = ["model," + ",".join(data["skills"]) + ",avg"]
        for model in data["models"]:
            cells = data["cells"].get(model, {})
            row = [model]
            for skill in data["skills"]:
                c = cells.get(skill)
                row.append("" if c is None else f"{c['mean']:.3f}")
            avg = data["avg"].get(model)
            row.append("" if avg is None else f"{avg:.3f}")
            lines.append(",".join(row))
        (out / "per_skill_scores.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        wrote.append("per_skill_scores.csv")
    if interllm_json:
        alphas = json.loads(Path(interllm_json).read_text(encoding="utf-8"))
        (out / "inter_llm_alpha.csv").write_text(render_agreement_table(alphas), encoding="utf-8")
        wrote.append("inter_llm_alpha.csv")
    if reliability_jsons:
        lines = ["name,alpha,ci_low,ci_high,edr,unsure_rate"]
        for pair in reliability_jsons:
            if "=" not in pair:
                _fail("invalid_payload", "reliability option must be name=path", pair)
            name, path = pair.split("=", 1)
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            fmt = lambda v: "" if v is None else f"{v:.4f}"
            ci = data.get("ci") or {}
            lines.append(
                f"{name},{fmt(data.get('alpha'))},{fmt(ci.get('low'))},{fmt(ci.get('high'))},"
                f"{fmt(data.get('edr'))},{fmt(data.get('unsure_rate'))}"
            )
            curve = data.get("convergence") or []
            curve_lines = ["k,mean,low,high,n_draws,discarded"]
            for p in curve:
                curve_lines.append(
                    f"{p['k']},{fmt(p['mean'])},{fmt(p['low'])},{fmt(p['high'])},{p['n_draws']},{p['discarded']}"
                )
            (out / f"convergence_{name}.csv").write_text("\n".join(curve_lines) + "\n", encoding="utf-8")
            wrote.append(f"convergence_{name}.csv")
        (out / "reliability_summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        wrote.append("reliability_summary.csv")
    if not wrote:
        _fail("invalid_payload", "nothing to render: pass --matrix, --interllm, or --reliability")
    click.echo(f"wrote {', '.join(wrote)} in {out}")


if __name__ == "__main__":
    main()
