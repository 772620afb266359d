import json

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from conftest import make_task
from stub_llm import FakeChatClient
from skilleval.prompts import save_tagged_prompts
from skilleval.service import AI_ANNOTATOR_ID, create_app
from skilleval.store import AnnotationStore


@pytest.fixture
def service(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    save_tagged_prompts([red_car_prompt], store.root / "prompts.json")
    store.register_task(make_task(annotations=("bqa", "brush"), models=("model_a", "model_b")))
    app = create_app(store)
    return TestClient(app), store


def bqa_body(annotator="ann1", label="yes", model="model_a"):
    return {
        "task_id": "t1",
        "item": {"prompt_id": "p1", "model_id": model, "image_path": f"images/{model}/p1.png"},
        "annotator_id": annotator,
        "mechanism": "bqa",
        "payload": {"answers": [{"question_uid": "c1", "label": label},
                                {"question_uid": "c2", "label": label}]},
        "ai_prefilled": False,
        "timestamp": "2026-01-01T00:00:00.000000Z",
    }


def test_list_tasks(service):
    client, _ = service
    response = client.get("/api/tasks")
    assert response.status_code == 200
    tasks = response.json()["tasks"]
    assert [t["id"] for t in tasks] == ["t1"]
    assert set(tasks[0]) >= {"id", "name", "enable_bqa_ai", "shuffle_images",
                             "annotations", "dataset_version", "prompts_file", "models"}


def test_post_then_visible_in_results(service):
    client, _ = service
    response = client.post("/api/annotations", json=bqa_body())
    assert response.status_code == 201
    assert response.json() == {"position": 0}
    results = client.get("/api/tasks/t1/results").json()
    assert results["cells"]["model_a"]["entities"]["mean"] == 1.0
    assert results["cells"]["model_a"]["attributes"]["mean"] == 1.0


def test_post_bad_mask_rejected(service):
    client, _ = service
    body = bqa_body()
    body["mechanism"] = "brush"
    body["payload"] = {"width": 4, "height": 4, "runs": [3, 2]}  # sum != 16
    response = client.post("/api/annotations", json=body)
    assert response.status_code == 400
    error = response.json()
    assert error["code"] == "invalid_payload"
    assert set(error) == {"code", "message", "detail"}


def test_unknown_task_404(service):
    client, _ = service
    response = client.get("/api/tasks/ghost/items")
    assert response.status_code == 404
    assert response.json()["code"] == "not_found"
    response = client.post("/api/annotations", json=dict(bqa_body(), task_id="ghost"))
    assert response.status_code == 404


def test_items_contain_dag_and_mechanisms(service):
    client, _ = service
    items = client.get("/api/tasks/t1/items").json()["items"]
    assert len(items) == 2  # one prompt x two models
    item = items[0]
    assert item["prompt_text"] == "A red car"
    uids = [n["uid"] for n in item["nodes"]]
    assert uids == ["c1", "c2"]
    assert item["nodes"][1]["depends_on"] == ["c1"]
    assert item["mechanisms"] == ["bqa", "brush"]


def test_shuffle_is_deterministic_per_annotator(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    prompts = []
    from skilleval.prompts import QuestionNode, TaggedPrompt

    for i in range(8):
        prompts.append(TaggedPrompt(
            f"p{i}", f"prompt {i}",
            (QuestionNode("q1", "entities", "singular", "x", "x?", "presence", ()),), "test"))
    save_tagged_prompts(prompts, store.root / "prompts.json")
    store.register_task(make_task(shuffle_images=True, models=("model_a",)))
    client = TestClient(create_app(store))

    def order(annotator):
        items = client.get(f"/api/tasks/t1/items?annotator_id={annotator}").json()["items"]
        return [i["prompt_id"] for i in items]

    assert order("alice") == order("alice")
    assert order("alice") != order("bob")  # 8! orders; collision vanishingly unlikely


def test_reliability_endpoint(service):
    client, _ = service
    client.post("/api/annotations", json=bqa_body("ann1", "yes"))
    client.post("/api/annotations", json=bqa_body("ann2", "yes"))
    client.post("/api/annotations", json=bqa_body("ann1", "no", model="model_b"))
    client.post("/api/annotations", json=bqa_body("ann2", "no", model="model_b"))
    response = client.get("/api/tasks/t1/reliability",
                          params={"selector": "mechanism=bqa", "bootstrap_samples": 100})
    assert response.status_code == 200
    report = response.json()
    assert report["alpha"] == 1.0
    assert report["n_annotators"] == 2
    response = client.get("/api/tasks/t1/reliability", params={"selector": "mechanism=brush"})
    assert response.status_code == 404


def test_anchor_endpoint(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    save_tagged_prompts([red_car_prompt], store.root / "prompts.json")
    store.register_task(make_task())
    for i in range(4):
        Image.new("RGB", (8, 8), (i * 40, 0, 0)).save(tmp_path / f"anchor{i}.png")
    manifest = {"eiffel tower": [{"path": f"anchor{i}.png"} for i in range(4)]}
    (tmp_path / "anchors.json").write_text(json.dumps(manifest))
    client = TestClient(create_app(store, anchors_file=tmp_path / "anchors.json"))
    response = client.get("/api/anchors", params={"key": "Eiffel  Tower", "k": 3})
    assert response.status_code == 200
    assert len(response.json()["anchors"]) == 3
    assert client.get("/api/anchors", params={"key": "atlantis"}).json()["anchors"] == []


def test_ai_prefill_cached_and_flagged(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    save_tagged_prompts([red_car_prompt], store.root / "prompts.json")
    store.register_task(make_task(enable_bqa_ai=True, models=("model_a",)))
    images = tmp_path / "images" / "model_a"
    images.mkdir(parents=True)
    Image.new("RGB", (8, 8), (9, 9, 9)).save(images / "p1.png")
    fake = FakeChatClient(["c1: yes\nc2: no", "SHOULD NOT BE CALLED"])
    client = TestClient(create_app(store, images_root=tmp_path / "images", agent_client=fake))

    items = client.get("/api/tasks/t1/items").json()["items"]
    assert items[0]["ai_prefill"] == {"c1": "yes", "c2": "no"}
    stored = store.records("t1")
    assert len(stored) == 1
    assert stored[0].ai_prefilled and stored[0].annotator_id == AI_ANNOTATOR_ID
    # second request served from the store, not the agent
    items = client.get("/api/tasks/t1/items").json()["items"]
    assert items[0]["ai_prefill"] == {"c1": "yes", "c2": "no"}
    assert len(fake.calls) == 1

    # prefilled answers excluded from scoring by default
    results = client.get("/api/tasks/t1/results").json()
    assert results["cells"] == {"model_a": {}}


def test_images_served_and_item_paths_fetchable(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    save_tagged_prompts([red_car_prompt], store.root / "prompts.json")
    store.register_task(make_task(models=("model_a",)))
    images = tmp_path / "images" / "model_a"
    images.mkdir(parents=True)
    Image.new("RGB", (8, 8), (1, 2, 3)).save(images / "p1.png")
    client = TestClient(create_app(store, images_root=tmp_path / "images"))
    item = client.get("/api/tasks/t1/items").json()["items"][0]
    assert item["image_path"] == "images/model_a/p1.png"
    response = client.get("/" + item["image_path"])
    assert response.status_code == 200
    assert response.content[:8] == b"\x89PNG\r\n\x1a\n"


def test_restart_does_not_change_results(tmp_path, red_car_prompt):
    store = AnnotationStore(tmp_path / "store")
    save_tagged_prompts([red_car_prompt], store.root / "prompts.json")
    store.register_task(make_task())
    client = TestClient(create_app(store))
    client.post("/api/annotations", json=bqa_body())
    before = client.get("/api/tasks/t1/results").json()

    fresh_store = AnnotationStore(tmp_path / "store")
    fresh_client = TestClient(create_app(fresh_store))
    after = fresh_client.get("/api/tasks/t1/results").json()
    assert before == after
