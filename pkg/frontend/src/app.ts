// Application shell: pick a task, step through its items, and collect one
// payload per enabled mechanism. Everything submitted here is re-validated
// server-side; the client mirrors the same invariants to fail fast.

import { fetchItems, listTasks, nowTimestamp, submitAnnotation } from "./api.js";
import { createAnchorPopover } from "./anchorPopover.js";
import { createBqaForm, type BqaFormHandle } from "./bqaForm.js";
import { createBrushCanvas, type BrushHandle } from "./brush.js";
import { createPromptBrowser } from "./promptBrowser.js";
import { createWordTiles, type WordTileHandle } from "./wordTiles.js";
import { maskToWire, maskFromWire } from "./rle.js";
import type { AnnotationRecord, LikertAnswer, TaskConfig, TaskItem } from "./types.js";

interface AppState {
  task: TaskConfig | null;
  items: TaskItem[];
  index: number;
  annotatorId: string;
}

const state: AppState = { task: null, items: [], index: 0, annotatorId: "" };

function el<K extends keyof HTMLElementTagNameMap>(tag: K, className = "", text = ""): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function statusLine(message: string, kind: "ok" | "error" = "ok"): void {
  const bar = document.getElementById("status");
  if (!bar) return;
  bar.textContent = message;
  bar.className = kind;
}

async function saveRecord(mechanism: string, payload: AnnotationRecord["payload"], aiPrefilled = false): Promise<void> {
  const item = state.items[state.index];
  const record: AnnotationRecord = {
    task_id: state.task!.id,
    item: { prompt_id: item.prompt_id, model_id: item.model_id, image_path: item.image_path },
    annotator_id: state.annotatorId,
    mechanism,
    payload,
    ai_prefilled: aiPrefilled,
    timestamp: nowTimestamp(),
  };
  try {
    await submitAnnotation(record);
    statusLine(`saved ${mechanism} for ${item.prompt_id}/${item.model_id}`);
  } catch (error) {
    statusLine(`save failed: ${(error as Error).message}`, "error");
    throw error;
  }
}

function likertRow(label: string, scaleMin: number, scaleMax: number, onPick: (value: number) => void): HTMLElement {
  const row = el("div", "likert-row");
  row.append(el("span", "likert-label", label));
  for (let v = scaleMin; v <= scaleMax; v++) {
    const button = el("button", "", String(v));
    button.type = "button";
    button.addEventListener("click", () => {
      for (const other of row.querySelectorAll("button")) other.classList.toggle("selected", other === button);
      onPick(v);
    });
    row.append(button);
  }
  return row;
}

function renderItem(container: HTMLElement): void {
  container.innerHTML = "";
  const item = state.items[state.index];
  const task = state.task!;
  if (!item) {
    container.append(el("p", "", "No items in this task."));
    return;
  }

  container.append(el("h2", "", `${item.prompt_id} · ${item.model_id} (${state.index + 1}/${state.items.length})`));
  container.append(el("p", "prompt-text", item.prompt_text));

  const image = new Image();
  image.src = "/" + item.image_path.replace(/^\//, "");
  image.className = "item-image";
  container.append(image);

  const mechanisms = new Set(item.mechanisms);

  if (mechanisms.has("bqa") || mechanisms.has("anchor_bqa")) {
    const section = el("section", "mechanism-section");
    section.append(el("h3", "", "Validation questions"));
    const form: BqaFormHandle = createBqaForm(item.nodes, {
      aiPrefill: item.ai_prefill,
      anchorDecorator: (uid, row) => {
        const anchors = item.anchors[uid] ?? [];
        createAnchorPopover(row, {
          anchors,
          k: 3,
          onRate: (value) => {
            if (value === "unsure") return;
            const payload: LikertAnswer = { scope: uid, value, scale_min: 0, scale_max: 5 };
            void saveRecord("anchor_likert", payload);
          },
        });
      },
    });
    section.append(form.element);
    const save = el("button", "save-button", "Save answers");
    save.type = "button";
    save.addEventListener("click", () => {
      const payload = form.payload();
      if (payload.answers.length === 0) {
        statusLine("answer at least one question first", "error");
        return;
      }
      void saveRecord(mechanisms.has("anchor_bqa") ? "anchor_bqa" : "bqa", payload, form.hasUntouchedPrefill());
    });
    section.append(save);
    container.append(section);
  }

  if (mechanisms.has("word_level")) {
    const textNode = item.nodes.find((n) => n.skill === "text_rendering" && n.subskill === "accuracy");
    if (textNode) {
      const words = textNode.phrase.replace(/"/g, " ").split(/\s+/).filter(Boolean);
      if (words.length > 0) {
        const section = el("section", "mechanism-section");
        section.append(el("h3", "", "Expected text (click words and gaps)"));
        const tiles: WordTileHandle = createWordTiles(words);
        section.append(tiles.element);
        const save = el("button", "save-button", "Save word labels");
        save.type = "button";
        save.addEventListener("click", () => void saveRecord("word_level", tiles.sheet()));
        section.append(save);
        container.append(section);
      }
    }
  }

  if (mechanisms.has("brush")) {
    const section = el("section", "mechanism-section");
    section.append(el("h3", "", "Artifact brush"));
    let brush: BrushHandle | null = null;
    const start = () => {
      if (brush) return;
      brush = createBrushCanvas(image);
      section.insertBefore(brush.element, controls);
    };
    const controls = el("div", "brush-controls");
    const enable = el("button", "", "Enable brush");
    enable.type = "button";
    enable.addEventListener("click", start);
    const radius = document.createElement("input");
    radius.type = "range";
    radius.min = "2";
    radius.max = "64";
    radius.value = "12";
    radius.addEventListener("input", () => brush?.setRadius(Number(radius.value)));
    const erase = el("button", "", "Erase mode");
    erase.type = "button";
    erase.addEventListener("click", () => {
      const on = erase.classList.toggle("selected");
      brush?.setErase(on);
    });
    const clear = el("button", "", "Clear");
    clear.type = "button";
    clear.addEventListener("click", () => brush?.clear());
    const save = el("button", "save-button", "Save mask");
    save.type = "button";
    save.addEventListener("click", () => {
      if (!brush) {
        statusLine("enable the brush first", "error");
        return;
      }
      // round-trip through the wire format so what we send is exactly what decodes
      const mask = maskFromWire(maskToWire(brush.toMask()));
      void saveRecord("brush", mask);
    });
    controls.append(enable, radius, erase, clear, save);
    section.append(controls);
    container.append(section);
  }

  if (mechanisms.has("aesthetics")) {
    const section = el("section", "mechanism-section");
    section.append(el("h3", "", "Overall aesthetic quality"));
    section.append(
      likertRow("1-5", 1, 5, (value) => {
        const payload: LikertAnswer = { scope: "aesthetic_quality", value, scale_min: 1, scale_max: 5 };
        void saveRecord("aesthetics", payload);
      }),
    );
    container.append(section);
  }

  if (mechanisms.has("likert")) {
    const section = el("section", "mechanism-section");
    section.append(el("h3", "", "Overall rating"));
    section.append(
      likertRow("1-5", 1, 5, (value) => {
        const payload: LikertAnswer = { scope: "artifacts", value, scale_min: 1, scale_max: 5 };
        void saveRecord("likert", payload);
      }),
    );
    container.append(section);
  }

  const nav = el("div", "nav-row");
  const prev = el("button", "", "← Previous");
  prev.type = "button";
  prev.disabled = state.index === 0;
  prev.addEventListener("click", () => {
    state.index--;
    renderItem(container);
  });
  const next = el("button", "", "Next →");
  next.type = "button";
  next.disabled = state.index >= state.items.length - 1;
  next.addEventListener("click", () => {
    state.index++;
    renderItem(container);
  });
  nav.append(prev, next);
  container.append(nav);
}

export async function startApp(root: HTMLElement): Promise<void> {
  root.innerHTML = "";
  const header = el("div", "header");
  header.append(el("h1", "", "Image evaluation annotation"));
  const annotator = document.createElement("input");
  annotator.placeholder = "annotator id";
  annotator.id = "annotator";
  const taskSelect = document.createElement("select");
  const load = el("button", "", "Load task");
  load.type = "button";
  const browse = el("button", "", "Browse prompts");
  browse.type = "button";
  header.append(annotator, taskSelect, load, browse);
  const status = el("div", "ok");
  status.id = "status";
  const main = el("div", "main");
  root.append(header, status, main);

  const tasks = await listTasks();
  for (const task of tasks) {
    const option = document.createElement("option");
    option.value = task.id;
    option.textContent = `${task.name} (${task.id})`;
    taskSelect.append(option);
  }

  load.addEventListener("click", async () => {
    state.annotatorId = annotator.value.trim();
    if (!state.annotatorId) {
      statusLine("enter an annotator id first", "error");
      return;
    }
    state.task = tasks.find((t) => t.id === taskSelect.value) ?? null;
    if (!state.task) return;
    state.items = await fetchItems(state.task.id, state.annotatorId);
    state.index = 0;
    renderItem(main);
    statusLine(`loaded ${state.items.length} items`);
  });

  browse.addEventListener("click", async () => {
    state.task = tasks.find((t) => t.id === taskSelect.value) ?? null;
    if (!state.task) return;
    const items = await fetchItems(state.task.id, "");
    const seen = new Set<string>();
    const prompts = [];
    for (const item of items) {
      if (!seen.has(item.prompt_id)) {
        seen.add(item.prompt_id);
        prompts.push({ prompt_id: item.prompt_id, text: item.prompt_text, source: "", nodes: item.nodes });
      }
    }
    main.innerHTML = "";
    main.append(createPromptBrowser(prompts).element);
  });
}
