// Prompt browser: skill/sub-skill distribution across the loaded prompts and
// a per-prompt detail view showing questions with their dependency edges.

import type { TaggedPrompt } from "./types.js";

export function skillCounts(prompts: TaggedPrompt[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const prompt of prompts) {
    for (const node of prompt.nodes) {
      const key = node.subskill ? `${node.skill}/${node.subskill}` : node.skill;
      counts.set(key, (counts.get(key) ?? 0) + 1);
    }
  }
  return counts;
}

export interface PromptBrowserHandle {
  element: HTMLElement;
  showPrompt(promptId: string): void;
}

export function createPromptBrowser(prompts: TaggedPrompt[]): PromptBrowserHandle {
  const root = document.createElement("div");
  root.className = "prompt-browser";

  const chart = document.createElement("div");
  chart.className = "skill-chart";
  const counts = skillCounts(prompts);
  const max = Math.max(1, ...counts.values());
  for (const [key, count] of [...counts.entries()].sort((a, b) => b[1] - a[1])) {
    const row = document.createElement("div");
    row.className = "skill-bar-row";
    const label = document.createElement("span");
    label.className = "skill-bar-label";
    label.textContent = `${key} (${count})`;
    const bar = document.createElement("span");
    bar.className = "skill-bar";
    bar.style.width = `${Math.round((count / max) * 100)}%`;
    row.append(label, bar);
    chart.append(row);
  }
  root.append(chart);

  const list = document.createElement("ul");
  list.className = "prompt-list";
  const detail = document.createElement("div");
  detail.className = "prompt-detail";

  function showPrompt(promptId: string): void {
    const prompt = prompts.find((p) => p.prompt_id === promptId);
    detail.innerHTML = "";
    if (!prompt) return;
    const title = document.createElement("h3");
    title.textContent = `${prompt.prompt_id}: ${prompt.text}`;
    detail.append(title);
    const nodes = document.createElement("ul");
    for (const node of prompt.nodes) {
      const li = document.createElement("li");
      const deps = node.depends_on.length ? ` — depends on ${node.depends_on.join(", ")}` : "";
      const subskill = node.subskill ? `/${node.subskill}` : "";
      li.textContent = `[${node.uid}] ${node.skill}${subskill} (${node.node_type}): ${node.question}${deps}`;
      nodes.append(li);
    }
    detail.append(nodes);
  }

  for (const prompt of prompts) {
    const li = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = `${prompt.prompt_id} — ${prompt.text}`;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      showPrompt(prompt.prompt_id);
    });
    li.append(link);
    list.append(li);
  }
  root.append(list, detail);

  return { element: root, showPrompt };
}
