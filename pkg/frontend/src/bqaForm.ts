// Binary-question form with live dependency gating: answering "no" disables
// every descendant question and clears its answer; flipping back re-enables.
// AI-suggested answers carry a visible badge until the annotator touches them.

import { clearedAnswers, disabledSet } from "./gating.js";
import type { BqaAnswerSet, BqaLabel, QuestionNode } from "./types.js";

export interface BqaFormOptions {
  allowUnsure?: boolean;
  aiPrefill?: Record<string, BqaLabel>;
  anchorDecorator?: (uid: string, row: HTMLElement) => void;
  onChange?: (answers: ReadonlyMap<string, BqaLabel>) => void;
}

export interface BqaFormHandle {
  element: HTMLElement;
  answers(): ReadonlyMap<string, BqaLabel>;
  disabled(): ReadonlySet<string>;
  setAnswer(uid: string, label: BqaLabel | null): void;
  /** true when any remaining answer came from the AI prefill untouched */
  hasUntouchedPrefill(): boolean;
  payload(): BqaAnswerSet;
}

const LABELS: BqaLabel[] = ["yes", "no", "unsure"];

export function createBqaForm(nodes: QuestionNode[], opts: BqaFormOptions = {}): BqaFormHandle {
  const allowUnsure = opts.allowUnsure ?? true;
  let answers = new Map<string, BqaLabel>();
  const aiTouched = new Set<string>();
  const prefill = opts.aiPrefill ?? {};
  for (const [uid, label] of Object.entries(prefill)) {
    answers.set(uid, label);
  }

  const form = document.createElement("div");
  form.className = "bqa-form";
  const rows = new Map<string, HTMLElement>();
  const buttons = new Map<string, Map<BqaLabel, HTMLButtonElement>>();
  const badges = new Map<string, HTMLElement>();

  for (const node of nodes) {
    const row = document.createElement("div");
    row.className = "bqa-row";
    row.dataset.uid = node.uid;
    const question = document.createElement("span");
    question.className = "bqa-question";
    question.textContent = node.question;
    row.append(question);

    const badge = document.createElement("span");
    badge.className = "ai-badge";
    badge.textContent = "AI";
    badge.hidden = !(node.uid in prefill);
    row.append(badge);
    badges.set(node.uid, badge);

    const group = document.createElement("span");
    group.className = "bqa-buttons";
    const perLabel = new Map<BqaLabel, HTMLButtonElement>();
    for (const label of LABELS) {
      if (label === "unsure" && !allowUnsure) continue;
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = label;
      button.dataset.label = label;
      button.addEventListener("click", () => {
        aiTouched.add(node.uid);
        const current = answers.get(node.uid);
        setAnswer(node.uid, current === label ? null : label);
      });
      perLabel.set(label, button);
      group.append(button);
    }
    buttons.set(node.uid, perLabel);
    row.append(group);
    if (opts.anchorDecorator) opts.anchorDecorator(node.uid, row);
    form.append(row);
    rows.set(node.uid, row);
  }

  function refresh(): void {
    const disabled = disabledSet(nodes, answers);
    answers = clearedAnswers(answers, disabled);
    for (const node of nodes) {
      const row = rows.get(node.uid)!;
      const isDisabled = disabled.has(node.uid);
      row.classList.toggle("disabled", isDisabled);
      for (const [label, button] of buttons.get(node.uid)!) {
        button.disabled = isDisabled;
        button.classList.toggle("selected", answers.get(node.uid) === label);
      }
      const badge = badges.get(node.uid)!;
      badge.hidden = !(node.uid in prefill) || aiTouched.has(node.uid) || !answers.has(node.uid);
    }
    opts.onChange?.(answers);
  }

  function setAnswer(uid: string, label: BqaLabel | null): void {
    if (!rows.has(uid)) throw new Error(`unknown question uid ${uid}`);
    if (label === null) answers.delete(uid);
    else answers.set(uid, label);
    refresh();
  }

  refresh();

  return {
    element: form,
    answers: () => answers,
    disabled: () => disabledSet(nodes, answers),
    setAnswer,
    hasUntouchedPrefill() {
      for (const uid of answers.keys()) {
        if (uid in prefill && !aiTouched.has(uid)) return true;
      }
      return false;
    },
    payload(): BqaAnswerSet {
      return {
        answers: [...answers.entries()].map(([question_uid, label]) => ({ question_uid, label })),
      };
    },
  };
}
