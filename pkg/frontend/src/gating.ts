// Dependency gating, mirroring the server's rule exactly: a question is
// disabled when any ancestor's current answer is "no". Unsure and unanswered
// parents never gate.

import type { BqaLabel, QuestionNode } from "./types.js";

export function disabledSet(
  nodes: QuestionNode[],
  answers: ReadonlyMap<string, BqaLabel>,
): Set<string> {
  const children = new Map<string, string[]>();
  for (const node of nodes) {
    for (const dep of node.depends_on) {
      const list = children.get(dep);
      if (list) list.push(node.uid);
      else children.set(dep, [node.uid]);
    }
  }
  const disabled = new Set<string>();
  const queue: string[] = [];
  for (const node of nodes) {
    if (answers.get(node.uid) === "no") queue.push(node.uid);
  }
  while (queue.length) {
    const uid = queue.shift()!;
    for (const child of children.get(uid) ?? []) {
      if (!disabled.has(child)) {
        disabled.add(child);
        queue.push(child);
      }
    }
  }
  return disabled;
}

// Answers to drop when gating changes: a disabled question keeps no answer.
export function clearedAnswers(
  answers: ReadonlyMap<string, BqaLabel>,
  disabled: ReadonlySet<string>,
): Map<string, BqaLabel> {
  const kept = new Map<string, BqaLabel>();
  for (const [uid, label] of answers) {
    if (!disabled.has(uid)) kept.set(uid, label);
  }
  return kept;
}
