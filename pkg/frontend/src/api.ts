// Typed client for the evaluation service. All scoring happens server-side;
// this client only moves validated payloads.

import type { AnnotationRecord, TaskConfig, TaskItem } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly detail: string = "",
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(body.code ?? "io", body.message ?? response.statusText, body.detail ?? "");
  }
  return body as T;
}

export async function listTasks(): Promise<TaskConfig[]> {
  const body = await request<{ tasks: TaskConfig[] }>("/api/tasks");
  return body.tasks;
}

export async function fetchItems(taskId: string, annotatorId: string): Promise<TaskItem[]> {
  const query = annotatorId ? `?annotator_id=${encodeURIComponent(annotatorId)}` : "";
  const body = await request<{ items: TaskItem[] }>(`/api/tasks/${encodeURIComponent(taskId)}/items${query}`);
  return body.items;
}

export async function submitAnnotation(record: AnnotationRecord): Promise<number> {
  const body = await request<{ position: number }>("/api/annotations", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(record),
  });
  return body.position;
}

export async function fetchAnchors(key: string, k = 3): Promise<string[]> {
  const body = await request<{ anchors: string[] }>(
    `/api/anchors?key=${encodeURIComponent(key)}&k=${k}`,
  );
  return body.anchors;
}

// Server logs use microsecond precision; pad JS milliseconds to match.
export function nowTimestamp(): string {
  return new Date().toISOString().replace(/\.(\d{3})Z$/, ".$1000Z");
}
