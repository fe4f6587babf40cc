/** Thin typed client for the backend JSON API. */

import type { ApiErrorBody, AskResponse, HealthInfo, TableDoc, TestQuestionEntry } from "./types.js";

const API_BASE = (globalThis as { API_BASE?: string }).API_BASE ?? "";

async function parseError(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as ApiErrorBody;
    return body.error?.message ?? `request failed (${response.status})`;
  } catch {
    return `request failed (${response.status})`;
  }
}

async function getJson<T>(path: string): Promise<T> {
  const response = await fetch(`${API_BASE}${path}`);
  if (!response.ok) {
    throw new Error(await parseError(response));
  }
  return (await response.json()) as T;
}

export function getHealth(): Promise<HealthInfo> {
  return getJson<HealthInfo>("/health");
}

export function getTables(): Promise<TableDoc[]> {
  return getJson<TableDoc[]>("/api/tables");
}

export function getTestQuestions(): Promise<TestQuestionEntry[]> {
  return getJson<TestQuestionEntry[]>("/api/test-questions");
}

export interface AskPayload {
  question: string;
  table?: { columns: string[]; rows: string[][] };
  table_id?: string;
}

/** Exactly one of table/table_id, per the API contract. */
export function buildAskPayload(
  question: string,
  table: TableDoc | null,
  tableId: string | null,
): AskPayload {
  if (tableId !== null) {
    return { question, table_id: tableId };
  }
  if (table !== null) {
    return { question, table: { columns: table.columns, rows: table.rows } };
  }
  throw new Error("no table selected");
}

export async function askQuestion(payload: AskPayload): Promise<AskResponse> {
  const response = await fetch(`${API_BASE}/api/ask`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
  if (!response.ok) {
    throw new Error(await parseError(response));
  }
  return (await response.json()) as AskResponse;
}
