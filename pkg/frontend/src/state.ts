/** View state and transitions. One in-flight ask at a time; responses
 * carry the request token that started them and stale ones are dropped. */

import type { AskResponse, TableDoc, TestQuestionEntry } from "./types.js";

export interface ViewState {
  tables: TableDoc[];
  testQuestions: TestQuestionEntry[];
  /** The table the next question is asked against. */
  activeTable: TableDoc | null;
  /** Set when activeTable is a bundled sample (ask by id). */
  activeTableId: string | null;
  question: string;
  loading: boolean;
  requestToken: number;
  lastResponse: AskResponse | null;
  error: string | null;
  sortHop: number | null;
}

export function initialState(): ViewState {
  return {
    tables: [],
    testQuestions: [],
    activeTable: null,
    activeTableId: null,
    question: "",
    loading: false,
    requestToken: 0,
    lastResponse: null,
    error: null,
    sortHop: null,
  };
}

export function withTables(state: ViewState, tables: TableDoc[]): ViewState {
  const first = tables.length > 0 ? tables[0] : null;
  return {
    ...state,
    tables,
    activeTable: state.activeTable ?? first,
    activeTableId: state.activeTableId ?? first?.table_id ?? null,
  };
}

export function selectTable(state: ViewState, tableId: string): ViewState {
  const table = state.tables.find((t) => t.table_id === tableId);
  if (!table) {
    return state;
  }
  return { ...state, activeTable: table, activeTableId: tableId, lastResponse: null, error: null };
}

/** Picking a held-out test question loads its own table and pre-fills
 * the question box; one click on ask sends it. */
export function selectTestQuestion(state: ViewState, index: number): ViewState {
  const entry = state.testQuestions[index];
  if (!entry) {
    return state;
  }
  return {
    ...state,
    activeTable: entry.table,
    activeTableId: null,
    question: entry.question,
    lastResponse: null,
    error: null,
  };
}

export function beginAsk(state: ViewState): { state: ViewState; token: number } {
  const token = state.requestToken + 1;
  return { state: { ...state, loading: true, requestToken: token }, token };
}

/** Apply a response unless a newer request superseded it. */
export function applyResponse(state: ViewState, token: number, response: AskResponse): ViewState {
  if (token !== state.requestToken) {
    return state;
  }
  return { ...state, loading: false, lastResponse: response, error: null, sortHop: null };
}

/** Errors keep the question and table so the user can edit and retry. */
export function applyError(state: ViewState, token: number, message: string): ViewState {
  if (token !== state.requestToken) {
    return state;
  }
  return { ...state, loading: false, error: message };
}

export function setQuestion(state: ViewState, question: string): ViewState {
  return { ...state, question };
}

export function setSortHop(state: ViewState, hop: number | null): ViewState {
  return { ...state, sortHop: hop };
}
