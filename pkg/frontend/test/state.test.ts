import { describe, expect, it } from "vitest";

import {
  applyError,
  applyResponse,
  beginAsk,
  initialState,
  selectTable,
  selectTestQuestion,
  setQuestion,
  withTables,
} from "../src/state.js";
import type { AskResponse, TableDoc, TestQuestionEntry } from "../src/types.js";
import askFixture from "./fixtures/ask_response.json";

const response = askFixture.response as AskResponse;
const tables: TableDoc[] = [
  { table_id: "austria", columns: ["city"], rows: [["salzburg"]] },
  { table_id: "other", columns: ["x"], rows: [["a"]] },
];

describe("table selection", () => {
  it("defaults to the first bundled table", () => {
    const state = withTables(initialState(), tables);
    expect(state.activeTableId).toBe("austria");
  });

  it("switches tables and clears stale output", () => {
    let state = withTables(initialState(), tables);
    state = applyResponse(beginAsk(state).state, 1, response);
    state = selectTable(state, "other");
    expect(state.activeTableId).toBe("other");
    expect(state.lastResponse).toBeNull();
  });
});

describe("test-question selection", () => {
  const entry: TestQuestionEntry = {
    question: "what immigration salzburg",
    perturbation: "omit_words",
    expected: "170",
    adequate: true,
    table: { columns: ["city"], rows: [["salzburg"]] },
  };

  it("prefills the question and loads the sample's own table", () => {
    let state = withTables(initialState(), tables);
    state = { ...state, testQuestions: [entry] };
    state = selectTestQuestion(state, 0);
    expect(state.question).toBe(entry.question);
    expect(state.activeTable).toEqual(entry.table);
    expect(state.activeTableId).toBeNull(); // ask sends the inline table
  });
});

describe("ask lifecycle", () => {
  it("applies a response for the current token", () => {
    const begun = beginAsk(initialState());
    const state = applyResponse(begun.state, begun.token, response);
    expect(state.loading).toBe(false);
    expect(state.lastResponse).toBe(response);
  });

  it("discards stale responses", () => {
    const first = beginAsk(initialState());
    const second = beginAsk(first.state);
    const state = applyResponse(second.state, first.token, response);
    expect(state.lastResponse).toBeNull();
    expect(state.loading).toBe(true); // still waiting for the newer request
  });

  it("keeps the question on error so it can be edited and retried", () => {
    let state = setQuestion(initialState(), "what is the immigration in graz");
    const begun = beginAsk(state);
    state = applyError(begun.state, begun.token, "boom");
    expect(state.error).toBe("boom");
    expect(state.question).toBe("what is the immigration in graz");
    expect(state.loading).toBe(false);
  });

  it("re-asking the identical question yields identical state output", () => {
    const a = applyResponse(beginAsk(initialState()).state, 1, response);
    const again = beginAsk(a);
    const b = applyResponse(again.state, again.token, response);
    expect(b.lastResponse).toEqual(a.lastResponse);
  });
});
